//! Dense two-phase simplex for the tiny linear programs behind polyhedral
//! dual norms and hull-membership tests. Bland's rule keeps it cycle-free.

use crate::error::{Error, Result};

const EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

/// Minimizes `cost · x` subject to `a x = b`, `x ≥ 0`.
pub fn minimize(cost: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let m = a.len();
    let n = cost.len();
    if b.len() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: b.len() });
    }
    if let Some(row) = a.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, actual: row.len() });
    }
    let width = n + m + 1;
    let rhs = n + m;
    let mut tab: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (i, (row, &bi)) in a.iter().zip(b).enumerate() {
        let sign = if bi < 0.0 { -1.0 } else { 1.0 };
        let mut t = vec![0.0; width];
        for j in 0..n {
            t[j] = sign * row[j];
        }
        t[n + i] = 1.0;
        t[rhs] = sign * bi;
        tab.push(t);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let mut phase1 = vec![0.0; n + m];
    for v in phase1.iter_mut().skip(n) {
        *v = 1.0;
    }
    run(&mut tab, &mut basis, &phase1, n + m)?;
    let infeasibility: f64 = basis.iter().zip(&tab).filter(|(&bv, _)| bv >= n).map(|(_, r)| r[rhs]).sum();
    let scale = 1.0 + b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if infeasibility > 1e-9 * scale {
        return Err(Error::Infeasible);
    }
    // Drive zero-level artificials out of the basis where possible.
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| tab[i][j].abs() > EPS) {
                pivot(&mut tab, &mut basis, i, j);
            }
        }
    }
    let mut phase2 = cost.to_vec();
    phase2.extend(std::iter::repeat(0.0).take(m));
    run(&mut tab, &mut basis, &phase2, n)?;

    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab[i][rhs].max(0.0);
        }
    }
    let value = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { value, x })
}

/// Whether `target` is a convex combination of `points`.
pub fn in_convex_hull(points: &[Vec<f64>], target: &[f64]) -> bool {
    if points.is_empty() {
        return false;
    }
    let dim = target.len();
    let mut a: Vec<Vec<f64>> = (0..dim).map(|d| points.iter().map(|p| p[d]).collect()).collect();
    a.push(vec![1.0; points.len()]);
    let mut b = target.to_vec();
    b.push(1.0);
    minimize(&vec![0.0; points.len()], &a, &b).is_ok()
}

fn run(tab: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: usize) -> Result<()> {
    let rhs = tab.first().map_or(0, |r| r.len() - 1);
    for _ in 0..MAX_PIVOTS {
        let entering = (0..allowed).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let reduced = cost[j] - basis.iter().zip(tab.iter()).map(|(&bv, r)| cost[bv] * r[j]).sum::<f64>();
            reduced < -EPS
        });
        let Some(j) = entering else { return Ok(()) };
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in tab.iter().enumerate() {
            if row[j] > EPS {
                let ratio = row[rhs] / row[j];
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - EPS || (ratio <= br + EPS && basis[i] < basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        let Some((i, _)) = best else { return Err(Error::Unbounded) };
        pivot(tab, basis, i, j);
    }
    Ok(())
}

fn pivot(tab: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let p = tab[row][col];
    for v in tab[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = tab[row].clone();
    for (i, r) in tab.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let f = r[col];
        if f != 0.0 {
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
    }
    basis[row] = col;
}
