//! Brute-force grid oracles for `‖T‖_G` and `ν_G(T)` on real spaces of
//! dimension ≤ 3. They use nothing but norm and dual-norm evaluations, so
//! they are independent of the structured solvers they check.
//!
//! A coarse direction grid (circle or Fibonacci sphere) is filtered by a
//! linear band `‖Gx‖ ≥ 1 − L·h`, and the best candidates are refined on
//! ever finer local tangent grids.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{c, C64};
use crate::operators::OperatorSpec;
use crate::spaces::{Field, SpaceSpec};

pub const ORACLE_DIM_CAP: usize = 3;
const MAX_CANDIDATES: usize = 200;
const MAX_PAIR_CANDIDATES: usize = 60;
const GNORM_FINAL_H: f64 = 1e-10;
const NU_FINAL_H: f64 = 1e-7;
const MAX_LEVELS: usize = 40;

type Dir = Vec<f64>;

fn check_real(s: &SpaceSpec) -> Result<()> {
    if s.field() != Field::Real {
        return Err(Error::ComplexUnsupported);
    }
    if s.dim() > ORACLE_DIM_CAP {
        return Err(Error::DimensionCap { dim: s.dim(), cap: ORACLE_DIM_CAP });
    }
    Ok(())
}

/// Unit (Euclidean) directions with their covering radius.
fn base_grid(dim: usize, res: usize) -> (Vec<Dir>, f64) {
    match dim {
        1 => (vec![vec![1.0], vec![-1.0]], 0.0),
        2 => {
            let pts = (0..res)
                .map(|k| {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / res as f64;
                    vec![th.cos(), th.sin()]
                })
                .collect();
            (pts, std::f64::consts::PI / res as f64)
        }
        _ => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            let pts = (0..res)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / res as f64;
                    let r = (1.0 - z * z).sqrt();
                    let ph = golden * k as f64;
                    vec![r * ph.cos(), r * ph.sin(), z]
                })
                .collect();
            (pts, (4.0 * std::f64::consts::PI / res as f64).sqrt())
        }
    }
}

fn unit(v: Dir) -> Dir {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn tangents(u: &[f64]) -> Vec<Dir> {
    match u.len() {
        1 => vec![],
        2 => vec![vec![-u[1], u[0]]],
        _ => {
            let a = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let t1 = unit(vec![u[1] * a[2] - u[2] * a[1], u[2] * a[0] - u[0] * a[2], u[0] * a[1] - u[1] * a[0]]);
            let t2 = vec![u[1] * t1[2] - u[2] * t1[1], u[2] * t1[0] - u[0] * t1[2], u[0] * t1[1] - u[1] * t1[0]];
            vec![t1, t2]
        }
    }
}

/// Local grid spanning `±2h` around `u` with `m` points per tangent axis;
/// returns the points and the new covering radius.
fn local_grid(u: &[f64], h: f64, m: usize) -> (Vec<Dir>, f64) {
    let ts = tangents(u);
    let offs: Vec<f64> = (0..m).map(|i| -2.0 * h + 4.0 * h * i as f64 / (m - 1) as f64).collect();
    let spacing = 4.0 * h / (m - 1) as f64;
    match ts.len() {
        0 => (vec![u.to_vec()], 0.0),
        1 => (offs.iter().map(|&a| unit(u.iter().zip(&ts[0]).map(|(x, t)| x + a * t).collect())).collect(), spacing / 2.0),
        _ => {
            let mut pts = Vec::with_capacity(m * m);
            for &a in &offs {
                for &b in &offs {
                    pts.push(unit((0..3).map(|d| u[d] + a * ts[0][d] + b * ts[1][d]).collect()));
                }
            }
            (pts, spacing / 2.0 * 2f64.sqrt())
        }
    }
}

fn to_c(v: &[f64]) -> Vec<C64> {
    v.iter().map(|&x| c(x)).collect()
}

/// Radially normalized point of `space` in direction `u`.
fn on_sphere(space: &SpaceSpec, u: &[f64]) -> Vec<f64> {
    let n = space.norm(&to_c(u));
    u.iter().map(|x| x / n).collect()
}

/// `max ‖u‖ / min ‖u‖` over Euclidean unit directions, sampled on `pts`.
fn distortion(space: &SpaceSpec, pts: &[Dir]) -> f64 {
    let (lo, hi) = pts.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), u| {
        let n = space.norm(&to_c(u));
        (lo.min(n), hi.max(n))
    });
    hi / lo
}

fn real_apply(t: &OperatorSpec, x: &[f64]) -> Vec<f64> {
    let m = t.matrix();
    (0..m.rows()).map(|i| m.row(i).iter().zip(x).map(|(a, b)| a.re * b).sum()).collect()
}

fn rnorm(s: &SpaceSpec, v: &[f64]) -> f64 {
    s.norm(&to_c(v))
}

/// Covering radius after refining a grid of radius `h` with `m` points per
/// tangent axis.
fn refined_radius(dim: usize, h: f64, m: usize) -> f64 {
    let spacing = 4.0 * h / (m - 1) as f64;
    if dim == 2 { spacing / 2.0 } else { spacing / 2.0 * 2f64.sqrt() }
}

/// Orders band points for refinement. Two rankings are interleaved: by
/// `value − λ·(1 − constraint)` within `margin` of the best score, and by the
/// constraint value alone.
///
/// Near a maximizer of the constraint its deficit grows quadratically with
/// the distance, so a linear band admits points about `√h` away whose values
/// overshoot; the penalty with `λ ∝ 1/h` pulls the refinement back toward
/// the feasible set. A near-maximizer of the constraint that is not in M_G
/// can still outscore the true optimum at coarse levels, and the second
/// ranking keeps the neighborhoods of M_G itself alive until the band
/// excludes it.
fn rank_candidates<K: Clone>(evals: Vec<(f64, f64, K)>, lambda: f64, margin: f64) -> Vec<K> {
    let mut by_score: Vec<(f64, usize)> =
        evals.iter().enumerate().map(|(i, (v, gv, _))| (v - lambda * (1.0 - gv).max(0.0), i)).collect();
    let top = by_score.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
    by_score.retain(|e| e.0 >= top - margin);
    by_score.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut by_constraint: Vec<usize> = (0..evals.len()).collect();
    by_constraint.sort_by(|&a, &b| evals[b].1.total_cmp(&evals[a].1).then(a.cmp(&b)));
    let mut order = Vec::with_capacity(by_score.len() + by_constraint.len());
    let mut a = by_score.into_iter().map(|e| e.1);
    let mut b = by_constraint.into_iter();
    loop {
        match (a.next(), b.next()) {
            (None, None) => break,
            (x, y) => order.extend(x.into_iter().chain(y)),
        }
    }
    order.into_iter().map(|i| evals[i].2.clone()).collect()
}

fn dedup_directions(cands: Vec<Dir>, radius: f64, cap: usize) -> Vec<Dir> {
    let mut kept: Vec<Dir> = Vec::new();
    for u in cands {
        if kept.len() >= cap {
            break;
        }
        if !kept.iter().any(|k| k.iter().zip(&u).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < radius) {
            kept.push(u);
        }
    }
    kept
}

/// Grid estimate of `‖T‖_G` and its maximizing point.
pub fn grid_gnorm(t: &OperatorSpec, g: &OperatorSpec, res: usize) -> Result<(f64, Vec<C64>)> {
    let x = g.domain();
    check_real(x)?;
    g.check_same_domain(t)?;
    let (mut pts, mut h) = base_grid(x.dim(), res.max(8));
    let kx = distortion(x, &pts);
    let tmax = pts.iter().map(|u| rnorm(t.codomain(), &real_apply(t, &on_sphere(x, u)))).fold(0.0, f64::max);
    let gmax = pts.iter().map(|u| rnorm(g.codomain(), &real_apply(g, &on_sphere(x, u)))).fold(0.0, f64::max).max(1.0);
    let m = 21;
    let mut prev: Option<(f64, Dir)> = None;
    for level in 0..MAX_LEVELS {
        let band = 1.0 - 2.0 * kx * gmax * h;
        let evals: Vec<Option<(f64, f64, Dir)>> = pts
            .par_iter()
            .map(|u| {
                let p = on_sphere(x, u);
                let gv = rnorm(g.codomain(), &real_apply(g, &p));
                (gv >= band).then(|| (rnorm(t.codomain(), &real_apply(t, &p)), gv, u.clone()))
            })
            .collect();
        let evals: Vec<(f64, f64, Dir)> = evals.into_iter().flatten().collect();
        if evals.is_empty() {
            let (v, u) = prev.ok_or(Error::Infeasible)?;
            return Ok((v, to_c(&on_sphere(x, &u))));
        }
        let best = evals.iter().fold((f64::NEG_INFINITY, &evals[0].2), |a, b| if b.0 > a.0 { (b.0, &b.2) } else { a });
        let best = (best.0, best.1.clone());
        if h <= GNORM_FINAL_H || level + 1 == MAX_LEVELS || x.dim() == 1 {
            return Ok((best.0, to_c(&on_sphere(x, &best.1))));
        }
        prev = Some(best);
        let ranked = rank_candidates(evals, tmax / h, 4.0 * kx * tmax * h);
        let kept = dedup_directions(ranked, h, MAX_CANDIDATES);
        pts = kept.iter().flat_map(|u| local_grid(u, h, m).0).collect();
        h = refined_radius(x.dim(), h, m);
    }
    unreachable!("the level loop returns")
}

/// Grid estimate of `ν_G(T)`: pairs `(x, y*)` on `S_X × S_{Y*}` with
/// `y*(Gx) ≥ 1 − η`, maximizing `|y*(Tx)|`.
pub fn grid_nu(t: &OperatorSpec, g: &OperatorSpec, res: usize) -> Result<(f64, Vec<C64>, Vec<C64>)> {
    let x = g.domain();
    check_real(x)?;
    g.check_compatible(t)?;
    let ystar_space = g.codomain().dual()?;
    let (mut xs, mut hx) = base_grid(x.dim(), res.max(8));
    let (mut ys, mut hy) = base_grid(ystar_space.dim(), res.max(8));
    let kx = distortion(x, &xs);
    let ky = distortion(&ystar_space, &ys);
    let tmax = xs.iter().map(|u| rnorm(t.codomain(), &real_apply(t, &on_sphere(x, u)))).fold(0.0, f64::max);
    let gmax = xs.iter().map(|u| rnorm(g.codomain(), &real_apply(g, &on_sphere(x, u)))).fold(0.0, f64::max).max(1.0);
    let m = if x.dim() == 2 { 21 } else { 11 };
    let mut pair_cands: Vec<(Dir, Dir)> = Vec::new();
    let mut prev: Option<(f64, Dir, Dir)> = None;
    for level in 0..MAX_LEVELS {
        let eta = 2.0 * kx * gmax * hx + 2.0 * ky * gmax * hy;
        let xp: Vec<(Vec<f64>, Vec<f64>, Dir)> = xs
            .iter()
            .map(|u| {
                let p = on_sphere(x, u);
                (real_apply(g, &p), real_apply(t, &p), u.clone())
            })
            .collect();
        let gnorms: Vec<f64> = xp.iter().map(|(gx, _, _)| rnorm(g.codomain(), gx)).collect();
        let yp: Vec<(Vec<f64>, Dir)> = ys.iter().map(|u| (on_sphere(&ystar_space, u), u.clone())).collect();
        // pairs to evaluate: the full product at level 0, local products later
        let groups: Vec<(Vec<usize>, Vec<usize>)> = if level == 0 {
            vec![((0..xp.len()).collect(), (0..yp.len()).collect())]
        } else {
            let per_x = xs.len() / pair_cands.len().max(1);
            let per_y = ys.len() / pair_cands.len().max(1);
            (0..pair_cands.len()).map(|k| ((k * per_x..(k + 1) * per_x).collect(), (k * per_y..(k + 1) * per_y).collect())).collect()
        };
        let found: Vec<(f64, f64, (usize, usize))> = groups
            .par_iter()
            .flat_map_iter(|(xi, yi)| {
                let mut out = Vec::new();
                // y*(Gx) ≤ ‖Gx‖, so x outside the band never pairs
                for &i in xi.iter().filter(|&&i| gnorms[i] >= 1.0 - eta) {
                    let (gx, tx, _) = &xp[i];
                    for &j in yi {
                        let y = &yp[j].0;
                        let a: f64 = y.iter().zip(gx).map(|(p, q)| p * q).sum();
                        if a >= 1.0 - eta {
                            let v: f64 = y.iter().zip(tx).map(|(p, q)| p * q).sum::<f64>().abs();
                            out.push((v, a, (i, j)));
                        }
                    }
                }
                out
            })
            .collect();
        if found.is_empty() {
            let (v, u, w) = prev.ok_or(Error::Infeasible)?;
            return Ok((v, to_c(&on_sphere(x, &u)), to_c(&w)));
        }
        let best = found.iter().fold(&found[0], |a, b| if b.0 > a.0 { b } else { a });
        let (bi, bj) = best.2;
        let best = (best.0, xp[bi].2.clone(), yp[bj].0.clone());
        let h = hx.max(hy);
        if h <= NU_FINAL_H || level + 1 == MAX_LEVELS {
            return Ok((best.0, to_c(&on_sphere(x, &best.1)), to_c(&best.2)));
        }
        prev = Some(best);
        let margin = 4.0 * (kx * tmax * hx + ky * tmax * hy);
        let ranked = rank_candidates(found, tmax / h, margin);
        let mut kept: Vec<(Dir, Dir)> = Vec::new();
        let close = |a: &Dir, b: &Dir, r: f64| a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt() < r;
        for (i, j) in ranked {
            if kept.len() >= MAX_PAIR_CANDIDATES {
                break;
            }
            let (u, w) = (&xp[i].2, &yp[j].1);
            if !kept.iter().any(|(a, b)| close(a, u, hx) && close(b, w, hy)) {
                kept.push((u.clone(), w.clone()));
            }
        }
        let mut nxs = Vec::new();
        let mut nys = Vec::new();
        let (mut nhx, mut nhy) = (hx, hy);
        for (u, w) in &kept {
            let (p, r) = local_grid(u, hx, m);
            nxs.extend(p);
            nhx = r;
            let (q, r) = local_grid(w, hy, m);
            nys.extend(q);
            nhy = r;
        }
        xs = nxs;
        ys = nys;
        hx = nhx;
        hy = nhy;
        pair_cands = kept;
    }
    unreachable!("the level loop returns")
}
