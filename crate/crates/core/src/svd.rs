//! One-sided Hestenes–Jacobi singular value decomposition over ℂ.

use crate::error::{Error, Result};
use crate::linalg::{c, inner, norm2, phase, Matrix, C64, ZERO};

pub const SVD_DIM_CAP: usize = 64;
const MAX_SWEEPS: usize = 80;

/// `A = Σ_j s_j v_j u_jᴴ` with `v_j` (left, codomain) and `u_j` (right,
/// domain). Both bases are completed to full orthonormal bases.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    /// Columns `v_1..v_m`.
    pub left_vectors: Vec<Vec<C64>>,
    /// Columns `u_1..u_n`.
    pub right_vectors: Vec<Vec<C64>>,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let m = self.left_vectors.len();
        let n = self.right_vectors.len();
        let mut a = Matrix::zeros(m, n);
        for (j, &s) in self.singular_values.iter().enumerate() {
            let o = Matrix::outer(&self.left_vectors[j], &self.right_vectors[j]).scaled(c(s));
            a = a.add(&o);
        }
        a
    }
}

pub fn svd(a: &Matrix) -> Result<SvdResult> {
    if a.rows() > SVD_DIM_CAP || a.cols() > SVD_DIM_CAP {
        return Err(Error::DimensionCap { dim: a.rows().max(a.cols()), cap: SVD_DIM_CAP });
    }
    if a.rows() < a.cols() {
        let t = svd(&a.adjoint())?;
        return Ok(SvdResult {
            singular_values: t.singular_values,
            left_vectors: t.right_vectors,
            right_vectors: t.left_vectors,
        });
    }
    let m = a.rows();
    let n = a.cols();
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut e = vec![ZERO; n];
            e[j] = c(1.0);
            e
        })
        .collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = norm2(&cols[p]).powi(2);
                let beta = norm2(&cols[q]).powi(2);
                let gamma = inner(&cols[p], &cols[q]);
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                // make the off-diagonal entry real, then apply a real rotation
                let ph = phase(gamma).conj();
                for z in cols[q].iter_mut() {
                    *z *= ph;
                }
                for z in v[q].iter_mut() {
                    *z *= ph;
                }
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate(&mut cols, p, q, cs, sn);
                rotate(&mut v, p, q, cs, sn);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = cols.iter().map(|col| norm2(col)).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let scale = norms.iter().fold(0.0f64, |s, &x| s.max(x));
    let mut svals = Vec::with_capacity(n);
    let mut left: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut right: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut pending: Vec<usize> = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        svals.push(s);
        right.push(v[j].clone());
        if s > 1e-13 * scale.max(1e-300) && s > 0.0 {
            left.push(cols[j].iter().map(|z| z / s).collect());
        } else {
            left.push(vec![ZERO; m]);
            pending.push(k);
        }
    }
    // complete the left basis for zero singular values and the extra rows
    let mut basis: Vec<Vec<C64>> = left.iter().enumerate().filter(|(k, _)| !pending.contains(k)).map(|(_, l)| l.clone()).collect();
    let mut extra = complete_basis(&mut basis, m);
    for k in pending {
        left[k] = extra.remove(0);
    }
    left.extend(extra);
    for j in 0..n {
        let r = canonical_phase(&right[j]);
        right[j] = right[j].iter().map(|z| z * r).collect();
        left[j] = left[j].iter().map(|z| z * r).collect();
    }
    for j in n..m {
        let r = canonical_phase(&left[j]);
        left[j] = left[j].iter().map(|z| z * r).collect();
    }
    Ok(SvdResult { singular_values: svals, left_vectors: left, right_vectors: right })
}

fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, cs: f64, sn: f64) {
    for k in 0..cols[p].len() {
        let a = cols[p][k];
        let b = cols[q][k];
        cols[p][k] = a * cs - b * sn;
        cols[q][k] = a * sn + b * cs;
    }
}

/// Unimodular factor making the largest-modulus coordinate positive real.
fn canonical_phase(x: &[C64]) -> C64 {
    let mut k = 0;
    for i in 1..x.len() {
        if x[i].norm() > x[k].norm() + 1e-12 {
            k = i;
        }
    }
    phase(x[k]).conj()
}

/// Extends the orthonormal `basis` of a subspace of ℂ^m by Gram–Schmidt on
/// the standard basis and returns the new vectors.
fn complete_basis(basis: &mut Vec<Vec<C64>>, m: usize) -> Vec<Vec<C64>> {
    let mut added = Vec::new();
    for i in 0..m {
        if basis.len() == m {
            break;
        }
        let mut e = vec![ZERO; m];
        e[i] = c(1.0);
        for _ in 0..2 {
            for b in basis.iter() {
                let proj = inner(b, &e);
                for k in 0..m {
                    e[k] -= proj * b[k];
                }
            }
        }
        let nrm = norm2(&e);
        if nrm > 1e-6 {
            let e: Vec<C64> = e.iter().map(|z| z / nrm).collect();
            basis.push(e.clone());
            added.push(e);
        }
    }
    added
}
