//! Hilbert-space specializations: the attained subspace E of G, the gap γ
//! of G on E^⊥, the three equivalent descriptions of `‖T‖_G`, and the
//! partial-isometry obstruction for relative spears.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gnorm::{GContext, Method};
use crate::linalg::{inner, norm2, Matrix, C64, ZERO};
use crate::numrange::nu_g;
use crate::operators::{svd_decompose, OperatorSpec};
use crate::rng;
use crate::svd::svd;

/// Slack for the distance bound on sampled feasible points.
pub const BOUND_SLACK: f64 = 1e-9;
const BOUND_SAMPLES: usize = 400;
/// `1 − γ` below this makes the flags sensitive to the tolerance.
const CONDITIONING_GAP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conditions {
    /// `γ < 1`.
    pub gap: bool,
    /// `sup{dist(x, E) : ‖Gx‖ ≥ 1 − δ}` shrinks along the δ grid within
    /// the proof bound.
    pub concentration: bool,
    /// `‖T‖_G = max{‖Tx‖ : x ∈ S_E}` on the deck.
    pub gnorm_on_e: bool,
}

impl Conditions {
    pub fn agree(&self) -> bool {
        self.gap == self.concentration && self.concentration == self.gnorm_on_e
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceCheck {
    pub delta: f64,
    /// `max dist(x, E)²` over `‖x‖ = 1, ‖Gx‖ ≥ 1 − δ`, from the explicit maximizer.
    pub max_dist_sq: f64,
    /// `(2δ − δ²)/(1 − γ²)`.
    pub bound: f64,
    /// Sampled feasible points violating the bound.
    pub violations: usize,
    pub sampled: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HilbertAnalysis {
    pub e_basis: Vec<Vec<C64>>,
    pub gamma: f64,
    pub singular_values: Vec<f64>,
    /// Singular values in `[1 − tol, ∞)`, `(tol, 1 − tol)` and `[0, tol]`.
    pub buckets: [usize; 3],
    pub conditions: Conditions,
    pub distance_checks: Vec<DistanceCheck>,
    /// `max |‖T‖_G − σ_max(T·E)|` over the deck.
    pub max_gnorm_dev: f64,
    pub warning: Option<String>,
}

fn require_hilbert(g: &OperatorSpec) -> Result<()> {
    if !g.is_euclidean() {
        return Err(Error::NotEuclidean);
    }
    Ok(())
}

/// Squared distance of `x` to the span of the orthonormal `basis`.
fn dist_sq(x: &[C64], basis: &[Vec<C64>]) -> f64 {
    let mut r = x.to_vec();
    for b in basis {
        let a = inner(b, x);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri -= a * bi;
        }
    }
    norm2(&r).powi(2)
}

pub fn hilbert_analyze(ctx: &GContext, deck: &[OperatorSpec], delta_grid: &[f64], tol: f64, seed: u64) -> Result<HilbertAnalysis> {
    let g = ctx.g();
    require_hilbert(g)?;
    if delta_grid.is_empty() || delta_grid.iter().any(|&d| !(d > 0.0 && d <= 1.0)) {
        return Err(Error::InvalidArgument("deltas must lie in (0, 1]".into()));
    }
    let r = svd_decompose(g)?;
    let sv = r.singular_values.clone();
    let n = g.cols();
    let in_e: Vec<usize> = (0..sv.len().min(n)).filter(|&j| sv[j] >= 1.0 - tol).collect();
    let e_basis: Vec<Vec<C64>> = in_e.iter().map(|&j| r.right_vectors[j].clone()).collect();
    // right singular vectors beyond the rank have singular value 0
    let svals: Vec<f64> = (0..n).map(|j| sv.get(j).copied().unwrap_or(0.0)).collect();
    let rest: Vec<usize> = (0..n).filter(|j| !in_e.contains(j)).collect();
    let gamma = rest.iter().map(|&j| svals[j]).fold(0.0, f64::max);
    let gamma_dir = rest.iter().copied().max_by(|&a, &b| svals[a].total_cmp(&svals[b]).then(b.cmp(&a)));
    let buckets = [
        svals.iter().filter(|&&s| s >= 1.0 - tol).count(),
        svals.iter().filter(|&&s| s > tol && s < 1.0 - tol).count(),
        svals.iter().filter(|&&s| s <= tol).count(),
    ];

    let samples = feasible_probes(g, &e_basis, seed);
    let distance_checks: Vec<DistanceCheck> = delta_grid
        .iter()
        .map(|&delta| {
            let bound = if gamma < 1.0 { (2.0 * delta - delta * delta) / (1.0 - gamma * gamma) } else { f64::INFINITY };
            let max_dist_sq = match (gamma_dir, e_basis.first()) {
                (Some(j), Some(e)) => {
                    // weight b² = min(1, bound) on the γ direction, the rest on E
                    let b2 = bound.min(1.0);
                    let v = &r.right_vectors[j];
                    let x: Vec<C64> = e.iter().zip(v).map(|(a, b)| a * (1.0 - b2).sqrt() + b * b2.sqrt()).collect();
                    if g.image_norm(&x) >= 1.0 - delta - 1e-10 {
                        dist_sq(&x, &e_basis)
                    } else {
                        f64::INFINITY
                    }
                }
                _ => 0.0,
            };
            let feasible: Vec<&Vec<C64>> = samples.iter().filter(|x| g.image_norm(x) > 1.0 - delta).collect();
            let violations = feasible.iter().filter(|x| dist_sq(x, &e_basis) > bound + BOUND_SLACK).count();
            DistanceCheck { delta, max_dist_sq, bound, violations, sampled: feasible.len() }
        })
        .collect();

    let q = Matrix::from_cols(&e_basis);
    let devs: Vec<f64> = deck
        .par_iter()
        .map(|t| {
            let gn = ctx.g_norm(t, Method::Auto)?.value;
            let on_e = if e_basis.is_empty() { 0.0 } else { svd(&t.matrix().mul(&q))?.singular_values[0] };
            Ok((gn - on_e).abs())
        })
        .collect::<Result<_>>()?;
    let max_gnorm_dev = devs.iter().cloned().fold(0.0, f64::max);

    let first = distance_checks.iter().max_by(|a, b| a.delta.total_cmp(&b.delta)).expect("non-empty grid");
    let last = distance_checks.iter().min_by(|a, b| a.delta.total_cmp(&b.delta)).expect("non-empty grid");
    let concentration = distance_checks.iter().all(|d| d.max_dist_sq <= d.bound + BOUND_SLACK && d.violations == 0)
        && last.max_dist_sq <= first.max_dist_sq
        && (last.max_dist_sq < 1.0 || first.max_dist_sq == 0.0);
    let conditions = Conditions { gap: gamma < 1.0, concentration, gnorm_on_e: max_gnorm_dev <= tol.max(1e-8) };

    let near_edge = svals.iter().any(|&s| (s - (1.0 - tol)).abs() < 0.5 * tol || (s > 0.0 && (s - tol).abs() < 0.5 * tol));
    let warning = if !conditions.agree() {
        Some("condition flags disagree; the singular values sit too close to the tolerance bands".into())
    } else if 1.0 - gamma < CONDITIONING_GAP && gamma > 0.0 {
        Some(format!("γ = {gamma} is within {CONDITIONING_GAP:e} of 1; the flags depend on the tolerance"))
    } else if near_edge {
        Some("a singular value lies within tol/2 of a bucket boundary".into())
    } else {
        None
    };
    Ok(HilbertAnalysis { e_basis, gamma, singular_values: svals, buckets, conditions, distance_checks, max_gnorm_dev, warning })
}

/// Unit vectors for the distance bound: uniform sphere points and points
/// pushed toward E at several scales.
fn feasible_probes(g: &OperatorSpec, e_basis: &[Vec<C64>], seed: u64) -> Vec<Vec<C64>> {
    let dom = g.domain();
    let mut out: Vec<Vec<C64>> = dom.sphere_sample(BOUND_SAMPLES, seed).into_iter().map(|v| v.0).collect();
    if e_basis.is_empty() {
        return out;
    }
    let mut r = rng::rng(rng::split(seed, 1));
    for k in 0..BOUND_SAMPLES {
        let scale = 10f64.powf(-0.5 * (k % 8) as f64);
        let mut x = vec![ZERO; dom.dim()];
        let coef = rng::gaussian_vector(&mut r, e_basis.len(), dom.field());
        for (a, b) in coef.iter().zip(e_basis) {
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += a * bi;
            }
        }
        let noise = rng::gaussian_vector(&mut r, dom.dim(), dom.field());
        let x: Vec<C64> = x.iter().zip(&noise).map(|(a, b)| a + b * scale).collect();
        out.push(dom.normalize(&x));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialIsometryVerdict {
    pub is_pi: bool,
    /// `v_i ⊗ u_1` for the first singular value strictly inside `(tol, 1 − tol)`.
    pub witness_t: Option<OperatorSpec>,
    /// Recomputed `‖T‖_G` and `ν_G(T)` of the witness.
    pub witness_gnorm: Option<f64>,
    pub witness_nu: Option<f64>,
    pub singular_values: Vec<f64>,
}

/// Whether every singular value of G lies within `tol` of 0 or 1; otherwise
/// the rank-one operator `v_i ⊗ u_1` has `‖T‖_G = 1` and `ν_G(T) = 0`.
pub fn partial_isometry_verdict(ctx: &GContext, tol: f64) -> Result<PartialIsometryVerdict> {
    let g = ctx.g();
    require_hilbert(g)?;
    let r = svd_decompose(g)?;
    let sv = r.singular_values.clone();
    let Some(i) = sv.iter().position(|&s| s > tol && s < 1.0 - tol) else {
        return Ok(PartialIsometryVerdict { is_pi: true, witness_t: None, witness_gnorm: None, witness_nu: None, singular_values: sv });
    };
    let t = g.with_matrix(Matrix::outer(&r.left_vectors[i], &r.right_vectors[0]))?;
    let gn = ctx.g_norm(&t, Method::Auto)?.value;
    let nu = nu_g(&t, ctx)?.value;
    Ok(PartialIsometryVerdict { is_pi: false, witness_t: Some(t), witness_gnorm: Some(gn), witness_nu: Some(nu), singular_values: sv })
}

/// `diag(1, …, 1, s)` of size `n`.
pub fn diag_with_tail(n: usize, s: f64) -> Matrix {
    let mut d = vec![1.0; n];
    d[n - 1] = s;
    Matrix::diag(&d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnorm::random_operators;
    use crate::operators::SolverBudget;
    use crate::spaces::SpaceSpec;
    use proptest::prelude::*;

    fn ctx(g: &OperatorSpec) -> GContext {
        GContext::new(g, 1e-8, &SolverBudget::default()).unwrap()
    }

    fn grid() -> Vec<f64> {
        crate::gnorm::default_delta_grid()
    }

    #[test]
    fn analysis_of_diag_1_1_half() {
        let s = SpaceSpec::real_lp(2.0, 3);
        let g = OperatorSpec::on(&s, diag_with_tail(3, 0.5)).unwrap();
        let cx = ctx(&g);
        let deck = random_operators(&g, 10, 2);
        let a = hilbert_analyze(&cx, &deck, &grid(), 1e-8, 1).unwrap();
        assert_eq!(a.e_basis.len(), 2);
        assert!((a.gamma - 0.5).abs() < 1e-15);
        assert!(a.conditions.gap && a.conditions.concentration && a.conditions.gnorm_on_e);
        assert!(a.warning.is_none());
        for d in &a.distance_checks {
            assert!((d.max_dist_sq - d.bound.min(1.0)).abs() < 1e-12);
        }
        let id = OperatorSpec::identity(&s);
        let a = hilbert_analyze(&ctx(&id), &deck, &grid(), 1e-8, 1).unwrap();
        assert_eq!((a.e_basis.len(), a.gamma), (3, 0.0));
        assert!(a.conditions.agree() && a.conditions.gap);
    }

    #[test]
    fn near_isometry_warns() {
        let s = SpaceSpec::real_lp(2.0, 2);
        let g = OperatorSpec::on(&s, Matrix::diag(&[1.0, 0.999999])).unwrap();
        let a = hilbert_analyze(&ctx(&g), &[], &grid(), 1e-8, 1).unwrap();
        assert!(a.gamma < 1.0 && a.warning.is_some());
    }

    #[test]
    fn partial_isometry_examples() {
        let s = SpaceSpec::real_lp(2.0, 2);
        let g = OperatorSpec::on(&s, Matrix::diag(&[1.0, 0.5])).unwrap();
        let v = partial_isometry_verdict(&ctx(&g), 1e-8).unwrap();
        assert!(!v.is_pi);
        let w = Matrix::from_real_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(v.witness_t.unwrap().matrix().sub(&w).frobenius() < 1e-15);
        assert!((v.witness_gnorm.unwrap() - 1.0).abs() < 1e-12 && v.witness_nu.unwrap().abs() < 1e-12);
        let s3 = SpaceSpec::real_lp(2.0, 3);
        let g = OperatorSpec::on(&s3, Matrix::diag(&[1.0, 1.0, 0.0])).unwrap();
        assert!(partial_isometry_verdict(&ctx(&g), 1e-8).unwrap().is_pi);
        let g = OperatorSpec::on(&s, Matrix::diag(&[1.0, 0.9999])).unwrap();
        assert!(partial_isometry_verdict(&ctx(&g), 1e-2).unwrap().is_pi);
        let l1 = OperatorSpec::identity(&SpaceSpec::real_lp(1.0, 2));
        assert_eq!(partial_isometry_verdict(&ctx(&l1), 1e-8).unwrap_err(), Error::NotEuclidean);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn flags_agree_and_bound_holds(n in 2usize..5, s in 0.01f64..0.99, seed in 0u64..1000) {
            let sp = SpaceSpec::real_lp(2.0, n);
            let g = OperatorSpec::on(&sp, diag_with_tail(n, s)).unwrap();
            let cx = ctx(&g);
            let deck = random_operators(&g, 4, seed);
            let a = hilbert_analyze(&cx, &deck, &grid(), 1e-8, seed).unwrap();
            prop_assert!(a.conditions.agree());
            prop_assert!(a.distance_checks.iter().all(|d| d.violations == 0));
            prop_assert!(a.max_gnorm_dev <= 1e-8);
        }
    }
}
