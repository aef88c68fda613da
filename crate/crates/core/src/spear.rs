//! Spear and relative-spear checks, the ω-maximization behind them, and
//! transport of operators along surjective isometries.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnorm::{matrix_units, random_operators, GContext, Method};
use crate::linalg::{c, Matrix, C64};
use crate::numrange::{golden_max, nu_g};
use crate::operators::{op_norm, require_normalized, select_min, svd_decompose, OperatorSpec, SolverBudget};
use crate::spaces::{Field, SpaceSpec};

const OMEGA_SCAN: usize = 64;
const OMEGA_ANGLE_TOL: f64 = 1e-10;
pub const ISOMETRY_TOL: f64 = 1e-10;
const ISOMETRY_PROBES: usize = 64;
const ISOMETRY_SEED: u64 = 0x150;

/// A unimodular scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Omega(pub C64);

impl Omega {
    pub fn from_angle(theta: f64) -> Self {
        Omega(C64::from_polar(1.0, theta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CertifiedNo,
    PlausibleYes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Spear,
    Relative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpearReport {
    pub kind: CheckKind,
    pub verdict: Verdict,
    /// The deck operator with the smallest gap, normalized.
    pub worst_t: OperatorSpec,
    pub gap: f64,
    /// Deck operators actually evaluated (skipped ones excluded).
    pub samples_used: usize,
    pub tol: f64,
    pub seed: u64,
}

/// `max_ω f(ω)` over the unit scalars of `field`. Real: `+1` then `−1`, ties
/// to `+1`. Complex: a uniform angle scan refined by golden section around
/// the best scan point.
fn omega_max<F>(field: Field, f: F) -> Result<(f64, Omega)>
where
    F: Fn(C64) -> Result<f64> + Sync,
{
    match field {
        Field::Real => {
            let plus = f(c(1.0))?;
            let minus = f(c(-1.0))?;
            Ok(if minus > plus { (minus, Omega(c(-1.0))) } else { (plus, Omega(c(1.0))) })
        }
        Field::Complex => {
            let step = 2.0 * PI / OMEGA_SCAN as f64;
            let scan: Vec<f64> = (0..OMEGA_SCAN).into_par_iter().map(|k| f(Omega::from_angle(k as f64 * step).0)).collect::<Result<_>>()?;
            let top = scan.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let k = scan.iter().position(|&v| v >= top - crate::operators::TIE_TOL).expect("scan is non-empty");
            let theta0 = k as f64 * step;
            let eval = |th: f64| f(Omega::from_angle(th).0).unwrap_or(f64::NEG_INFINITY);
            let th = golden_max(eval, theta0 - step, theta0 + step, OMEGA_ANGLE_TOL);
            let v = eval(th);
            if v > scan[k] {
                Ok((v, Omega::from_angle(th.rem_euclid(2.0 * PI))))
            } else {
                Ok((scan[k], Omega::from_angle(theta0)))
            }
        }
    }
}

fn g_plus(g: &OperatorSpec, t: &OperatorSpec, w: C64) -> Result<OperatorSpec> {
    g.with_matrix(g.matrix().add(&t.matrix().scaled(w)))
}

/// `max_ω ‖G + ωT‖_G` with the maximizing ω.
pub fn spear_lhs_gnorm(t: &OperatorSpec, ctx: &GContext) -> Result<(f64, Omega)> {
    let g = ctx.g();
    g.check_compatible(t)?;
    omega_max(g.field(), |w| Ok(ctx.g_norm(&g_plus(g, t, w)?, Method::Auto)?.value))
}

/// `max_ω ‖G + ωT‖` with the maximizing ω.
pub fn spear_lhs_opnorm(t: &OperatorSpec, g: &OperatorSpec, budget: &SolverBudget) -> Result<(f64, Omega)> {
    g.check_compatible(t)?;
    omega_max(g.field(), |w| Ok(op_norm(&g_plus(g, t, w)?, budget)?.value))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceRecord {
    /// `max_ω ‖G + ωT‖_G`.
    pub lhs: f64,
    pub omega: Omega,
    pub gnorm: f64,
    pub nu: f64,
    pub lhs_holds: bool,
    pub rhs_holds: bool,
    pub consistent: bool,
}

/// Evaluates both sides of the equivalence
/// `max_ω ‖G + ωT‖_G = 1 + ‖T‖_G  ⇔  ν_G(T) = ‖T‖_G` at tolerance `ctx.tol()`.
pub fn theorem_equiv_check(t: &OperatorSpec, ctx: &GContext) -> Result<EquivalenceRecord> {
    let (lhs, omega) = spear_lhs_gnorm(t, ctx)?;
    let gnorm = ctx.g_norm(t, Method::Auto)?.value;
    let nu = nu_g(t, ctx)?.value;
    let tol = ctx.tol();
    let lhs_holds = (lhs - (1.0 + gnorm)).abs() <= tol;
    let rhs_holds = (nu - gnorm).abs() <= tol;
    Ok(EquivalenceRecord { lhs, omega, gnorm, nu, lhs_holds, rhs_holds, consistent: lhs_holds == rhs_holds })
}

/// Matrix units, G, the identity when square, and (Euclidean G) the rank-one
/// operators `v_i ⊗ u_1` built from G's singular vectors, followed by
/// `samples` seeded random operators.
pub fn check_deck(g: &OperatorSpec, samples: usize, seed: u64) -> Result<Vec<OperatorSpec>> {
    let mut deck = matrix_units(g);
    deck.push(g.clone());
    if g.rows() == g.cols() {
        deck.push(g.with_matrix(Matrix::identity(g.rows()))?);
    }
    if g.is_euclidean() {
        let r = svd_decompose(g)?;
        let u1 = &r.right_vectors[0];
        for v in &r.left_vectors {
            deck.push(g.with_matrix(Matrix::outer(v, u1))?);
        }
    }
    deck.extend(random_operators(g, samples, seed));
    Ok(deck)
}

/// Reduces `(gap, operator)` pairs to the worst one: smallest gap, ties
/// broken by the lexicographically smallest matrix entries.
fn reduce(kind: CheckKind, evals: Vec<(f64, OperatorSpec)>, tol: f64, seed: u64) -> Result<SpearReport> {
    let flat: Vec<Vec<C64>> = evals.iter().map(|e| e.1.matrix().data().to_vec()).collect();
    let k = select_min(evals.iter().zip(&flat).map(|(e, f)| (e.0, f.as_slice())))
        .ok_or_else(|| Error::Degenerate("every deck operator vanished on the check's normalization".into()))?;
    let (gap, worst_t) = evals[k].clone();
    let verdict = if gap < -tol { Verdict::CertifiedNo } else { Verdict::PlausibleYes };
    Ok(SpearReport { kind, verdict, worst_t, gap, samples_used: evals.len(), tol, seed })
}

/// Searches for `T` with `ν_G(T) < ‖T‖_G`; each deck operator is scaled to
/// `‖T‖_G = 1`, and those with `‖T‖_G ≤ tol` are skipped.
pub fn relative_spear_check(ctx: &GContext, samples: usize, seed: u64) -> Result<SpearReport> {
    let deck = check_deck(ctx.g(), samples, seed)?;
    let tol = ctx.tol();
    let evals: Vec<Option<(f64, OperatorSpec)>> = deck
        .par_iter()
        .map(|t| {
            let gn = ctx.g_norm(t, Method::Auto)?.value;
            if gn <= tol {
                return Ok(None);
            }
            let t = t.scaled(c(1.0 / gn));
            let gap = nu_g(&t, ctx)?.value - ctx.g_norm(&t, Method::Auto)?.value;
            Ok(Some((gap, t)))
        })
        .collect::<Result<_>>()?;
    reduce(CheckKind::Relative, evals.into_iter().flatten().collect(), tol, seed)
}

/// Searches for `T` with `max_ω ‖G + ωT‖ < 1 + ‖T‖`; each deck operator is
/// scaled to `‖T‖ = 1`, and those with `‖T‖ ≤ tol` are skipped.
pub fn spear_check(g: &OperatorSpec, samples: usize, seed: u64, tol: f64, budget: &SolverBudget) -> Result<SpearReport> {
    require_normalized(g, tol, budget)?;
    let deck = check_deck(g, samples, seed)?;
    let evals: Vec<Option<(f64, OperatorSpec)>> = deck
        .par_iter()
        .map(|t| {
            let n = op_norm(t, budget)?.value;
            if n <= tol {
                return Ok(None);
            }
            let t = t.scaled(c(1.0 / n));
            let (lhs, _) = spear_lhs_opnorm(&t, g, budget)?;
            let gap = lhs - (1.0 + op_norm(&t, budget)?.value);
            Ok(Some((gap, t)))
        })
        .collect::<Result<_>>()?;
    reduce(CheckKind::Spear, evals.into_iter().flatten().collect(), tol, seed)
}

fn not_isometry(msg: impl Into<String>) -> Error {
    Error::NotIsometry(msg.into())
}

/// Structural check for ℓ_p spaces: unitary for p = 2, phase permutation
/// otherwise.
fn structural_isometry(m: &Matrix, p: f64) -> Result<()> {
    let n = m.rows();
    if p == 2.0 {
        let err = m.adjoint().mul(m).sub(&Matrix::identity(n)).frobenius();
        if err > ISOMETRY_TOL * n as f64 {
            return Err(not_isometry(format!("UᴴU differs from the identity by {err:.3e}")));
        }
        return Ok(());
    }
    if n == 1 {
        return Ok(());
    }
    let rows = m.to_rows();
    let is_phase_perm = |lines: &[Vec<C64>]| {
        lines.iter().all(|l| {
            let big = l.iter().filter(|z| (z.norm() - 1.0).abs() <= ISOMETRY_TOL).count();
            let small = l.iter().filter(|z| z.norm() <= ISOMETRY_TOL).count();
            big == 1 && small == l.len() - 1
        })
    };
    let cols: Vec<Vec<C64>> = (0..n).map(|j| m.col(j)).collect();
    if !(is_phase_perm(&rows) && is_phase_perm(&cols)) {
        return Err(not_isometry(format!("ℓ_{p} isometries are signed or phase permutations")));
    }
    Ok(())
}

fn probe_vectors(s: &SpaceSpec) -> Result<Vec<Vec<C64>>> {
    let n = s.dim();
    let mut out = Vec::new();
    for i in 0..n {
        let mut e = vec![c(0.0); n];
        e[i] = c(1.0);
        out.push(e);
        for j in i + 1..n {
            for sj in [1.0, -1.0] {
                let mut e = vec![c(0.0); n];
                e[i] = c(1.0);
                e[j] = c(sj);
                out.push(e);
            }
        }
    }
    if s.has_vertex_mode() {
        out.extend(s.polytope_vertices()?.into_iter().map(|v| v.0));
    }
    out.extend(s.sphere_sample(ISOMETRY_PROBES, ISOMETRY_SEED).into_iter().map(|v| v.0));
    Ok(out)
}

/// Errors unless `u` is a surjective isometry from its domain onto its
/// codomain; returns `u⁻¹` as an operator between the swapped spaces.
pub fn verify_isometry(u: &OperatorSpec) -> Result<OperatorSpec> {
    if u.rows() != u.cols() {
        return Err(not_isometry("a surjective isometry between equal-dimensional spaces is square"));
    }
    let inv = u.matrix().inverse().map_err(|_| not_isometry("the matrix is singular"))?;
    let (x, y) = (u.domain(), u.codomain());
    if let (Some(p), Some(q)) = (x.p(), y.p()) {
        if p == q {
            structural_isometry(u.matrix(), p)?;
        }
    }
    let uinv = OperatorSpec::new(inv, y.clone(), x.clone())?;
    for (op, space) in [(u, x), (&uinv, y)] {
        for v in probe_vectors(space)? {
            let (a, b) = (space.norm(&v), op.image_norm(&v));
            if (a - b).abs() > ISOMETRY_TOL * a.max(1.0) {
                return Err(not_isometry(format!("‖Ux‖ = {b} but ‖x‖ = {a} on a probe vector")));
            }
        }
    }
    Ok(uinv)
}

/// `U₂ G U₁⁻¹` from `U₁(X)` to `U₂(Y)`, for surjective isometries `U₁` on X
/// and `U₂` on Y.
pub fn transport(g: &OperatorSpec, u1: &OperatorSpec, u2: &OperatorSpec) -> Result<OperatorSpec> {
    if u1.domain() != g.domain() {
        return Err(Error::InvalidArgument("U1 must act on the domain of G".into()));
    }
    if u2.domain() != g.codomain() {
        return Err(Error::InvalidArgument("U2 must act on the codomain of G".into()));
    }
    let u1inv = verify_isometry(u1)?;
    verify_isometry(u2)?;
    let m = u2.matrix().mul(g.matrix()).mul(u1inv.matrix());
    OperatorSpec::new(m, u1.codomain().clone(), u2.codomain().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::SolverBudget;

    fn op(s: &SpaceSpec, rows: &[Vec<f64>]) -> OperatorSpec {
        OperatorSpec::on(s, Matrix::from_real_rows(rows).unwrap()).unwrap()
    }

    fn ctx(g: &OperatorSpec) -> GContext {
        GContext::new(g, 1e-8, &SolverBudget::default()).unwrap()
    }

    fn l1_example() -> OperatorSpec {
        op(&SpaceSpec::real_lp(1.0, 2), &[vec![1.0, 0.0], vec![0.0, 0.0]])
    }

    #[test]
    fn lhs_on_example() {
        let g = l1_example();
        let cx = ctx(&g);
        // ‖G ± T‖_G = |1 ± 1| + |±3| on e₁
        let t = g.with_matrix(Matrix::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap()).unwrap();
        let (v, w) = spear_lhs_gnorm(&t, &cx).unwrap();
        assert!((v - 5.0).abs() < 1e-12);
        assert_eq!(w, Omega(c(1.0)));
        let zero = g.with_matrix(Matrix::zeros(2, 2)).unwrap();
        assert!((spear_lhs_gnorm(&zero, &cx).unwrap().0 - 1.0).abs() < 1e-12);
        let (v, w) = spear_lhs_gnorm(&g, &cx).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert_eq!(w, Omega(c(1.0)));
        let d = g.with_matrix(Matrix::diag(&[0.0, 1.0])).unwrap();
        let (v, _) = spear_lhs_opnorm(&d, &g, &SolverBudget::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_omega_refines_angle() {
        // ‖I + ωiI‖ on complex ℓ₂¹ is |1 + iω|, maximal at ω = −i
        let s = SpaceSpec::lp(2.0, 1, Field::Complex).unwrap();
        let g = OperatorSpec::identity(&s);
        let t = g.scaled(C64::new(0.0, 1.0));
        let (v, w) = spear_lhs_opnorm(&t, &g, &SolverBudget::default()).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert!((w.0 - C64::new(0.0, -1.0)).norm() < 1e-8);
        assert!((w.0.norm() - 1.0).abs() < 1e-12);
        // an angle between scan points
        let t = g.scaled(C64::from_polar(1.0, 0.3));
        let (v, w) = spear_lhs_opnorm(&t, &g, &SolverBudget::default()).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        // the maximum is quadratic in the angle, so ω is only resolved to √ε
        assert!((w.0 - C64::from_polar(1.0, -0.3)).norm() < 1e-6);
    }

    #[test]
    fn equivalence_on_examples() {
        let g = l1_example();
        let cx = ctx(&g);
        for t in random_operators(&g, 5, 3) {
            let r = theorem_equiv_check(&t, &cx).unwrap();
            assert!(r.lhs_holds && r.rhs_holds && r.consistent);
        }
        let s = SpaceSpec::real_lp(2.0, 2);
        let g = op(&s, &[vec![1.0, 0.0], vec![0.0, 0.5]]);
        let cx = ctx(&g);
        let t = op(&s, &[vec![0.0, 0.0], vec![1.0, 0.0]]);
        let r = theorem_equiv_check(&t, &cx).unwrap();
        assert!(!r.lhs_holds && !r.rhs_holds && r.consistent);
        assert!(r.nu.abs() < 1e-12 && (r.gnorm - 1.0).abs() < 1e-12);
        let r = theorem_equiv_check(&g, &cx).unwrap();
        assert!(r.lhs_holds && r.rhs_holds);
    }

    #[test]
    fn relative_spear_verdicts() {
        let r = relative_spear_check(&ctx(&l1_example()), 20, 7).unwrap();
        assert_eq!(r.verdict, Verdict::PlausibleYes);
        assert!(r.gap.abs() <= 1e-8);
        let s = SpaceSpec::real_lp(2.0, 2);
        let worst = Matrix::from_real_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        for d in [0.5, 0.0] {
            let g = op(&s, &[vec![1.0, 0.0], vec![0.0, d]]);
            let r = relative_spear_check(&ctx(&g), 20, 7).unwrap();
            assert_eq!(r.verdict, Verdict::CertifiedNo);
            assert!((r.gap + 1.0).abs() < 1e-12, "{}", r.gap);
            assert!(r.worst_t.matrix().sub(&worst).frobenius() < 1e-12);
        }
    }

    #[test]
    fn spear_verdicts() {
        let b = SolverBudget::default();
        let r = spear_check(&l1_example(), 20, 7, 1e-8, &b).unwrap();
        assert_eq!(r.verdict, Verdict::CertifiedNo);
        assert!(r.worst_t.matrix().sub(&Matrix::diag(&[0.0, 1.0])).frobenius() < 1e-12);
        assert!((r.gap + 1.0).abs() < 1e-12);
        let id1 = OperatorSpec::identity(&SpaceSpec::real_lp(1.0, 2));
        assert_eq!(spear_check(&id1, 20, 7, 1e-8, &b).unwrap().verdict, Verdict::PlausibleYes);
        let s2 = SpaceSpec::real_lp(2.0, 2);
        let id2 = OperatorSpec::identity(&s2);
        let r = spear_check(&id2, 20, 7, 1e-8, &b).unwrap();
        assert_eq!(r.verdict, Verdict::CertifiedNo);
        // the nilpotent witness: σ_max([[1, 1], [0, 1]]) is the golden ratio
        let n = op(&s2, &[vec![0.0, 1.0], vec![0.0, 0.0]]);
        let (v, _) = spear_lhs_opnorm(&n, &id2, &b).unwrap();
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((v - golden).abs() < 1e-12);
        assert!(r.gap <= v - 2.0 + 1e-12);
    }

    #[test]
    fn transport_by_swap() {
        let s = SpaceSpec::real_lp(1.0, 2);
        let swap = op(&s, &[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let g2 = transport(&l1_example(), &swap, &swap).unwrap();
        assert!(g2.matrix().sub(&Matrix::diag(&[0.0, 1.0])).frobenius() < 1e-15);
        let id = OperatorSpec::identity(&s);
        assert_eq!(transport(&l1_example(), &id, &id).unwrap(), l1_example());
        let bad = op(&s, &[vec![1.0, 1.0], vec![0.0, 1.0]]);
        assert!(matches!(transport(&l1_example(), &bad, &id), Err(Error::NotIsometry(_))));
        // a rotation preserves ℓ₂ but not ℓ₁
        let (co, si) = (0.6, 0.8);
        let rot = op(&s, &[vec![co, -si], vec![si, co]]);
        assert!(matches!(verify_isometry(&rot), Err(Error::NotIsometry(_))));
    }

    #[test]
    fn transport_preserves_gnorm_under_rotation() {
        let s = SpaceSpec::real_lp(2.0, 3);
        let g = op(&s, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 0.4]]);
        let mut r = crate::rng::rng(5);
        let q = crate::svd::svd(&crate::rng::gaussian_matrix(&mut r, 3, 3, Field::Real)).unwrap();
        let u = OperatorSpec::on(&s, Matrix::from_cols(&q.left_vectors)).unwrap();
        let g2 = transport(&g, &u, &u).unwrap();
        let (c1, c2) = (ctx(&g), ctx(&g2));
        for t in random_operators(&g, 5, 11) {
            let t2 = transport(&t, &u, &u).unwrap();
            let a = c1.g_norm(&t, Method::HilbertExact).unwrap().value;
            let b = c2.g_norm(&t2, Method::HilbertExact).unwrap().value;
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            let (a, b) = (nu_g(&t, &c1).unwrap().value, nu_g(&t2, &c2).unwrap().value);
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}
