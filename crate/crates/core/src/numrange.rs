//! Ranges `V_G(T)`, `S_G(T)`, `S̃_G(T)` and the radius `ν_G(T)`.
//!
//! In finite dimensions `y*(Gx) = 1` with `‖x‖ = ‖y*‖ = 1` forces
//! `x ∈ M_G` and `y* ∈ J(Gx)`, so pairs are generated from the attainment set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnorm::GContext;
use crate::linalg::{c, dot, Matrix, C64, ZERO};
use crate::operators::{canonicalize, select_best, AttainmentMode, OperatorSpec, SolverBudget, WitnessPair, DEFAULT_ATTAIN_TOL};
use crate::rng;
use crate::search::{self, Constraint, SearchOptions};
use crate::spaces::{Field, Functional, SpaceSpec, Vector};
use crate::svd::svd;

const THETA_SCAN: usize = 128;
const ACTIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct NuResult {
    pub value: f64,
    pub witness: WitnessPair,
    pub certified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RangeKind {
    #[serde(rename = "V_G")]
    VG,
    #[serde(rename = "S_G")]
    SG,
    #[serde(rename = "S_tilde")]
    STilde,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangePoint {
    pub value: C64,
    pub witness: WitnessPair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeSample {
    pub kind: RangeKind,
    pub points: Vec<RangePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RangeSummary {
    Interval { min: f64, max: f64 },
    /// Convex hull vertices in counter-clockwise order.
    Hull { vertices: Vec<C64> },
}

/// `ν_G(T) = max{|y*(Tx)| : x ∈ M_G, y* ∈ J(Gx)}`.
pub fn nu_g(t: &OperatorSpec, ctx: &GContext) -> Result<NuResult> {
    let g = ctx.g();
    g.check_compatible(t)?;
    let attain = ctx.attainment();
    match attain.mode {
        AttainmentMode::Vertices => {
            let cands: Vec<(f64, Vec<C64>, Functional)> = attain
                .points
                .iter()
                .map(|v| {
                    let (val, f) = g.codomain().max_support_pairing(&g.apply(v), &t.apply(v), ACTIVE_TOL)?;
                    Ok((val, canonicalize(v), f))
                })
                .collect::<Result<_>>()?;
            let k = select_best(cands.iter().map(|c| (c.0, c.1.as_slice()))).expect("M_G non-empty");
            let (value, x, _) = cands[k].clone();
            // recompute y* for the canonical representative
            let (_, f) = g.codomain().max_support_pairing(&g.apply(&x), &t.apply(&x), ACTIVE_TOL)?;
            Ok(NuResult { value, witness: WitnessPair { x: Vector(x), ystar: Some(f), value }, certified: true })
        }
        AttainmentMode::Subspace => {
            let q = Matrix::from_cols(&attain.basis);
            let b = q.adjoint().mul(&g.matrix().adjoint()).mul(t.matrix()).mul(&q);
            let (value, z) = numerical_radius_matrix(&b, t.field())?;
            let x = canonicalize(&q.apply(&z));
            let gx = g.apply(&x);
            let ystar = g.codomain().support_functional(&gx);
            Ok(NuResult { value, witness: WitnessPair { x: Vector(x), ystar: Some(ystar), value }, certified: true })
        }
        AttainmentMode::Cluster => nu_cluster(t, ctx),
    }
}

fn nu_cluster(t: &OperatorSpec, ctx: &GContext) -> Result<NuResult> {
    let g = ctx.g();
    let y = g.codomain();
    let obj = |x: &[C64]| -> f64 { y.max_support_pairing(&g.apply(x), &t.apply(x), ACTIVE_TOL).map(|r| r.0).unwrap_or(0.0) };
    let con = Constraint { op: g, level: ctx.norm() * (1.0 - DEFAULT_ATTAIN_TOL), anchor: Some(ctx.maximizer()) };
    let starts: Vec<Vec<C64>> = ctx.attainment().points.iter().map(|p| p.0.clone()).collect();
    let opts = SearchOptions::with_step(1e-3, ctx.budget().max_iters);
    let mut res: Vec<(f64, Vec<C64>)> = search::multi_start(g.domain(), &obj, Some(&con), &starts, &opts)
        .into_iter()
        .map(|(v, x)| (v, canonicalize(&x)))
        .collect();
    res.extend(starts.iter().map(|s| (obj(s), canonicalize(s))));
    let k = select_best(res.iter().map(|r| (r.0, r.1.as_slice()))).ok_or(Error::Infeasible)?;
    let (value, x) = res[k].clone();
    let (_, f) = y.max_support_pairing(&g.apply(&x), &t.apply(&x), ACTIVE_TOL)?;
    Ok(NuResult { value, witness: WitnessPair { x: Vector(x), ystar: Some(f), value }, certified: false })
}

/// Numerical radius `max{|zᴴBz| : ‖z‖₂ = 1}` of a square matrix, with a
/// maximizing unit vector. Real fields range over real `z`.
pub fn numerical_radius_matrix(b: &Matrix, field: Field) -> Result<(f64, Vec<C64>)> {
    match field {
        Field::Real => {
            let h = b.add(&b.adjoint()).scaled(c(0.5));
            let (top, z1) = lambda_max(&h)?;
            let (bot, z2) = lambda_max(&h.scaled(c(-1.0)))?;
            Ok(if top.abs() >= bot.abs() { (top.abs(), z1) } else { (bot.abs(), z2) })
        }
        Field::Complex => {
            let at = |th: f64| -> Result<(f64, Vec<C64>)> {
                let w = C64::from_polar(1.0, th);
                lambda_max(&b.scaled(w).add(&b.adjoint().scaled(w.conj())).scaled(c(0.5)))
            };
            let scan: Vec<(f64, f64)> = (0..THETA_SCAN)
                .map(|k| {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / THETA_SCAN as f64;
                    at(th).map(|r| (th, r.0))
                })
                .collect::<Result<_>>()?;
            let k = (0..scan.len()).fold(0, |b, i| if scan[i].1 > scan[b].1 + 1e-15 { i } else { b });
            let step = 2.0 * std::f64::consts::PI / THETA_SCAN as f64;
            let th = golden_max(|th| at(th).map(|r| r.0).unwrap_or(f64::NEG_INFINITY), scan[k].0 - step, scan[k].0 + step, 1e-12);
            let (v, z) = at(th)?;
            if v >= scan[k].1 {
                Ok((v, z))
            } else {
                at(scan[k].0)
            }
        }
    }
}

/// Largest eigenvalue of a Hermitian matrix with an eigenvector, via
/// `σ_max(H + cI) − c` where `c = ‖H‖_F` makes the shift positive
/// semidefinite.
pub fn lambda_max(h: &Matrix) -> Result<(f64, Vec<C64>)> {
    let shift = h.frobenius();
    let r = svd(&h.add(&Matrix::identity(h.rows()).scaled(c(shift))))?;
    Ok((r.singular_values[0] - shift, r.right_vectors[0].clone()))
}

/// Golden-section search for a maximum of a unimodal function on `[a, b]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    0.5 * (a + b)
}

/// `ν(T) = ν_Id(T)` for an endomorphism.
pub fn classical_numerical_radius(t: &OperatorSpec, budget: &SolverBudget) -> Result<f64> {
    if !t.is_square() {
        return Err(Error::NonSquare);
    }
    let ctx = GContext::new(&OperatorSpec::identity(t.domain()), 1e-9, budget)?;
    Ok(nu_g(t, &ctx)?.value)
}

/// A random point of `M_G`.
fn sample_attaining(ctx: &GContext, r: &mut rng::SeededRng) -> Vec<C64> {
    let a = ctx.attainment();
    let g = ctx.g();
    let field = g.field();
    let x = match a.mode {
        AttainmentMode::Subspace => {
            let coeff = rng::gaussian_vector(r, a.basis.len(), field);
            let q = Matrix::from_cols(&a.basis);
            let v = q.apply(&coeff);
            let n = g.domain().norm(&v);
            if n == 0.0 {
                a.basis[0].clone()
            } else {
                v.iter().map(|z| z / n).collect()
            }
        }
        AttainmentMode::Vertices => {
            if !a.facets.is_empty() && rng::uniform(r) < 0.5 {
                let f = &a.facets[(rng::uniform(r) * a.facets.len() as f64) as usize % a.facets.len()];
                let w = simplex_weights(r, f.len());
                let mut x = vec![ZERO; g.cols()];
                for (k, &i) in f.iter().enumerate() {
                    for d in 0..x.len() {
                        x[d] += a.points[i][d] * w[k];
                    }
                }
                x
            } else {
                let k = (rng::uniform(r) * a.points.len() as f64) as usize % a.points.len();
                a.points[k].0.clone()
            }
        }
        AttainmentMode::Cluster => {
            let k = (rng::uniform(r) * a.points.len() as f64) as usize % a.points.len();
            a.points[k].0.clone()
        }
    };
    let u = random_unimodular(r, field);
    x.iter().map(|z| z * u).collect()
}

fn random_unimodular(r: &mut rng::SeededRng, field: Field) -> C64 {
    match field {
        Field::Real => c(if rng::uniform(r) < 0.5 { -1.0 } else { 1.0 }),
        Field::Complex => C64::from_polar(1.0, 2.0 * std::f64::consts::PI * rng::uniform(r)),
    }
}

fn simplex_weights(r: &mut rng::SeededRng, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng::uniform(r)).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

/// Samples `V_G(T)`: `x ∈ M_G`, `y* ∈ J(Gx)` (extreme points and random
/// mixtures of them), values `y*(Tx)`.
pub fn v_range_sample(t: &OperatorSpec, ctx: &GContext, count: usize, seed: u64) -> Result<RangeSample> {
    let g = ctx.g();
    g.check_compatible(t)?;
    let points = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::rng(rng::split(seed, k as u64));
            let x = sample_attaining(ctx, &mut r);
            let gx = g.apply(&x);
            let ext = g.codomain().support_functionals(&Vector(gx), ACTIVE_TOL)?;
            let y: Vec<C64> = if ext.len() == 1 || rng::uniform(&mut r) < 0.5 {
                ext[(rng::uniform(&mut r) * ext.len() as f64) as usize % ext.len()].0.clone()
            } else {
                let w = simplex_weights(&mut r, ext.len());
                (0..g.rows()).map(|d| ext.iter().zip(&w).map(|(f, &wk)| f[d] * wk).sum()).collect()
            };
            let value = dot(&y, &t.apply(&x));
            Ok(RangePoint { value, witness: WitnessPair { x: Vector(x), ystar: Some(Functional(y)), value: value.norm() } })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RangeSample { kind: RangeKind::VG, points })
}

/// Samples `S_G(T)` (`y*` uniform-direction on `S_{Y*}`) or `S̃_G(T)`
/// (values `‖Tx‖`), with `x ∈ M_G`.
pub fn s_range_sample(t: &OperatorSpec, ctx: &GContext, kind: RangeKind, count: usize, seed: u64) -> Result<RangeSample> {
    let g = ctx.g();
    g.check_same_domain(t)?;
    let dual: Option<SpaceSpec> = match kind {
        RangeKind::SG => Some(t.codomain().dual()?),
        RangeKind::STilde => None,
        RangeKind::VG => return Err(Error::InvalidArgument("use v_range_sample for V_G".into())),
    };
    let points = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::rng(rng::split(seed, k as u64));
            let x = sample_attaining(ctx, &mut r);
            let tx = t.apply(&x);
            match &dual {
                Some(d) => {
                    let y = d.sphere_sample(1, rng::split(seed ^ 0x5359, k as u64)).remove(0).0;
                    let value = dot(&y, &tx);
                    RangePoint { value, witness: WitnessPair { x: Vector(x), ystar: Some(Functional(y)), value: value.norm() } }
                }
                None => {
                    let v = t.codomain().norm(&tx);
                    RangePoint { value: c(v), witness: WitnessPair { x: Vector(x), ystar: None, value: v } }
                }
            }
        })
        .collect();
    Ok(RangeSample { kind, points })
}

/// Real interval for real fields, convex hull of the cloud for complex ones.
pub fn summarize(sample: &RangeSample, field: Field) -> RangeSummary {
    match field {
        Field::Real => {
            let (min, max) = sample.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.value.re), hi.max(p.value.re)));
            RangeSummary::Interval { min, max }
        }
        Field::Complex => RangeSummary::Hull { vertices: convex_hull(&sample.points.iter().map(|p| p.value).collect::<Vec<_>>()) },
    }
}

/// Andrew's monotone chain.
pub fn convex_hull(pts: &[C64]) -> Vec<C64> {
    let mut p: Vec<C64> = pts.to_vec();
    p.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    p.dedup_by(|a, b| (*a - *b).norm() <= 1e-15);
    if p.len() < 3 {
        return p;
    }
    let cross = |o: C64, a: C64, b: C64| (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re);
    let mut lower: Vec<C64> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<C64> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnorm::{random_operators, Method};
    use crate::operators::normalize;
    use proptest::prelude::*;

    fn l1() -> SpaceSpec {
        SpaceSpec::real_lp(1.0, 2)
    }

    fn op(s: &SpaceSpec, rows: &[Vec<f64>]) -> OperatorSpec {
        OperatorSpec::on(s, Matrix::from_real_rows(rows).unwrap()).unwrap()
    }

    fn b() -> SolverBudget {
        SolverBudget::default()
    }

    fn example_ctx() -> GContext {
        GContext::new(&op(&l1(), &[vec![1.0, 0.0], vec![0.0, 0.0]]), 1e-9, &b()).unwrap()
    }

    #[test]
    fn nu_examples() {
        let t = op(&l1(), &[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(nu_g(&t, &example_ctx()).unwrap().value, 4.0);

        let s2 = SpaceSpec::real_lp(2.0, 2);
        let ctx = GContext::new(&op(&s2, &[vec![1.0, 0.0], vec![0.0, 0.5]]), 1e-9, &b()).unwrap();
        assert!(nu_g(&op(&s2, &[vec![0.0, 0.0], vec![1.0, 0.0]]), &ctx).unwrap().value.abs() < 1e-15);

        let n = op(&s2, &[vec![0.0, 1.0], vec![0.0, 0.0]]);
        let oracle = (0..100_000)
            .map(|k| {
                let th = std::f64::consts::PI * k as f64 / 100_000.0;
                (th.cos() * th.sin()).abs()
            })
            .fold(0.0, f64::max);
        let v = nu_g(&n, &GContext::new(&OperatorSpec::identity(&s2), 1e-9, &b()).unwrap()).unwrap().value;
        assert!((v - oracle).abs() < 1e-9 && (v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn classical_radius_examples() {
        let s3 = SpaceSpec::real_lp(2.0, 3);
        assert!((classical_numerical_radius(&OperatorSpec::identity(&s3), &b()).unwrap() - 1.0).abs() < 1e-12);
        // ℓ₁²: the pair x = e₂, y* = (1, 1) gives |y*(Te₂)| = 1
        let n = op(&l1(), &[vec![0.0, 1.0], vec![0.0, 0.0]]);
        let brute = l1()
            .polytope_vertices()
            .unwrap()
            .iter()
            .flat_map(|v| l1().support_functionals(v, 1e-9).unwrap().into_iter().map(move |f| (v.clone(), f)))
            .map(|(v, f)| f.apply(&n.apply(&v)).norm())
            .fold(0.0, f64::max);
        assert_eq!(brute, 1.0);
        assert_eq!(classical_numerical_radius(&n, &b()).unwrap(), 1.0);
        let rect = OperatorSpec::new(Matrix::zeros(2, 3), SpaceSpec::real_lp(2.0, 3), SpaceSpec::real_lp(2.0, 2)).unwrap();
        assert_eq!(classical_numerical_radius(&rect, &b()).unwrap_err(), Error::NonSquare);
    }

    #[test]
    fn complex_field_of_values() {
        let s = SpaceSpec::lp(2.0, 2, Field::Complex).unwrap();
        let t = OperatorSpec::on(&s, Matrix::from_rows(&[vec![C64::new(0.0, 1.0), ZERO], vec![ZERO, C64::new(0.0, -1.0)]]).unwrap()).unwrap();
        let ctx = GContext::new(&OperatorSpec::identity(&s), 1e-9, &b()).unwrap();
        let sample = v_range_sample(&t, &ctx, 400, 3).unwrap();
        // oracle: x*Tx = i(|x₁|² − |x₂|²) lies on the segment [−i, i]
        for p in &sample.points {
            assert!(p.value.re.abs() < 1e-12 && p.value.im.abs() <= 1.0 + 1e-12);
        }
        assert!((nu_g(&t, &ctx).unwrap().value - 1.0).abs() < 1e-9);
        match summarize(&sample, Field::Complex) {
            RangeSummary::Hull { vertices } => assert!(vertices.len() <= 2 || vertices.iter().all(|v| v.re.abs() < 1e-12)),
            _ => panic!("complex field gives a hull"),
        }
    }

    #[test]
    fn complex_radius_matches_scan() {
        let s = SpaceSpec::lp(2.0, 2, Field::Complex).unwrap();
        let m = Matrix::from_rows(&[vec![C64::new(0.3, 0.1), C64::new(1.0, -0.5)], vec![C64::new(0.0, 0.2), C64::new(-0.4, 0.6)]]).unwrap();
        let t = OperatorSpec::on(&s, m.clone()).unwrap();
        let v = classical_numerical_radius(&t, &b()).unwrap();
        // brute force over the complex unit sphere of ℂ² (modulo a global phase)
        let mut best: f64 = 0.0;
        let n = 600;
        for i in 0..=n {
            let a = std::f64::consts::FRAC_PI_2 * i as f64 / n as f64;
            for j in 0..n {
                let ph = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                let x = [c(a.cos()), C64::from_polar(a.sin(), ph)];
                best = best.max(crate::linalg::inner(&x, &m.apply(&x)).norm());
            }
        }
        assert!(v >= best - 1e-12 && v - best < 1e-4, "{v} vs {best}");
    }

    #[test]
    fn example_v_range_fills_segment() {
        let (a, bb, cc, d) = (1.0, 2.0, 3.0, 4.0);
        let t = op(&l1(), &[vec![a, bb], vec![cc, d]]);
        let s = v_range_sample(&t, &example_ctx(), 2000, 5).unwrap();
        // values a + y₂·c·x₁ with |x₁| = 1, |y₂| ≤ 1
        for p in &s.points {
            let x1 = p.witness.x[0].re;
            let y2 = p.witness.ystar.as_ref().unwrap()[1].re;
            assert_eq!(x1.abs(), 1.0);
            assert!(y2.abs() <= 1.0);
            assert!((p.value.re - (a + y2 * cc * x1)).abs() < 1e-12);
        }
        let RangeSummary::Interval { min, max } = summarize(&s, Field::Real) else { panic!() };
        assert!(min < a - cc + 0.1 && max > a + cc - 0.1);
        assert!(min >= a - cc - 1e-12 && max <= a + cc + 1e-12);
        let _ = (bb, d);
    }

    #[test]
    fn t_equals_g_gives_one() {
        let s = SpaceSpec::real_lp(f64::INFINITY, 2);
        let g = normalize(&op(&s, &[vec![0.6, 0.2], vec![0.1, 0.9]]), &b()).unwrap();
        let ctx = GContext::new(&g, 1e-9, &b()).unwrap();
        for p in v_range_sample(&g, &ctx, 200, 1).unwrap().points {
            assert!((p.value - c(1.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn s_ranges() {
        let t = op(&l1(), &[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let ctx = example_ctx();
        for p in s_range_sample(&t, &ctx, RangeKind::STilde, 100, 2).unwrap().points {
            assert_eq!(p.value.re, 4.0);
        }
        let gn = ctx.g_norm(&t, Method::Auto).unwrap().value;
        let s = s_range_sample(&t, &ctx, RangeKind::SG, 500, 2).unwrap();
        assert!(s.points.iter().all(|p| p.value.norm() <= gn + 1e-9));
        let s2 = SpaceSpec::real_lp(2.0, 2);
        let id = GContext::new(&OperatorSpec::identity(&s2), 1e-9, &b()).unwrap();
        let t2 = op(&s2, &[vec![1.0, 0.5], vec![0.0, 2.0]]);
        for p in s_range_sample(&t2, &id, RangeKind::STilde, 50, 1).unwrap().points {
            assert!((p.value.re - t2.image_norm(&p.witness.x)).abs() < 1e-12);
        }
    }

    #[test]
    fn cluster_mode_nu_matches_hilbert_when_smooth() {
        // ℓ₃ with G = Id: M_G is the whole sphere; the cluster search must at
        // least reach the values at its own starts and stay below ‖T‖_G
        let s = SpaceSpec::real_lp(3.0, 2);
        let ctx = GContext::new(&OperatorSpec::identity(&s), 1e-6, &SolverBudget { max_starts: 8, ..b() }).unwrap();
        let t = op(&s, &[vec![0.5, 1.0], vec![-0.3, 0.2]]);
        let r = nu_g(&t, &ctx).unwrap();
        assert!(!r.certified);
        let gn = ctx.g_norm(&t, Method::Auto).unwrap().value;
        assert!(r.value <= gn + 1e-6);
    }

    #[test]
    fn hull_of_square() {
        let pts = [c(0.0), c(1.0), C64::new(1.0, 1.0), C64::new(0.0, 1.0), C64::new(0.5, 0.5)];
        assert_eq!(convex_hull(&pts).len(), 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn prop_nu_bounded_and_homogeneous(e in prop::collection::vec(-2.0f64..2.0, 4), ge in prop::collection::vec(-2.0f64..2.0, 4), lam in -3.0f64..3.0, p in prop::sample::select(vec![1.0, 2.0, f64::INFINITY])) {
            let s = SpaceSpec::real_lp(p, 2);
            let graw = op(&s, &[ge[0..2].to_vec(), ge[2..4].to_vec()]);
            prop_assume!(graw.matrix().frobenius() > 0.1);
            let g = normalize(&graw, &b()).unwrap();
            let ctx = GContext::new(&g, 1e-9, &b()).unwrap();
            let t = op(&s, &[e[0..2].to_vec(), e[2..4].to_vec()]);
            let nu = nu_g(&t, &ctx).unwrap().value;
            prop_assert!(nu <= ctx.g_norm(&t, Method::Auto).unwrap().value + 1e-9);
            let nl = nu_g(&t.scaled(c(lam)), &ctx).unwrap().value;
            prop_assert!((nl - lam.abs() * nu).abs() <= 1e-9 * (1.0 + nl));
        }
    }

    #[test]
    fn unitary_invariance() {
        let s = SpaceSpec::lp(2.0, 3, Field::Complex).unwrap();
        let id = GContext::new(&OperatorSpec::identity(&s), 1e-9, &b()).unwrap();
        let u = svd(&rng::gaussian_matrix(&mut rng::rng(1), 3, 3, Field::Complex)).unwrap();
        let um = Matrix::from_cols(&u.left_vectors);
        for t in random_operators(&OperatorSpec::identity(&s), 5, 9) {
            let conj = t.with_matrix(um.mul(t.matrix()).mul(&um.adjoint())).unwrap();
            let a = nu_g(&t, &id).unwrap().value;
            let bb = nu_g(&conj, &id).unwrap().value;
            assert!((a - bb).abs() <= 1e-8, "{a} vs {bb}");
        }
    }

    #[test]
    fn sampled_values_below_radius() {
        let s = SpaceSpec::real_lp(f64::INFINITY, 2);
        let g = normalize(&op(&s, &[vec![0.5, 0.5], vec![0.5, -0.5]]), &b()).unwrap();
        let ctx = GContext::new(&g, 1e-9, &b()).unwrap();
        let t = op(&s, &[vec![0.1, -1.0], vec![2.0, 0.3]]);
        let nu = nu_g(&t, &ctx).unwrap().value;
        for p in v_range_sample(&t, &ctx, 500, 4).unwrap().points {
            assert!(p.value.norm() <= nu + 1e-9);
        }
    }
}
