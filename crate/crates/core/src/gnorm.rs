//! `‖T‖_G = inf_δ sup{‖Tx‖ : ‖x‖ = 1, ‖Gx‖ > 1 − δ}`, which in finite
//! dimensions is `max{‖Tx‖ : x ∈ M_G}`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, Matrix, C64};
use crate::operators::{self, attainment_set, canonicalize, op_norm, select_best, AttainmentMode, AttainmentSet, OperatorSpec, SolverBudget, WitnessPair, DEFAULT_ATTAIN_TOL};
use crate::oracle;
use crate::rng;
use crate::search::{self, Constraint, SearchOptions};
use crate::spaces::{SpaceSpec, Vector};
use crate::svd::svd;

const RELAX_SEED: u64 = 0x7265_6c61_78;
/// Warm starts carried from one δ level to the next.
const CARRIED_STARTS: usize = 8;
/// Finest δ tried when the default grid has not settled.
const MIN_DELTA_EXP: i32 = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Auto,
    HilbertExact,
    PolyhedralExact,
    Relaxation,
    Grid,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Auto => "auto",
            Method::HilbertExact => "hilbert_exact",
            Method::PolyhedralExact => "polyhedral_exact",
            Method::Relaxation => "relaxation",
            Method::Grid => "grid",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Method::Auto),
            "hilbert_exact" | "hilbert" => Ok(Method::HilbertExact),
            "polyhedral_exact" | "polyhedral" => Ok(Method::PolyhedralExact),
            "relaxation" => Ok(Method::Relaxation),
            "grid" => Ok(Method::Grid),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaProfile {
    /// `(δ, s(δ))` with δ strictly decreasing.
    pub entries: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GNormResult {
    pub value: f64,
    pub witness: WitnessPair,
    /// The method actually used (never `Auto`).
    pub method: Method,
    /// Exact structure was used.
    pub certified: bool,
    /// The relaxation profile settled (always true for exact methods).
    pub converged: bool,
    pub profile: Option<DeltaProfile>,
}

/// Default δ grid `2⁻¹, …, 2⁻²⁰`.
pub fn default_delta_grid() -> Vec<f64> {
    (1..=20).map(|k| 0.5f64.powi(k)).collect()
}

/// Per-G state shared by every query against the same `G`.
#[derive(Debug, Clone)]
pub struct GContext {
    g: OperatorSpec,
    tol: f64,
    budget: SolverBudget,
    norm: f64,
    maximizer: Vec<C64>,
    attain: AttainmentSet,
    projector: Option<Matrix>,
}

impl GContext {
    /// Validates `‖G‖ = 1 ± tol` and caches `M_G`.
    pub fn new(g: &OperatorSpec, tol: f64, budget: &SolverBudget) -> Result<Self> {
        let nv = op_norm(g, budget)?;
        if (nv.value - 1.0).abs() > tol.max(1e-9) {
            return Err(Error::NotNormalized { norm: nv.value });
        }
        let attain = attainment_set(g, DEFAULT_ATTAIN_TOL, budget)?;
        let projector = g.is_euclidean().then(|| attained_projector(g.matrix(), nv.value));
        Ok(Self { g: g.clone(), tol, budget: *budget, norm: nv.value, maximizer: nv.witness.x.0, attain, projector })
    }

    pub fn g(&self) -> &OperatorSpec {
        &self.g
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn budget(&self) -> &SolverBudget {
        &self.budget
    }

    /// The computed `‖G‖`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn attainment(&self) -> &AttainmentSet {
        &self.attain
    }

    /// Orthogonal projector onto E (Euclidean G only).
    pub fn projector(&self) -> Option<&Matrix> {
        self.projector.as_ref()
    }

    /// A maximizer of `‖Gx‖`.
    pub fn maximizer(&self) -> &[C64] {
        &self.maximizer
    }

    pub fn resolve(&self, method: Method) -> Method {
        match method {
            Method::Auto if self.g.is_euclidean() => Method::HilbertExact,
            Method::Auto if self.g.domain().has_vertex_mode() => Method::PolyhedralExact,
            Method::Auto => Method::Relaxation,
            m => m,
        }
    }

    pub fn g_norm(&self, t: &OperatorSpec, method: Method) -> Result<GNormResult> {
        self.g_norm_with(t, method, None)
    }

    /// Like [`GContext::g_norm`]; `deltas` overrides the relaxation grid.
    pub fn g_norm_with(&self, t: &OperatorSpec, method: Method, deltas: Option<&[f64]>) -> Result<GNormResult> {
        self.g.check_same_domain(t)?;
        match self.resolve(method) {
            Method::HilbertExact => self.hilbert_exact(t),
            Method::PolyhedralExact => self.polyhedral_exact(t),
            Method::Relaxation => self.relaxation(t, deltas),
            Method::Grid => {
                let (value, x) = oracle::grid_gnorm(t, &self.g, self.budget.grid)?;
                Ok(GNormResult { value, witness: witness(t, x, value), method: Method::Grid, certified: false, converged: true, profile: None })
            }
            Method::Auto => unreachable!("resolved above"),
        }
    }

    fn hilbert_exact(&self, t: &OperatorSpec) -> Result<GNormResult> {
        let p = self.projector.as_ref().ok_or(Error::NotEuclidean)?;
        let tp = t.matrix().mul(p);
        if t.codomain().is_euclidean() {
            let r = svd(&tp)?;
            let value = r.singular_values[0];
            let x = if value > 0.0 { r.right_vectors[0].clone() } else { first_column(p) };
            let x = canonicalize(&x);
            return Ok(GNormResult { value, witness: witness(t, x, value), method: Method::HilbertExact, certified: true, converged: true, profile: None });
        }
        // restrict T to E and take the operator norm from ℓ₂(E)
        let r = svd(p)?;
        let k = r.singular_values.iter().filter(|&&s| s > 0.5).count();
        let q = Matrix::from_cols(&r.left_vectors[..k]);
        let e = SpaceSpec::lp(2.0, k, t.field())?;
        let restricted = OperatorSpec::new(t.matrix().mul(&q), e, t.codomain().clone())?;
        let nv = op_norm(&restricted, &self.budget)?;
        let x = canonicalize(&q.apply(&nv.witness.x));
        Ok(GNormResult { value: nv.value, witness: witness(t, x, nv.value), method: Method::HilbertExact, certified: nv.certified, converged: true, profile: None })
    }

    fn polyhedral_exact(&self, t: &OperatorSpec) -> Result<GNormResult> {
        if self.attain.mode != AttainmentMode::Vertices {
            return Err(Error::NotPolyhedral);
        }
        let cands: Vec<(f64, Vec<C64>)> = self.attain.points.iter().map(|v| (t.image_norm(v), canonicalize(v))).collect();
        let k = select_best(cands.iter().map(|(v, x)| (*v, x.as_slice()))).expect("M_G is non-empty");
        let (value, x) = cands[k].clone();
        Ok(GNormResult { value, witness: witness(t, x, value), method: Method::PolyhedralExact, certified: true, converged: true, profile: None })
    }

    fn relaxation(&self, t: &OperatorSpec, deltas: Option<&[f64]>) -> Result<GNormResult> {
        let extend = deltas.is_none();
        let mut grid: Vec<f64> = deltas.map(|d| d.to_vec()).unwrap_or_else(default_delta_grid);
        check_deltas(&grid)?;
        let mut entries: Vec<(f64, f64, Vec<C64>)> = Vec::new();
        let mut carried: Vec<Vec<C64>> = Vec::new();
        let mut converged = false;
        let mut k = 0;
        loop {
            if k == grid.len() {
                let last = *grid.last().expect("non-empty grid");
                if !extend || last <= 0.5f64.powi(MIN_DELTA_EXP) {
                    break;
                }
                grid.push(last * 0.5);
            }
            let delta = grid[k];
            let (s, x, top) = self.level_max(t, delta, &carried);
            carried = top;
            entries.push((delta, s, x));
            if k > 0 && (entries[k - 1].1 - entries[k].1).abs() <= self.tol && self.settled(delta, &entries[k].2) {
                converged = true;
                break;
            }
            k += 1;
        }
        monotone_backward(&mut entries);
        let (_, value, x) = entries.last().cloned().expect("at least one level");
        let profile = DeltaProfile { entries: entries.iter().map(|e| (e.0, e.1)).collect() };
        Ok(GNormResult { value, witness: witness(t, x, value), method: Method::Relaxation, certified: false, converged, profile: Some(profile) })
    }

    /// Whether a level's witness makes a stalled profile meaningful: it either
    /// sits on the constraint boundary or already attains `‖G‖`. A witness
    /// strictly inside the constraint set only shows the constraint is slack.
    fn settled(&self, delta: f64, x: &[C64]) -> bool {
        let gap = 1.0 - self.g.image_norm(x) / self.norm;
        gap <= self.tol || gap >= delta * (1.0 - 1e-3)
    }

    /// `s(δ)`: the best value, its canonical witness, and the leading local
    /// maximizers for warm-starting the next level.
    fn level_max(&self, t: &OperatorSpec, delta: f64, carried: &[Vec<C64>]) -> (f64, Vec<C64>, Vec<Vec<C64>>) {
        let dom = self.g.domain();
        let starts: Vec<Vec<C64>> = if carried.is_empty() {
            dom.sphere_sample(self.budget.max_starts.max(1), rng::split(RELAX_SEED, 0)).into_iter().map(|v| v.0).collect()
        } else {
            carried.to_vec()
        };
        let con = Constraint { op: &self.g, level: self.norm * (1.0 - delta), anchor: Some(&self.maximizer) };
        let obj = |x: &[C64]| t.image_norm(x);
        let opts = SearchOptions::with_step(delta.sqrt().min(0.1), self.budget.max_iters);
        let mut res: Vec<(f64, Vec<C64>)> = search::multi_start(dom, &obj, Some(&con), &starts, &opts)
            .into_iter()
            .map(|(v, x)| (v, canonicalize(&x)))
            .collect();
        if res.is_empty() {
            res.push((obj(&self.maximizer), canonicalize(&self.maximizer)));
        }
        let k = select_best(res.iter().map(|(v, x)| (*v, x.as_slice()))).expect("non-empty");
        let best = res[k].clone();
        res.sort_by(|a, b| b.0.total_cmp(&a.0));
        let top = res.into_iter().take(CARRIED_STARTS).map(|r| r.1).collect();
        (best.0, best.1, top)
    }

    /// `s(δ)` for each δ, made nonincreasing by reusing witnesses of the
    /// smaller (nested) feasible sets.
    pub fn delta_profile(&self, t: &OperatorSpec, deltas: &[f64]) -> Result<DeltaProfile> {
        self.g.check_same_domain(t)?;
        check_deltas(deltas)?;
        let mut carried = Vec::new();
        let mut entries = Vec::new();
        for &d in deltas {
            let (s, x, top) = self.level_max(t, d, &carried);
            carried = top;
            entries.push((d, s, x));
        }
        monotone_backward(&mut entries);
        Ok(DeltaProfile { entries: entries.into_iter().map(|e| (e.0, e.1)).collect() })
    }
}

fn check_deltas(d: &[f64]) -> Result<()> {
    if d.is_empty() {
        return Err(Error::InvalidArgument("delta grid is empty".into()));
    }
    if d.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
        return Err(Error::InvalidArgument("deltas must lie in (0, 1]".into()));
    }
    if d.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("deltas must be strictly decreasing".into()));
    }
    Ok(())
}

fn monotone_backward(entries: &mut [(f64, f64, Vec<C64>)]) {
    for k in (0..entries.len().saturating_sub(1)).rev() {
        if entries[k + 1].1 > entries[k].1 {
            entries[k].1 = entries[k + 1].1;
            entries[k].2 = entries[k + 1].2.clone();
        }
    }
}

fn first_column(p: &Matrix) -> Vec<C64> {
    let j = (0..p.cols()).fold(0, |b, j| if crate::linalg::norm2(&p.col(j)) > crate::linalg::norm2(&p.col(b)) + 1e-12 { j } else { b });
    let v = p.col(j);
    let n = crate::linalg::norm2(&v);
    v.iter().map(|z| z / n).collect()
}

/// Orthogonal projector onto the top singular subspace of `G`, from repeated
/// squaring of `GᴴG/‖G‖²` followed by the cubic polish `3M² − 2M³`.
pub fn attained_projector(g: &Matrix, norm: f64) -> Matrix {
    let mut m = g.adjoint().mul(g).scaled(c(1.0 / (norm * norm)));
    for _ in 0..96 {
        let m2 = m.mul(&m);
        let done = m2.sub(&m).frobenius() <= 1e-6;
        m = m2;
        if done {
            break;
        }
    }
    for _ in 0..8 {
        let m2 = m.mul(&m);
        let m3 = m2.mul(&m);
        m = m2.scaled(c(3.0)).sub(&m3.scaled(c(2.0)));
    }
    // symmetrize
    m.add(&m.adjoint()).scaled(c(0.5))
}

fn witness(t: &OperatorSpec, x: Vec<C64>, value: f64) -> WitnessPair {
    let tx = t.apply(&x);
    let ystar = (t.codomain().norm(&tx) > 0.0).then(|| t.codomain().support_functional(&tx));
    WitnessPair { x: Vector(x), ystar, value }
}

/// One-shot `‖T‖_G`.
pub fn g_norm(t: &OperatorSpec, g: &OperatorSpec, method: Method, tol: f64, budget: &SolverBudget) -> Result<GNormResult> {
    GContext::new(g, tol, budget)?.g_norm(t, method)
}

pub fn delta_profile(t: &OperatorSpec, g: &OperatorSpec, deltas: &[f64], budget: &SolverBudget) -> Result<DeltaProfile> {
    GContext::new(g, 1e-6, budget)?.delta_profile(t, deltas)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRecord {
    pub nu: f64,
    pub gnorm: f64,
    pub opnorm: f64,
    pub ok: bool,
}

/// `ν_G(T) ≤ ‖T‖_G ≤ ‖T‖`.
pub fn g_norm_chain_check(t: &OperatorSpec, ctx: &GContext) -> Result<ChainRecord> {
    let nu = crate::numrange::nu_g(t, ctx)?.value;
    let gnorm = ctx.g_norm(t, Method::Auto)?.value;
    let opnorm = op_norm(t, ctx.budget())?.value;
    let tol = ctx.tol();
    Ok(ChainRecord { nu, gnorm, opnorm, ok: nu <= gnorm + tol && gnorm <= opnorm + tol })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormProbe {
    /// `min ‖T‖_G / ‖T‖` over the probe deck.
    pub min_ratio: f64,
    pub argmin: OperatorSpec,
    /// Heuristic: the ratio stayed above the tolerance.
    pub is_norm: bool,
}

/// Probes whether `‖·‖_G` is a norm on the matrix units and seeded random
/// operators.
pub fn gnorm_is_norm(ctx: &GContext, samples: usize, seed: u64) -> Result<NormProbe> {
    let g = ctx.g();
    let mut deck = matrix_units(g);
    deck.extend(random_operators(g, samples, seed));
    let ratios: Vec<Result<(f64, OperatorSpec)>> = deck
        .par_iter()
        .map(|t| {
            let n = op_norm(t, ctx.budget())?.value;
            let gn = ctx.g_norm(t, Method::Auto)?.value;
            Ok((gn / n, t.clone()))
        })
        .collect();
    let ratios = ratios.into_iter().collect::<Result<Vec<_>>>()?;
    let flat: Vec<Vec<C64>> = ratios.iter().map(|r| r.1.matrix().data().to_vec()).collect();
    let k = operators::select_min(ratios.iter().zip(&flat).map(|(r, f)| (r.0, f.as_slice()))).expect("deck non-empty");
    let (min_ratio, argmin) = ratios[k].clone();
    Ok(NormProbe { min_ratio, argmin, is_norm: min_ratio > ctx.tol() })
}

/// All matrix units `E_ij` with G's spaces.
pub fn matrix_units(g: &OperatorSpec) -> Vec<OperatorSpec> {
    let (m, n) = (g.rows(), g.cols());
    (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| g.with_matrix(Matrix::unit(m, n, i, j)).expect("unit fits"))
        .collect()
}

/// Seeded Gaussian operators with G's spaces; the k-th draws from its own
/// split stream.
pub fn random_operators(g: &OperatorSpec, count: usize, seed: u64) -> Vec<OperatorSpec> {
    (0..count)
        .map(|k| {
            let mut r = rng::rng(rng::split(seed, k as u64));
            g.with_matrix(rng::gaussian_matrix(&mut r, g.rows(), g.cols(), g.field())).expect("shape fits")
        })
        .collect()
}
