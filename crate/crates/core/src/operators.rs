//! Operators between spaces: operator norms, attainment sets, partial
//! isometries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, dot, lex_cmp, phase, Matrix, C64, ZERO};
use crate::search;
use crate::spaces::{Field, Functional, SpaceSpec, Vector};
use crate::svd::{svd, SvdResult};

/// Default relative band for the attainment set.
pub const DEFAULT_ATTAIN_TOL: f64 = 1e-8;
/// Values closer than this are ties; ties go to the lexicographically
/// smallest witness.
pub const TIE_TOL: f64 = 1e-12;
const NORM_SEED: u64 = 0x6f70_6e6f_726d;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    matrix: Matrix,
    domain: SpaceSpec,
    codomain: SpaceSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverBudget {
    pub max_starts: usize,
    pub max_iters: usize,
    pub grid: usize,
}

impl Default for SolverBudget {
    fn default() -> Self {
        Self { max_starts: 64, max_iters: 500, grid: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessPair {
    pub x: Vector,
    pub ystar: Option<Functional>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormValue {
    pub value: f64,
    pub witness: WitnessPair,
    pub certified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttainmentMode {
    Subspace,
    Vertices,
    Cluster,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttainmentSet {
    pub mode: AttainmentMode,
    /// Orthonormal basis of E (subspace mode).
    pub basis: Vec<Vec<C64>>,
    /// Maximizing vertices or cluster representatives.
    pub points: Vec<Vector>,
    /// Faces of the ball all of whose vertices maximize, as indices into
    /// `points`.
    pub facets: Vec<Vec<usize>>,
    pub norm: f64,
    pub tol: f64,
    pub certified: bool,
}

impl AttainmentSet {
    /// Representative unit vectors: the basis in subspace mode, otherwise
    /// the stored points.
    pub fn representatives(&self) -> Vec<Vec<C64>> {
        match self.mode {
            AttainmentMode::Subspace => self.basis.clone(),
            _ => self.points.iter().map(|p| p.0.clone()).collect(),
        }
    }
}

impl OperatorSpec {
    pub fn new(matrix: Matrix, domain: SpaceSpec, codomain: SpaceSpec) -> Result<Self> {
        if matrix.cols() != domain.dim() {
            return Err(Error::InvalidOperator(format!(
                "matrix has {} columns but the domain has dimension {}",
                matrix.cols(),
                domain.dim()
            )));
        }
        if matrix.rows() != codomain.dim() {
            return Err(Error::InvalidOperator(format!(
                "matrix has {} rows but the codomain has dimension {}",
                matrix.rows(),
                codomain.dim()
            )));
        }
        if domain.field() != codomain.field() {
            return Err(Error::FieldMismatch("domain and codomain".into()));
        }
        if domain.field() == Field::Real && !matrix.is_real() {
            return Err(Error::FieldMismatch("complex matrix entries and real spaces".into()));
        }
        if matrix.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidOperator("matrix entries must be finite".into()));
        }
        Ok(Self { matrix, domain, codomain })
    }

    /// An endomorphism of `space`.
    pub fn on(space: &SpaceSpec, matrix: Matrix) -> Result<Self> {
        Self::new(matrix, space.clone(), space.clone())
    }

    pub fn identity(space: &SpaceSpec) -> Self {
        Self::on(space, Matrix::identity(space.dim())).expect("identity fits its space")
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn domain(&self) -> &SpaceSpec {
        &self.domain
    }

    pub fn codomain(&self) -> &SpaceSpec {
        &self.codomain
    }

    pub fn field(&self) -> Field {
        self.domain.field()
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    /// Same spaces, new matrix.
    pub fn with_matrix(&self, matrix: Matrix) -> Result<Self> {
        Self::new(matrix, self.domain.clone(), self.codomain.clone())
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self { matrix: self.matrix.scaled(s), ..self.clone() }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.matrix.apply(x)
    }

    /// `‖Tx‖` in the codomain.
    pub fn image_norm(&self, x: &[C64]) -> f64 {
        self.codomain.norm(&self.matrix.apply(x))
    }

    pub fn is_euclidean(&self) -> bool {
        self.domain.is_euclidean() && self.codomain.is_euclidean()
    }

    pub fn is_square(&self) -> bool {
        self.domain == self.codomain
    }

    /// Errors unless `other` maps the same domain into the same codomain.
    pub fn check_compatible(&self, other: &OperatorSpec) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::InvalidArgument("operators must share the domain".into()));
        }
        if self.codomain != other.codomain {
            return Err(Error::InvalidArgument("operators must share the codomain".into()));
        }
        Ok(())
    }

    /// Errors unless `other` shares the domain (any codomain).
    pub fn check_same_domain(&self, other: &OperatorSpec) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::InvalidArgument("operators must share the domain".into()));
        }
        Ok(())
    }
}

/// Makes the first coordinate of non-negligible modulus positive real, so a
/// vector and its unimodular multiples share one representative.
pub fn canonicalize(x: &[C64]) -> Vec<C64> {
    let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    match x.iter().find(|z| z.norm() > 1e-9 * scale) {
        Some(&z) => {
            let r = phase(z).conj();
            x.iter().map(|w| clean(w * r)).collect()
        }
        None => x.to_vec(),
    }
}

fn clean(z: C64) -> C64 {
    C64::new(if z.re == 0.0 { 0.0 } else { z.re }, if z.im.abs() < 1e-300 { 0.0 } else { z.im })
}

/// Index of the best candidate: maximal value, ties (within [`TIE_TOL`])
/// broken by the lexicographically smallest coordinates. Independent of the
/// candidates' order.
pub fn select_best<'a, I>(cands: I) -> Option<usize>
where
    I: IntoIterator<Item = (f64, &'a [C64])>,
{
    let cands: Vec<(f64, &[C64])> = cands.into_iter().collect();
    let top = cands.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return None;
    }
    (0..cands.len())
        .filter(|&i| cands[i].0 >= top - TIE_TOL)
        .min_by(|&i, &j| lex_cmp(cands[i].1, cands[j].1).then(i.cmp(&j)))
}

/// Like [`select_best`] for minimization.
pub fn select_min<'a, I>(cands: I) -> Option<usize>
where
    I: IntoIterator<Item = (f64, &'a [C64])>,
{
    let cands: Vec<(f64, &[C64])> = cands.into_iter().map(|(v, x)| (-v, x)).collect();
    select_best(cands)
}

pub fn svd_decompose(a: &OperatorSpec) -> Result<SvdResult> {
    if !a.is_euclidean() {
        return Err(Error::NotEuclidean);
    }
    svd(a.matrix())
}

pub fn is_partial_isometry(a: &OperatorSpec, tol: f64) -> Result<bool> {
    let r = svd_decompose(a)?;
    Ok(r.singular_values.iter().all(|&s| s.abs() <= tol || (s - 1.0).abs() <= tol))
}

/// `sup{‖Tx‖ : ‖x‖ = 1}` with a maximizing witness.
pub fn op_norm(t: &OperatorSpec, budget: &SolverBudget) -> Result<NormValue> {
    let dom = t.domain();
    if t.is_euclidean() {
        let r = svd(t.matrix())?;
        let x = canonicalize(&r.right_vectors[0]);
        let value = r.singular_values[0];
        return Ok(NormValue { value, witness: witness(t, x, value), certified: true });
    }
    if dom.has_vertex_mode() {
        let verts = dom.polytope_vertices()?;
        let cands: Vec<(f64, Vec<C64>)> = verts.iter().map(|v| (t.image_norm(v), canonicalize(v))).collect();
        let k = select_best(cands.iter().map(|(v, x)| (*v, x.as_slice()))).expect("vertices exist");
        let (value, x) = cands[k].clone();
        return Ok(NormValue { value, witness: witness(t, x, value), certified: true });
    }
    if dom.p() == Some(1.0) {
        let cands: Vec<(f64, Vec<C64>)> = (0..dom.dim())
            .map(|j| {
                let mut e = vec![ZERO; dom.dim()];
                e[j] = c(1.0);
                (t.image_norm(&e), e)
            })
            .collect();
        let k = select_best(cands.iter().map(|(v, x)| (*v, x.as_slice()))).expect("dimension is positive");
        let (value, x) = cands[k].clone();
        return Ok(NormValue { value, witness: witness(t, x, value), certified: true });
    }
    let maxima = norm_maxima(t, budget, NORM_SEED);
    let k = select_best(maxima.iter().map(|(v, x)| (*v, x.as_slice()))).expect("starts exist");
    let (value, x) = maxima[k].clone();
    Ok(NormValue { value, witness: witness(t, x, value), certified: false })
}


fn witness(t: &OperatorSpec, x: Vec<C64>, value: f64) -> WitnessPair {
    let tx = t.apply(&x);
    let ystar = (t.codomain().norm(&tx) > 0.0).then(|| t.codomain().support_functional(&tx));
    WitnessPair { x: Vector(x), ystar, value }
}

/// Local maxima of `‖Tx‖` on the sphere from power iteration plus pattern
/// polish, one per start, canonicalized.
fn norm_maxima(t: &OperatorSpec, budget: &SolverBudget, seed: u64) -> Vec<(f64, Vec<C64>)> {
    let dom = t.domain();
    let mut starts: Vec<Vec<C64>> = (0..dom.dim())
        .map(|j| {
            let mut e = vec![ZERO; dom.dim()];
            e[j] = c(1.0);
            e
        })
        .collect();
    starts.extend(dom.sphere_sample(budget.max_starts.max(1), seed).into_iter().map(|v| v.0));
    let obj = |x: &[C64]| t.image_norm(x);
    let opts = search::SearchOptions { step0: 1e-2, min_step: 1e-11, max_iters: budget.max_iters };
    starts
        .par_iter()
        .map(|s| {
            let x = search::power_ascent(t, s, budget.max_iters);
            let (v, x) = search::local_max(dom, &obj, None, &x, &opts).unwrap_or((obj(&x), x));
            (v, canonicalize(&x))
        })
        .collect()
}

/// Divides the matrix by its operator norm.
pub fn normalize(t: &OperatorSpec, budget: &SolverBudget) -> Result<OperatorSpec> {
    let n = op_norm(t, budget)?.value;
    if n <= 0.0 {
        return Err(Error::Degenerate("the zero operator cannot be normalized".into()));
    }
    Ok(t.scaled(c(1.0 / n)))
}

/// Errors unless `‖G‖ = 1` within `tol`.
pub fn require_normalized(g: &OperatorSpec, tol: f64, budget: &SolverBudget) -> Result<f64> {
    let n = op_norm(g, budget)?.value;
    if (n - 1.0).abs() > tol.max(1e-9) {
        return Err(Error::NotNormalized { norm: n });
    }
    Ok(n)
}

/// `M_G = {x ∈ S_X : ‖Gx‖ = ‖G‖}` in the richest representation the spaces
/// allow.
pub fn attainment_set(g: &OperatorSpec, tol: f64, budget: &SolverBudget) -> Result<AttainmentSet> {
    let dom = g.domain();
    if g.is_euclidean() {
        let r = svd(g.matrix())?;
        let s1 = r.singular_values[0];
        let basis: Vec<Vec<C64>> = r
            .singular_values
            .iter()
            .zip(&r.right_vectors)
            .filter(|(&s, _)| s >= s1 - tol * s1.max(f64::MIN_POSITIVE))
            .map(|(_, u)| u.clone())
            .collect();
        return Ok(AttainmentSet { mode: AttainmentMode::Subspace, basis, points: vec![], facets: vec![], norm: s1, tol, certified: true });
    }
    if dom.has_vertex_mode() {
        let verts = dom.polytope_vertices()?;
        let vals: Vec<f64> = verts.iter().map(|v| g.image_norm(v)).collect();
        let top = vals.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..verts.len()).filter(|&i| vals[i] >= top * (1.0 - tol)).collect();
        let points: Vec<Vector> = keep.iter().map(|&i| verts[i].clone()).collect();
        let mut facets = Vec::new();
        for (_, on) in dom.ball_faces()? {
            if on.iter().all(|i| keep.contains(i)) {
                let centroid: Vec<C64> = (0..dom.dim()).map(|d| on.iter().map(|&i| verts[i][d]).sum::<C64>() / on.len() as f64).collect();
                if g.image_norm(&centroid) >= top * (1.0 - tol) {
                    facets.push(on.iter().map(|i| keep.iter().position(|k| k == i).expect("kept vertex")).collect());
                }
            }
        }
        return Ok(AttainmentSet { mode: AttainmentMode::Vertices, basis: vec![], points, facets, norm: top, tol, certified: true });
    }
    let maxima = norm_maxima(g, budget, NORM_SEED);
    let top = maxima.iter().map(|m| m.0).fold(0.0, f64::max);
    let mut points: Vec<Vec<C64>> = Vec::new();
    let mut cands: Vec<&(f64, Vec<C64>)> = maxima.iter().filter(|m| m.0 >= top * (1.0 - tol)).collect();
    cands.sort_by(|a, b| lex_cmp(&a.1, &b.1));
    for (_, x) in cands {
        if !points.iter().any(|p| p.iter().zip(x).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) <= 1e-6) {
            points.push(x.clone());
        }
    }
    Ok(AttainmentSet {
        mode: AttainmentMode::Cluster,
        basis: vec![],
        points: points.into_iter().map(Vector).collect(),
        facets: vec![],
        norm: top,
        tol,
        certified: false,
    })
}

/// `y*(Tx)` for explicit pairs.
pub fn pairing(ystar: &[C64], t: &OperatorSpec, x: &[C64]) -> C64 {
    dot(ystar, &t.apply(x))
}
