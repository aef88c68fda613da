//! Finite-dimensional normed spaces: ℓ_p (real or complex) and real
//! polyhedral norms `‖x‖ = max_i |F_i · x|`.
//!
//! Functionals pair bilinearly, `f(x) = Σ f_i x_i`; complex support
//! functionals therefore carry pre-conjugated coordinates.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, dot, phase, solve_real, C64, ZERO};
use crate::rng;
use crate::simplex;

/// Largest dimension for which ball vertices are enumerated.
pub const VERTEX_DIM_CAP: usize = 6;
/// Default relative band for active constraints in support-functional sets.
pub const DEFAULT_ACTIVE_TOL: f64 = 1e-9;
/// Phases used to discretize free unimodular coordinates of complex ℓ₁ supports.
const COMPLEX_FREE_PHASES: usize = 8;
const MAX_ENUMERATED: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Norm {
    Lp(f64),
    Polyhedral(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct SpaceSpec {
    dim: usize,
    field: Field,
    norm: Norm,
}

/// A point of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(pub Vec<C64>);

/// A linear functional, paired bilinearly with [`Vector`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional(pub Vec<C64>);

impl Deref for Vector {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl Deref for Functional {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl Vector {
    pub fn real(coords: &[f64]) -> Self {
        Vector(coords.iter().map(|&v| c(v)).collect())
    }
}

impl Functional {
    pub fn real(coords: &[f64]) -> Self {
        Functional(coords.iter().map(|&v| c(v)).collect())
    }

    pub fn apply(&self, x: &[C64]) -> C64 {
        dot(&self.0, x)
    }
}

impl SpaceSpec {
    pub fn lp(p: f64, dim: usize, field: Field) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidSpace(format!("p must be at least 1, got {p}")));
        }
        if dim == 0 {
            return Err(Error::InvalidSpace("dim must be positive".into()));
        }
        Ok(Self { dim, field, norm: Norm::Lp(p) })
    }

    pub fn real_lp(p: f64, dim: usize) -> Self {
        Self::lp(p, dim, Field::Real).expect("valid lp parameters")
    }

    pub fn polyhedral(dim: usize, functionals: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("dim must be positive".into()));
        }
        if functionals.is_empty() {
            return Err(Error::InvalidSpace("polyhedral norm needs functionals".into()));
        }
        for (i, f) in functionals.iter().enumerate() {
            if f.len() != dim {
                return Err(Error::InvalidSpace(format!(
                    "functional {i} has length {}, expected {dim}",
                    f.len()
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpace(format!("functional {i} is not finite")));
            }
        }
        if rank(&functionals) < dim {
            return Err(Error::InvalidSpace(
                "functionals do not span the dual; the gauge would only be a seminorm".into(),
            ));
        }
        Ok(Self { dim, field: Field::Real, norm: Norm::Polyhedral(functionals) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn norm_kind(&self) -> &Norm {
        &self.norm
    }

    pub fn p(&self) -> Option<f64> {
        match self.norm {
            Norm::Lp(p) => Some(p),
            Norm::Polyhedral(_) => None,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        self.p() == Some(2.0)
    }

    /// ℓ₁, ℓ_∞ or explicitly polyhedral.
    pub fn is_polyhedral(&self) -> bool {
        match self.norm {
            Norm::Lp(p) => p == 1.0 || p == f64::INFINITY,
            Norm::Polyhedral(_) => true,
        }
    }

    /// Real polyhedral ball small enough for exact vertex enumeration.
    pub fn has_vertex_mode(&self) -> bool {
        self.is_polyhedral() && self.field == Field::Real && self.dim <= VERTEX_DIM_CAP
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: len });
        }
        Ok(())
    }

    pub fn norm_eval(&self, x: &Vector) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.norm(x))
    }

    /// Unchecked norm evaluation.
    pub fn norm(&self, x: &[C64]) -> f64 {
        match &self.norm {
            Norm::Lp(p) => lp_norm(x, *p),
            Norm::Polyhedral(fs) => fs
                .iter()
                .map(|f| f.iter().zip(x).map(|(a, b)| b * a).sum::<C64>().norm())
                .fold(0.0, f64::max),
        }
    }

    pub fn normalize(&self, x: &[C64]) -> Vec<C64> {
        let n = self.norm(x);
        x.iter().map(|z| z / n).collect()
    }

    pub fn dual_norm_eval(&self, f: &Functional) -> Result<f64> {
        self.check_dim(f.len())?;
        self.dual_norm(f)
    }

    /// `sup{|f(x)| : ‖x‖ ≤ 1}`. Polyhedral norms solve for the Minkowski gauge
    /// of `co{±F_i}`.
    pub fn dual_norm(&self, f: &[C64]) -> Result<f64> {
        match &self.norm {
            Norm::Lp(p) => Ok(lp_norm(f, conjugate_exponent(*p))),
            Norm::Polyhedral(fs) => {
                if f.iter().any(|z| z.im != 0.0) {
                    return Err(Error::ComplexUnsupported);
                }
                let m = fs.len();
                let cost = vec![1.0; 2 * m];
                let a: Vec<Vec<f64>> = (0..self.dim)
                    .map(|d| {
                        let mut row: Vec<f64> = fs.iter().map(|fi| fi[d]).collect();
                        row.extend(fs.iter().map(|fi| -fi[d]));
                        row
                    })
                    .collect();
                let b: Vec<f64> = f.iter().map(|z| z.re).collect();
                Ok(simplex::minimize(&cost, &a, &b)?.value)
            }
        }
    }

    /// The dual space: ℓ_q for ℓ_p, and for a polyhedral norm the polyhedral
    /// norm whose functionals are the vertices of this unit ball.
    pub fn dual(&self) -> Result<SpaceSpec> {
        match &self.norm {
            Norm::Lp(p) => SpaceSpec::lp(conjugate_exponent(*p), self.dim, self.field),
            Norm::Polyhedral(_) => {
                let verts = self.polytope_vertices()?;
                let mut fs: Vec<Vec<f64>> = Vec::new();
                for v in verts {
                    let r: Vec<f64> = v.iter().map(|z| z.re).collect();
                    let neg: Vec<f64> = r.iter().map(|x| -x).collect();
                    if !fs.iter().any(|g| close(g, &r) || close(g, &neg)) {
                        fs.push(r);
                    }
                }
                SpaceSpec::polyhedral(self.dim, fs)
            }
        }
    }

    /// Extreme points of `J(x) = {f : ‖f‖* = 1, f(x) = ‖x‖}`.
    pub fn support_functionals(&self, x: &Vector, tol: f64) -> Result<Vec<Functional>> {
        self.check_dim(x.len())?;
        let nx = self.norm(x);
        if nx == 0.0 {
            return Err(Error::ZeroVector);
        }
        let out = match &self.norm {
            Norm::Lp(p) if *p == 1.0 => {
                let free: Vec<usize> = (0..self.dim).filter(|&i| x[i].norm() <= tol * nx).collect();
                let base: Vec<C64> = x
                    .iter()
                    .map(|&z| if z.norm() <= tol * nx { ZERO } else { phase(z).conj() })
                    .collect();
                let choices: Vec<C64> = match self.field {
                    Field::Real => vec![c(1.0), c(-1.0)],
                    Field::Complex => (0..COMPLEX_FREE_PHASES)
                        .map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / COMPLEX_FREE_PHASES as f64))
                        .collect(),
                };
                let mut out = vec![base];
                for &i in &free {
                    if out.len() * choices.len() > MAX_ENUMERATED {
                        return Err(Error::DimensionCap { dim: self.dim, cap: VERTEX_DIM_CAP });
                    }
                    out = out
                        .into_iter()
                        .flat_map(|f| {
                            choices.iter().map(move |&ch| {
                                let mut g = f.clone();
                                g[i] = ch;
                                g
                            })
                        })
                        .collect();
                }
                out.into_iter().map(Functional).collect()
            }
            Norm::Lp(p) if *p == f64::INFINITY => (0..self.dim)
                .filter(|&i| x[i].norm() >= nx * (1.0 - tol))
                .map(|i| {
                    let mut f = vec![ZERO; self.dim];
                    f[i] = phase(x[i]).conj();
                    Functional(f)
                })
                .collect(),
            Norm::Lp(p) => {
                let f = x
                    .iter()
                    .map(|&z| phase(z).conj() * (z.norm() / nx).powf(p - 1.0))
                    .collect();
                vec![Functional(f)]
            }
            Norm::Polyhedral(fs) => {
                let mut active: Vec<Vec<f64>> = Vec::new();
                for f in fs {
                    let v = f.iter().zip(x.iter()).map(|(a, b)| a * b.re).sum::<f64>();
                    if v.abs() >= nx * (1.0 - tol) {
                        let s = v.signum();
                        let g: Vec<f64> = f.iter().map(|a| s * a).collect();
                        if !active.iter().any(|h| close(h, &g)) {
                            active.push(g);
                        }
                    }
                }
                let extreme: Vec<Vec<f64>> = (0..active.len())
                    .filter(|&k| {
                        let others: Vec<Vec<f64>> =
                            active.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, g)| g.clone()).collect();
                        !simplex::in_convex_hull(&others, &active[k])
                    })
                    .map(|k| active[k].clone())
                    .collect();
                extreme.iter().map(|g| Functional::real(g)).collect()
            }
        };
        Ok(out)
    }

    /// `max{|f(z)| : f ∈ J(w)}` together with a maximizing support functional.
    /// Exact for every supported norm, including complex ℓ₁ where the
    /// extreme set of `J(w)` is a continuum.
    pub fn max_support_pairing(&self, w: &[C64], z: &[C64], tol: f64) -> Result<(f64, Functional)> {
        let nw = self.norm(w);
        if nw == 0.0 {
            return Err(Error::ZeroVector);
        }
        if self.p() == Some(1.0) {
            let mut f: Vec<C64> = w
                .iter()
                .map(|&wi| if wi.norm() <= tol * nw { ZERO } else { phase(wi).conj() })
                .collect();
            let fixed = dot(&f, z);
            let align = phase(fixed);
            for i in 0..self.dim {
                if w[i].norm() <= tol * nw {
                    f[i] = match self.field {
                        Field::Real => c(align.re.signum() * if z[i].re < 0.0 { -1.0 } else { 1.0 }),
                        Field::Complex => align * phase(z[i]).conj(),
                    };
                }
            }
            let val = dot(&f, z).norm();
            return Ok((val, Functional(f)));
        }
        let fs = self.support_functionals(&Vector(w.to_vec()), tol)?;
        let mut best: Option<(f64, Functional)> = None;
        for f in fs {
            let v = f.apply(z).norm();
            if best.as_ref().map_or(true, |(b, _)| v > *b + 1e-15) {
                best = Some((v, f));
            }
        }
        Ok(best.expect("support set is non-empty"))
    }

    /// One element of `J(w)`, cheap enough for inner loops.
    pub fn support_functional(&self, w: &[C64]) -> Functional {
        let nw = self.norm(w);
        match &self.norm {
            Norm::Lp(p) if *p == 1.0 => Functional(w.iter().map(|&z| if z.norm() <= 1e-300 { c(1.0) } else { phase(z).conj() }).collect()),
            Norm::Lp(p) if *p == f64::INFINITY => {
                let k = (0..self.dim).fold(0, |b, i| if w[i].norm() > w[b].norm() { i } else { b });
                let mut f = vec![ZERO; self.dim];
                f[k] = phase(w[k]).conj();
                Functional(f)
            }
            Norm::Lp(p) => Functional(w.iter().map(|&z| phase(z).conj() * (z.norm() / nw).powf(p - 1.0)).collect()),
            Norm::Polyhedral(fs) => {
                let vals: Vec<f64> = fs.iter().map(|f| f.iter().zip(w).map(|(a, b)| a * b.re).sum()).collect();
                let k = (0..fs.len()).fold(0, |b, i| if vals[i].abs() > vals[b].abs() { i } else { b });
                let s = if vals[k] < 0.0 { -1.0 } else { 1.0 };
                Functional(fs[k].iter().map(|a| c(s * a)).collect())
            }
        }
    }

    /// A point of the closed unit ball maximizing `Re g(x)`.
    pub fn dual_argmax(&self, g: &[C64]) -> Vec<C64> {
        match &self.norm {
            Norm::Lp(p) if *p == 1.0 => {
                let k = (0..self.dim).fold(0, |b, i| if g[i].norm() > g[b].norm() { i } else { b });
                let mut x = vec![ZERO; self.dim];
                x[k] = phase(g[k]).conj();
                x
            }
            Norm::Lp(p) if *p == f64::INFINITY => g.iter().map(|&z| phase(z).conj()).collect(),
            Norm::Lp(p) => {
                let q = conjugate_exponent(*p);
                let nq = lp_norm(g, q);
                if nq == 0.0 {
                    let mut x = vec![ZERO; self.dim];
                    x[0] = c(1.0);
                    return x;
                }
                g.iter().map(|&z| phase(z).conj() * (z.norm() / nq).powf(q - 1.0)).collect()
            }
            Norm::Polyhedral(_) => {
                let verts = self.polytope_vertices().expect("validated polyhedral space");
                let mut best = verts[0].0.clone();
                let mut bv = f64::NEG_INFINITY;
                for v in verts {
                    let val = dot(g, &v).re;
                    if val > bv + 1e-15 {
                        bv = val;
                        best = v.0;
                    }
                }
                best
            }
        }
    }

    /// Deterministic points on the unit sphere: Gaussian directions, radially
    /// normalized in this norm.
    pub fn sphere_sample(&self, count: usize, seed: u64) -> Vec<Vector> {
        let mut r = rng::rng(seed);
        (0..count)
            .map(|_| loop {
                let v = rng::gaussian_vector(&mut r, self.dim, self.field);
                let n = self.norm(&v);
                if n > 1e-12 {
                    break Vector(v.iter().map(|z| z / n).collect());
                }
            })
            .collect()
    }

    /// Extreme points of the (real) unit ball.
    pub fn polytope_vertices(&self) -> Result<Vec<Vector>> {
        if !self.is_polyhedral() {
            return Err(Error::NotPolyhedral);
        }
        if self.field != Field::Real {
            return Err(Error::ComplexUnsupported);
        }
        if self.dim > VERTEX_DIM_CAP {
            return Err(Error::DimensionCap { dim: self.dim, cap: VERTEX_DIM_CAP });
        }
        let n = self.dim;
        let verts: Vec<Vec<f64>> = match &self.norm {
            Norm::Lp(p) if *p == 1.0 => (0..n)
                .flat_map(|i| {
                    [1.0, -1.0].into_iter().map(move |s| {
                        let mut v = vec![0.0; n];
                        v[i] = s;
                        v
                    })
                })
                .collect(),
            Norm::Lp(_) => sign_vectors(n),
            Norm::Polyhedral(fs) => enumerate_vertices(fs, n),
        };
        Ok(verts.iter().map(|v| Vector::real(v)).collect())
    }

    /// Dual functionals `φ` whose level set `{φ = 1}` supports a face of the
    /// unit ball, with the indices of the ball vertices on that face.
    pub fn ball_faces(&self) -> Result<Vec<(Vec<f64>, Vec<usize>)>> {
        let verts = self.polytope_vertices()?;
        let n = self.dim;
        let normals: Vec<Vec<f64>> = match &self.norm {
            Norm::Lp(p) if *p == 1.0 => sign_vectors(n),
            Norm::Lp(_) => (0..n)
                .flat_map(|i| {
                    [1.0, -1.0].into_iter().map(move |s| {
                        let mut v = vec![0.0; n];
                        v[i] = s;
                        v
                    })
                })
                .collect(),
            Norm::Polyhedral(fs) => fs.iter().flat_map(|f| [f.clone(), f.iter().map(|x| -x).collect()]).collect(),
        };
        let mut out = Vec::new();
        for phi in normals {
            let on: Vec<usize> = verts
                .iter()
                .enumerate()
                .filter(|(_, v)| (phi.iter().zip(v.iter()).map(|(a, b)| a * b.re).sum::<f64>() - 1.0).abs() <= 1e-9)
                .map(|(i, _)| i)
                .collect();
            if on.len() >= 2 {
                out.push((phi, on));
            }
        }
        Ok(out)
    }
}

pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p == f64::INFINITY {
        1.0
    } else {
        p / (p - 1.0)
    }
}

pub fn lp_norm(x: &[C64], p: f64) -> f64 {
    let m = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if p == f64::INFINITY || m == 0.0 {
        return m;
    }
    if p == 1.0 {
        return x.iter().map(|z| z.norm()).sum();
    }
    if p == 2.0 {
        return x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    }
    m * x.iter().map(|z| (z.norm() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9)
}

fn sign_vectors(n: usize) -> Vec<Vec<f64>> {
    (0..1usize << n)
        .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect())
        .collect()
}

fn rank(rows: &[Vec<f64>]) -> usize {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    let mut r = 0;
    for col in 0..cols {
        let Some(p) = (r..m.len()).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())) else { break };
        if m[p][col].abs() <= 1e-10 * scale {
            continue;
        }
        m.swap(r, p);
        for i in r + 1..m.len() {
            let f = m[i][col] / m[r][col];
            for j in col..cols {
                m[i][j] -= f * m[r][j];
            }
        }
        r += 1;
    }
    r
}

/// Vertices of `{x : |F_i · x| ≤ 1}` by solving every square subsystem
/// `F_S x = s` and keeping the feasible, distinct solutions.
fn enumerate_vertices(fs: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    let m = fs.len();
    let mut subset: Vec<usize> = (0..n).collect();
    if m < n {
        return out;
    }
    loop {
        let rows: Vec<Vec<f64>> = subset.iter().map(|&i| fs[i].clone()).collect();
        for signs in sign_vectors(n) {
            if let Ok(x) = solve_real(&rows, &signs) {
                let feasible = fs.iter().all(|f| f.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>().abs() <= 1.0 + 1e-9);
                if feasible && !out.iter().any(|v| close(v, &x)) {
                    out.push(x);
                }
            }
        }
        // next n-combination of 0..m
        let mut i = n;
        loop {
            if i == 0 {
                out.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
                return out;
            }
            i -= 1;
            if subset[i] < m - n + i {
                subset[i] += 1;
                for j in i + 1..n {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawP {
    Num(f64),
    Str(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<RawP>,
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    field: Option<Field>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    functionals: Option<Vec<Vec<f64>>>,
}

impl TryFrom<RawSpace> for SpaceSpec {
    type Error = Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        match raw.kind.as_str() {
            "lp" => {
                let p = match raw.p {
                    Some(RawP::Num(p)) => p,
                    Some(RawP::Str(s)) if matches!(s.as_str(), "inf" | "infinity" | "Inf") => f64::INFINITY,
                    Some(RawP::Str(s)) => return Err(Error::InvalidSpace(format!("unrecognized p {s:?}"))),
                    None => return Err(Error::InvalidSpace("lp space requires p".into())),
                };
                if raw.functionals.is_some() {
                    return Err(Error::InvalidSpace("lp space does not take functionals".into()));
                }
                SpaceSpec::lp(p, raw.dim, raw.field.unwrap_or(Field::Real))
            }
            "polyhedral" => {
                if raw.field == Some(Field::Complex) {
                    return Err(Error::InvalidSpace("polyhedral norms are real only".into()));
                }
                let fs = raw.functionals.ok_or_else(|| Error::InvalidSpace("polyhedral space requires functionals".into()))?;
                SpaceSpec::polyhedral(raw.dim, fs)
            }
            other => Err(Error::InvalidSpace(format!("unknown kind {other:?}"))),
        }
    }
}

impl From<SpaceSpec> for RawSpace {
    fn from(s: SpaceSpec) -> Self {
        match s.norm {
            Norm::Lp(p) => RawSpace {
                kind: "lp".into(),
                p: Some(if p == f64::INFINITY { RawP::Str("inf".into()) } else { RawP::Num(p) }),
                dim: s.dim,
                field: Some(s.field),
                functionals: None,
            },
            Norm::Polyhedral(fs) => RawSpace { kind: "polyhedral".into(), p: None, dim: s.dim, field: None, functionals: Some(fs) },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn l(p: f64, n: usize) -> SpaceSpec {
        SpaceSpec::real_lp(p, n)
    }

    fn box2() -> SpaceSpec {
        SpaceSpec::polyhedral(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn norm_examples() {
        assert_eq!(l(1.0, 2).norm_eval(&Vector::real(&[0.6, -0.4])).unwrap(), 1.0);
        assert_eq!(l(f64::INFINITY, 3).norm_eval(&Vector::real(&[1.0, -2.0, 0.5])).unwrap(), 2.0);
        assert_eq!(box2().norm_eval(&Vector::real(&[0.3, 0.9])).unwrap(), 0.9);
    }

    #[test]
    fn norm_dimension_mismatch() {
        assert!(matches!(
            l(2.0, 3).norm_eval(&Vector::real(&[1.0])),
            Err(Error::DimensionMismatch { expected: 3, actual: 1 })
        ));
    }

    #[test]
    fn dual_norm_examples() {
        assert_eq!(l(1.0, 2).dual_norm_eval(&Functional::real(&[3.0, -1.0])).unwrap(), 3.0);
        assert!((l(2.0, 2).dual_norm_eval(&Functional::real(&[0.6, 0.8])).unwrap() - 1.0).abs() < 1e-15);
        // oracle: maximize f over the ±1 vertex grid of the square
        let f = [1.0, 1.0];
        let oracle = sign_vectors(2).iter().map(|v| (f[0] * v[0] + f[1] * v[1]).abs()).fold(0.0, f64::max);
        assert_eq!(oracle, 2.0);
        assert!((box2().dual_norm_eval(&Functional::real(&f)).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn support_functional_examples() {
        let j = l(2.0, 2).support_functionals(&Vector::real(&[0.6, 0.8]), 1e-9).unwrap();
        assert_eq!(j.len(), 1);
        assert!((j[0][0].re - 0.6).abs() < 1e-15 && (j[0][1].re - 0.8).abs() < 1e-15);

        // oracle: enumerate the ℓ∞ dual vertices f with f(x) = 1
        let x = [1.0, 0.0];
        let expected: Vec<Vec<f64>> =
            sign_vectors(2).into_iter().filter(|f| (f[0] * x[0] + f[1] * x[1] - 1.0).abs() < 1e-12).collect();
        let j = l(1.0, 2).support_functionals(&Vector::real(&x), 1e-9).unwrap();
        let got: Vec<Vec<f64>> = j.iter().map(|f| f.iter().map(|z| z.re).collect()).collect();
        assert_eq!(got.len(), expected.len());
        for e in &expected {
            assert!(got.contains(e));
        }
        assert!(got.contains(&vec![1.0, 1.0]) && got.contains(&vec![1.0, -1.0]));

        let j = l(f64::INFINITY, 2).support_functionals(&Vector::real(&[1.0, 1.0]), 1e-9).unwrap();
        let got: Vec<Vec<f64>> = j.iter().map(|f| f.iter().map(|z| z.re).collect()).collect();
        assert_eq!(got, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn polyhedral_support_drops_interior_functionals() {
        // the middle functional is the average of the other two at x = (1, 1)
        let s = SpaceSpec::polyhedral(2, vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap();
        let j = s.support_functionals(&Vector::real(&[1.0, 1.0]), 1e-9).unwrap();
        assert_eq!(j.len(), 2);
    }

    #[test]
    fn support_functionals_reject_zero() {
        assert_eq!(l(2.0, 2).support_functionals(&Vector::real(&[0.0, 0.0]), 1e-9), Err(Error::ZeroVector));
    }

    #[test]
    fn complex_lp_support_is_pre_conjugated() {
        let s = SpaceSpec::lp(3.0, 2, Field::Complex).unwrap();
        let x = vec![C64::new(0.3, 0.4), C64::new(-0.2, 0.9)];
        let f = &s.support_functionals(&Vector(x.clone()), 1e-9).unwrap()[0];
        let v = f.apply(&x);
        assert!((v.re - s.norm(&x)).abs() < 1e-12 && v.im.abs() < 1e-12);
        assert!((s.dual_norm(f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_sample_contract() {
        let s = l(2.0, 2);
        let pts = s.sphere_sample(4, 7);
        assert_eq!(pts.len(), 4);
        assert!(pts.iter().all(|p| (s.norm(p) - 1.0).abs() <= 1e-12));
        let s1 = l(1.0, 3);
        assert!(s1.sphere_sample(1000, 1).iter().all(|p| (p.iter().map(|z| z.norm()).sum::<f64>() - 1.0).abs() <= 1e-12));
        assert_eq!(s1.sphere_sample(50, 3), s1.sphere_sample(50, 3));
    }

    #[test]
    fn complex_samples_have_imaginary_parts() {
        let s = SpaceSpec::lp(2.0, 3, Field::Complex).unwrap();
        assert!(s.sphere_sample(3, 5).iter().any(|v| v.iter().any(|z| z.im != 0.0)));
    }

    #[test]
    fn vertex_examples() {
        let v = l(1.0, 2).polytope_vertices().unwrap();
        assert_eq!(v.len(), 4);
        for e in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            assert!(v.contains(&Vector::real(&e)));
        }
        let mut a: Vec<Vector> = l(f64::INFINITY, 2).polytope_vertices().unwrap();
        let mut b = box2().polytope_vertices().unwrap();
        assert_eq!(a.len(), 4);
        let key = |v: &Vector| (v[0].re.to_bits(), v[1].re.to_bits());
        a.sort_by_key(key);
        b.sort_by_key(key);
        assert_eq!(a, b);
    }

    #[test]
    fn vertex_errors() {
        assert_eq!(l(2.0, 2).polytope_vertices(), Err(Error::NotPolyhedral));
        assert!(matches!(l(1.0, 7).polytope_vertices(), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn seminorm_functionals_rejected() {
        assert!(SpaceSpec::polyhedral(2, vec![vec![1.0, 0.0], vec![2.0, 0.0]]).is_err());
    }

    #[test]
    fn serde_forms() {
        let s: SpaceSpec = serde_json::from_str(r#"{"kind":"lp","p":1,"dim":2,"field":"real"}"#).unwrap();
        assert_eq!(s, l(1.0, 2));
        let s: SpaceSpec = serde_json::from_str(r#"{"kind":"lp","p":"inf","dim":3}"#).unwrap();
        assert_eq!(s, l(f64::INFINITY, 3));
        let s: SpaceSpec = serde_json::from_str(r#"{"kind":"polyhedral","dim":2,"functionals":[[1,0],[0,1]]}"#).unwrap();
        assert_eq!(s, box2());
        assert!(serde_json::from_str::<SpaceSpec>(r#"{"kind":"polyhedral","dim":2,"field":"complex","functionals":[[1,0],[0,1]]}"#).is_err());
        let back: SpaceSpec = serde_json::from_str(&serde_json::to_string(&l(f64::INFINITY, 2)).unwrap()).unwrap();
        assert_eq!(back, l(f64::INFINITY, 2));
    }

    #[test]
    fn dual_argmax_attains_dual_norm() {
        for s in [l(1.0, 3), l(2.0, 3), l(3.0, 3), l(f64::INFINITY, 3), box2()] {
            let g: Vec<C64> = (0..s.dim()).map(|i| c(0.3 + i as f64 * -0.7)).collect();
            let x = s.dual_argmax(&g);
            assert!((dot(&g, &x).re - s.dual_norm(&g).unwrap()).abs() < 1e-12);
            assert!(s.norm(&x) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn max_support_pairing_complex_l1_free_coordinates() {
        let s = SpaceSpec::lp(1.0, 2, Field::Complex).unwrap();
        let w = vec![C64::new(0.0, 1.0), ZERO];
        let z = vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)];
        let (v, f) = s.max_support_pairing(&w, &z, 1e-9).unwrap();
        // |conj(i)·1| + |2i| = 3
        assert!((v - 3.0).abs() < 1e-12);
        assert!((s.dual_norm(&f).unwrap() - 1.0).abs() < 1e-12);
    }

    fn space_strategy() -> impl Strategy<Value = SpaceSpec> {
        prop_oneof![
            Just(l(1.0, 3)),
            Just(l(2.0, 3)),
            Just(l(3.5, 3)),
            Just(l(f64::INFINITY, 3)),
            Just(SpaceSpec::polyhedral(3, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.5, 0.5, 0.5]]).unwrap()),
        ]
    }

    fn vec3() -> impl Strategy<Value = Vec<C64>> {
        prop::collection::vec(-5.0f64..5.0, 3).prop_map(|v| v.into_iter().map(c).collect())
    }

    proptest! {
        #[test]
        fn prop_homogeneity(s in space_strategy(), x in vec3(), lam in -4.0f64..4.0) {
            let lx: Vec<C64> = x.iter().map(|z| z * lam).collect();
            prop_assert!((s.norm(&lx) - lam.abs() * s.norm(&x)).abs() <= 1e-12 * (1.0 + s.norm(&lx)));
        }

        #[test]
        fn prop_triangle(s in space_strategy(), x in vec3(), y in vec3()) {
            let xy: Vec<C64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            prop_assert!(s.norm(&xy) <= s.norm(&x) + s.norm(&y) + 1e-12);
        }

        #[test]
        fn prop_support_functionals_are_norming(s in space_strategy(), x in vec3()) {
            prop_assume!(s.norm(&x) > 1e-6);
            let tol = 1e-9;
            for f in s.support_functionals(&Vector(x.clone()), tol).unwrap() {
                prop_assert!((s.dual_norm(&f).unwrap() - 1.0).abs() <= 1e-8);
                prop_assert!((f.apply(&x).re - s.norm(&x)).abs() <= 1e-8 * (1.0 + s.norm(&x)));
            }
        }

        #[test]
        fn prop_polyhedral_dual_norm_matches_vertices(f in vec3()) {
            let s = SpaceSpec::polyhedral(3, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.5, 0.5, 0.5]]).unwrap();
            let by_vertices = s.polytope_vertices().unwrap().iter().map(|v| dot(&f, v).norm()).fold(0.0, f64::max);
            prop_assert!((s.dual_norm(&f).unwrap() - by_vertices).abs() <= 1e-9 * (1.0 + by_vertices));
        }
    }

    #[test]
    fn lp_dual_norm_matches_sphere_sampling() {
        for p in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
            let s = l(p, 3);
            let f = [c(0.7), c(-1.3), c(0.4)];
            let sampled = s.sphere_sample(10_000, 5).iter().map(|x| dot(&f, x).norm()).fold(0.0, f64::max);
            let exact = s.dual_norm(&f).unwrap();
            assert!(sampled <= exact + 1e-12);
            // ℓ₁ spheres concentrate away from the maximizing vertex; finish
            // the comparison with the vertices, which lie on the sphere too.
            let sampled = if s.is_polyhedral() {
                sampled.max(s.polytope_vertices().unwrap().iter().map(|x| dot(&f, x).norm()).fold(0.0, f64::max))
            } else {
                sampled
            };
            assert!(exact - sampled <= 1e-3, "p={p}: {exact} vs {sampled}");
        }
    }
}
