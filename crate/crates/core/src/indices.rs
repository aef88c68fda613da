//! Sampled upper estimates of the numerical indices
//! `n_G = inf{ν_G(T) : ‖T‖ = 1}`, `n_G^(1) = inf{‖T‖_G : ‖T‖ = 1}` and
//! `n_G^(2) = inf{ν_G(T) : ‖T‖_G = 1}`.
//!
//! Every estimate is the minimum of a ratio over a finite deck, so it bounds
//! the infimum from above. Each deck operator is refined by coordinate
//! descent on its matrix entries; refinement runs from every deck member, so
//! enlarging the deck can only lower an estimate.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnorm::{matrix_units, random_operators, GContext, Method};
use crate::linalg::{c, Matrix, C64};
use crate::numrange::nu_g;
use crate::operators::{op_norm, select_min, OperatorSpec};
use crate::spaces::Field;
use crate::spear::transport;

const REFINE_SWEEPS: usize = 60;
const REFINE_STEP: f64 = 0.25;
const REFINE_MIN_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndexKind {
    #[serde(rename = "nG")]
    NG,
    #[serde(rename = "n1")]
    N1,
    #[serde(rename = "n2")]
    N2,
}

impl IndexKind {
    pub const ALL: [IndexKind; 3] = [IndexKind::NG, IndexKind::N1, IndexKind::N2];
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndexKind::NG => "nG",
            IndexKind::N1 => "n1",
            IndexKind::N2 => "n2",
        })
    }
}

impl FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ng" | "nG" => Ok(IndexKind::NG),
            "n1" => Ok(IndexKind::N1),
            "n2" => Ok(IndexKind::N2),
            other => Err(Error::InvalidArgument(format!("unknown index kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEstimate {
    pub kind: IndexKind,
    /// An upper bound for the index.
    pub value: f64,
    /// The minimizing operator, scaled to `‖T‖ = 1` (nG, n1) or `‖T‖_G = 1` (n2).
    pub argmin_t: OperatorSpec,
    /// Deck operators the minimum ranges over.
    pub samples: usize,
    pub seed: u64,
    /// Some deck operator had `‖T‖_G ≤ tol`, so `‖·‖_G` is only a seminorm.
    pub seminorm_degenerate: bool,
}

/// The three norms entering the ratios of one operator.
#[derive(Debug, Clone, Copy)]
struct Norms {
    nu: f64,
    gnorm: f64,
    opnorm: f64,
}

fn norms(t: &OperatorSpec, ctx: &GContext) -> Result<Norms> {
    Ok(Norms { nu: nu_g(t, ctx)?.value, gnorm: ctx.g_norm(t, Method::Auto)?.value, opnorm: op_norm(t, ctx.budget())?.value })
}

impl Norms {
    /// The defining ratio and the normalizer; `None` when the normalizer
    /// vanishes within `tol`.
    fn ratio(&self, kind: IndexKind, tol: f64) -> Option<(f64, f64)> {
        let (num, den) = match kind {
            IndexKind::NG => (self.nu, self.opnorm),
            IndexKind::N1 => (self.gnorm, self.opnorm),
            IndexKind::N2 => (self.nu, self.gnorm),
        };
        (den > tol).then(|| (num / den, den))
    }
}

/// Coordinate descent on the matrix entries of `t0` for the ratio of `kind`.
fn refine(kind: IndexKind, t0: &OperatorSpec, ctx: &GContext) -> Result<Option<OperatorSpec>> {
    let tol = ctx.tol();
    let Some((mut best, _)) = norms(t0, ctx)?.ratio(kind, tol) else { return Ok(None) };
    let mut m = t0.matrix().clone();
    let scale = m.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let units: Vec<C64> = match t0.field() {
        Field::Real => vec![c(1.0)],
        Field::Complex => vec![c(1.0), C64::new(0.0, 1.0)],
    };
    let mut step = REFINE_STEP * scale;
    for _ in 0..REFINE_SWEEPS {
        let mut improved = false;
        for idx in 0..m.data().len() {
            for &u in &units {
                for s in [1.0, -1.0] {
                    let mut d = m.data().to_vec();
                    d[idx] += u * (s * step);
                    let trial = Matrix::from_rows(&d.chunks(m.cols()).map(|r| r.to_vec()).collect::<Vec<_>>())?;
                    let t = t0.with_matrix(trial.clone())?;
                    if let Some((r, _)) = norms(&t, ctx)?.ratio(kind, tol) {
                        if r < best - 1e-15 {
                            best = r;
                            m = trial;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < REFINE_MIN_STEP * scale {
                break;
            }
        }
    }
    Ok(Some(t0.with_matrix(m)?))
}

/// Matrix units followed by `samples` seeded random operators.
pub fn base_deck(g: &OperatorSpec, samples: usize, seed: u64) -> Vec<OperatorSpec> {
    let mut deck = matrix_units(g);
    deck.extend(random_operators(g, samples, seed));
    deck
}

/// The base deck plus, for every kind and every base operator, its refined
/// descendant. Refinement of all members needs exact G-norms to stay cheap;
/// with relaxation only the best base operator of each kind is refined.
fn refined_deck(ctx: &GContext, kinds: &[IndexKind], samples: usize, seed: u64) -> Result<Vec<OperatorSpec>> {
    let base = base_deck(ctx.g(), samples, seed);
    let exact = ctx.resolve(Method::Auto) != Method::Relaxation;
    let mut deck = base.clone();
    for &kind in kinds {
        let starts: Vec<OperatorSpec> = if exact {
            base.clone()
        } else {
            let (est, _) = minimize(ctx, kind, &base)?;
            vec![est.argmin_t]
        };
        let refined: Vec<Option<OperatorSpec>> = starts.par_iter().map(|t| refine(kind, t, ctx)).collect::<Result<_>>()?;
        deck.extend(refined.into_iter().flatten());
    }
    Ok(deck)
}

/// Minimum of the `kind` ratio over `deck`; ties go to the lexicographically
/// smallest normalized matrix.
fn minimize(ctx: &GContext, kind: IndexKind, deck: &[OperatorSpec]) -> Result<(IndexEstimate, usize)> {
    let tol = ctx.tol();
    let evals: Vec<Option<(f64, OperatorSpec)>> = deck
        .par_iter()
        .map(|t| Ok(norms(t, ctx)?.ratio(kind, tol).map(|(r, den)| (r, t.scaled(c(1.0 / den))))))
        .collect::<Result<_>>()?;
    let skipped = evals.iter().filter(|e| e.is_none()).count();
    let evals: Vec<(f64, OperatorSpec)> = evals.into_iter().flatten().collect();
    let flat: Vec<Vec<C64>> = evals.iter().map(|e| e.1.matrix().data().to_vec()).collect();
    let k = select_min(evals.iter().zip(&flat).map(|(e, f)| (e.0, f.as_slice())))
        .ok_or_else(|| Error::Degenerate("every deck operator has a vanishing normalizer".into()))?;
    let (value, argmin_t) = evals[k].clone();
    let degenerate = kind == IndexKind::N2 && skipped > 0;
    Ok((IndexEstimate { kind, value, argmin_t, samples: evals.len(), seed: 0, seminorm_degenerate: degenerate }, k))
}

fn estimate_on(ctx: &GContext, kind: IndexKind, deck: &[OperatorSpec], seed: u64) -> Result<IndexEstimate> {
    let (mut est, _) = minimize(ctx, kind, deck)?;
    est.seed = seed;
    if kind != IndexKind::N2 {
        // ‖T‖_G = 0 on some operator still marks the seminorm case
        let tol = ctx.tol();
        let flags: Vec<bool> = deck.par_iter().map(|t| Ok(ctx.g_norm(t, Method::Auto)?.value <= tol)).collect::<Result<_>>()?;
        est.seminorm_degenerate = flags.into_iter().any(|f| f);
    }
    Ok(est)
}

pub fn estimate_index(ctx: &GContext, kind: IndexKind, samples: usize, seed: u64) -> Result<IndexEstimate> {
    let deck = refined_deck(ctx, &[kind], samples, seed)?;
    estimate_on(ctx, kind, &deck, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexChain {
    pub ng: IndexEstimate,
    pub n1: IndexEstimate,
    pub n2: IndexEstimate,
    /// `n̂1·n̂2 ≤ n̂G + tol`.
    pub product_ok: bool,
    /// `n̂2 ≥ 1 − tol` implies `|n̂1 − n̂G| ≤ tol`.
    pub collapse_ok: bool,
}

/// All three estimates on one shared deck (the base deck and every kind's
/// refinements), so the product inequality holds operator by operator.
pub fn index_chain_check(ctx: &GContext, samples: usize, seed: u64) -> Result<IndexChain> {
    let deck = refined_deck(ctx, &IndexKind::ALL, samples, seed)?;
    let ng = estimate_on(ctx, IndexKind::NG, &deck, seed)?;
    let n1 = estimate_on(ctx, IndexKind::N1, &deck, seed)?;
    let n2 = estimate_on(ctx, IndexKind::N2, &deck, seed)?;
    let tol = ctx.tol();
    let product_ok = n1.value * n2.value <= ng.value + tol;
    let collapse_ok = n2.value < 1.0 - tol || (n1.value - ng.value).abs() <= tol;
    Ok(IndexChain { ng, n1, n2, product_ok, collapse_ok })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceRecord {
    pub max_gnorm_dev: f64,
    pub max_nu_dev: f64,
    pub ok: bool,
}

pub const INVARIANCE_TOL: f64 = 1e-8;

/// Compares `‖T‖_G, ν_G(T)` with `‖T'‖_{G'}, ν_{G'}(T')` where primes denote
/// transport along `U₁, U₂`, over the base deck.
pub fn invariance_check(ctx: &GContext, u1: &OperatorSpec, u2: &OperatorSpec, samples: usize, seed: u64) -> Result<InvarianceRecord> {
    let g2 = transport(ctx.g(), u1, u2)?;
    let ctx2 = GContext::new(&g2, ctx.tol(), ctx.budget())?;
    let deck = base_deck(ctx.g(), samples, seed);
    let devs: Vec<(f64, f64)> = deck
        .par_iter()
        .map(|t| {
            let t2 = transport(t, u1, u2)?;
            let dg = (ctx.g_norm(t, Method::Auto)?.value - ctx2.g_norm(&t2, Method::Auto)?.value).abs();
            let dn = (nu_g(t, ctx)?.value - nu_g(&t2, &ctx2)?.value).abs();
            Ok((dg, dn))
        })
        .collect::<Result<_>>()?;
    let max_gnorm_dev = devs.iter().map(|d| d.0).fold(0.0, f64::max);
    let max_nu_dev = devs.iter().map(|d| d.1).fold(0.0, f64::max);
    Ok(InvarianceRecord { max_gnorm_dev, max_nu_dev, ok: max_gnorm_dev <= INVARIANCE_TOL && max_nu_dev <= INVARIANCE_TOL })
}
