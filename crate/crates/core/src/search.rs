//! Derivative-free local maximization on the unit sphere of a space,
//! optionally subject to `‖Gx‖ ≥ level`.
//!
//! Infeasible trial points are pulled back by a restoration step: one or more
//! power steps toward larger `‖Gx‖` give a feasible target `y`, and bisection
//! along the normalized segment from `x` to `y` finds the closest feasible
//! point on it.

use rayon::prelude::*;

use crate::linalg::{c, inner, phase, C64, ZERO};
use crate::operators::OperatorSpec;
use crate::spaces::{Field, SpaceSpec};

const RESTORE_BISECTIONS: usize = 48;
const RESTORE_POWER_STEPS: usize = 60;

#[derive(Debug, Clone, Copy)]
pub struct Constraint<'a> {
    pub op: &'a OperatorSpec,
    pub level: f64,
    /// A known maximizer of `‖Gx‖`, used when power steps stall.
    pub anchor: Option<&'a [C64]>,
}

impl Constraint<'_> {
    pub fn value(&self, x: &[C64]) -> f64 {
        self.op.image_norm(x)
    }

    pub fn holds(&self, x: &[C64]) -> bool {
        self.value(x) >= self.level
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub step0: f64,
    pub min_step: f64,
    pub max_iters: usize,
}

impl SearchOptions {
    pub fn with_step(step0: f64, max_iters: usize) -> Self {
        Self { step0, min_step: (1e-5 * step0).max(1e-9), max_iters }
    }
}

/// One step of the power method for `max ‖Gx‖` on the sphere.
pub fn power_step(op: &OperatorSpec, x: &[C64]) -> Option<Vec<C64>> {
    let gx = op.apply(x);
    if op.codomain().norm(&gx) <= 1e-300 {
        return None;
    }
    let ystar = op.codomain().support_functional(&gx);
    let g = op.matrix().pullback(&ystar);
    if g.iter().all(|z| z.norm() == 0.0) {
        return None;
    }
    let y = op.domain().dual_argmax(&g);
    let n = op.domain().norm(&y);
    if !(n > 0.0) {
        return None;
    }
    Some(y.iter().map(|z| z / n).collect())
}

/// Power iteration until `‖Gx‖` stops increasing.
pub fn power_ascent(op: &OperatorSpec, x0: &[C64], iters: usize) -> Vec<C64> {
    let mut x = x0.to_vec();
    let mut val = op.image_norm(&x);
    for _ in 0..iters {
        let Some(y) = power_step(op, &x) else { break };
        let v = op.image_norm(&y);
        if v <= val * (1.0 + 1e-15) {
            if v >= val {
                x = y;
            }
            break;
        }
        x = y;
        val = v;
    }
    x
}

/// Moves a unit vector into `{‖Gx‖ ≥ level}`; `None` when the power method
/// from `x` never reaches the level.
pub fn restore(space: &SpaceSpec, con: &Constraint, x: &[C64]) -> Option<Vec<C64>> {
    if con.holds(x) {
        return Some(x.to_vec());
    }
    let mut y = x.to_vec();
    let mut reached = false;
    for _ in 0..RESTORE_POWER_STEPS {
        match power_step(con.op, &y) {
            Some(z) => y = z,
            None => break,
        }
        if con.holds(&y) {
            reached = true;
            break;
        }
    }
    if !reached {
        match con.anchor {
            Some(a) if con.holds(a) => y = a.to_vec(),
            _ => return None,
        }
    }
    let w = phase(inner(&y, x)).conj();
    let y: Vec<C64> = y.iter().map(|z| z * w).collect();
    let at = |t: f64| -> Option<Vec<C64>> {
        let z: Vec<C64> = x.iter().zip(&y).map(|(a, b)| a * (1.0 - t) + b * t).collect();
        let n = space.norm(&z);
        (n > 1e-12).then(|| z.iter().map(|v| v / n).collect())
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best = y.clone();
    for _ in 0..RESTORE_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        match at(mid) {
            Some(z) if con.holds(&z) => {
                hi = mid;
                best = z;
            }
            _ => lo = mid,
        }
    }
    Some(best)
}

fn directions(dim: usize, field: Field) -> Vec<Vec<C64>> {
    let units: Vec<C64> = match field {
        Field::Real => vec![c(1.0)],
        Field::Complex => vec![c(1.0), C64::new(0.0, 1.0)],
    };
    let mut out = Vec::new();
    for i in 0..dim {
        for &u in &units {
            for s in [1.0, -1.0] {
                let mut d = vec![ZERO; dim];
                d[i] = u * s;
                out.push(d);
            }
        }
    }
    for i in 0..dim {
        for j in i + 1..dim {
            for &u in &units {
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut d = vec![ZERO; dim];
                    d[i] = c(si);
                    d[j] = u * sj;
                    out.push(d);
                }
            }
        }
    }
    out
}

/// Pattern-search ascent of `objective` from `x0`, staying on the unit sphere
/// and (when given) inside the constraint set.
pub fn local_max<F>(space: &SpaceSpec, objective: &F, con: Option<&Constraint>, x0: &[C64], opts: &SearchOptions) -> Option<(f64, Vec<C64>)>
where
    F: Fn(&[C64]) -> f64 + ?Sized,
{
    let n0 = space.norm(x0);
    if !(n0 > 0.0) {
        return None;
    }
    let mut x: Vec<C64> = x0.iter().map(|z| z / n0).collect();
    if let Some(con) = con {
        x = restore(space, con, &x)?;
    }
    let mut f = objective(&x);
    let dirs = directions(space.dim(), space.field());
    let mut step = opts.step0;
    for _ in 0..opts.max_iters {
        let mut best: Option<(f64, Vec<C64>)> = None;
        for d in &dirs {
            let z: Vec<C64> = x.iter().zip(d).map(|(a, b)| a + b * step).collect();
            let nz = space.norm(&z);
            if !(nz > 0.0) {
                continue;
            }
            let mut z: Vec<C64> = z.iter().map(|v| v / nz).collect();
            if let Some(con) = con {
                match restore(space, con, &z) {
                    Some(r) => z = r,
                    None => continue,
                }
            }
            let fz = objective(&z);
            if fz > f + 1e-15 * (1.0 + f.abs()) && best.as_ref().map_or(true, |(b, _)| fz > *b) {
                best = Some((fz, z));
            }
        }
        match best {
            Some((fz, z)) => {
                f = fz;
                x = z;
            }
            None => {
                step *= 0.5;
                if step < opts.min_step {
                    break;
                }
            }
        }
    }
    Some((f, x))
}

/// [`local_max`] from every start, in parallel; results keep the start order
/// and omit starts that could not be made feasible.
pub fn multi_start<F>(space: &SpaceSpec, objective: &F, con: Option<&Constraint>, starts: &[Vec<C64>], opts: &SearchOptions) -> Vec<(f64, Vec<C64>)>
where
    F: Fn(&[C64]) -> f64 + Sync + ?Sized,
{
    starts
        .par_iter()
        .map(|s| local_max(space, objective, con, s, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}
