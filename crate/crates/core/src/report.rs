//! Deterministic report emission.
//!
//! Object keys keep insertion order, floats are printed with 17 significant
//! digits and complex numbers as `[re, im]`. Equal inputs give equal bytes.

use std::fmt::Write;

use crate::geometry::{ComparisonModulus, DominanceRecord, Membership, RankOneFunctional, SmoothResult};
use crate::gnorm::{ChainRecord, GNormResult};
use crate::hilbert::{HilbertAnalysis, PartialIsometryVerdict};
use crate::indices::{IndexChain, IndexEstimate, InvarianceRecord};
use crate::linalg::{Matrix, C64};
use crate::numrange::{NuResult, RangeSample, RangeSummary};
use crate::operators::OperatorSpec;
use crate::spaces::Field;
use crate::spear::{EquivalenceRecord, SpearReport};

#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    UInt(u64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Json {
    pub fn obj() -> Self {
        Json::Obj(Vec::new())
    }

    /// Appends a key; panics on non-objects.
    pub fn with(mut self, key: &str, value: impl Into<Json>) -> Self {
        match &mut self {
            Json::Obj(fields) => fields.push((key.to_string(), value.into())),
            _ => panic!("with() on a non-object"),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&Json> {
        match self {
            Json::Obj(fields) => fields.iter().find(|(k, _)| k == key).map(|(_, v)| v),
            _ => None,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::UInt(n) => write!(out, "{n}").unwrap(),
            Json::Num(x) if x.is_finite() => out.push_str(&fmt_f64(*x)),
            Json::Num(_) => out.push_str("null"),
            Json::Str(s) => out.push_str(&serde_json::to_string(s).unwrap()),
            Json::Arr(items) => {
                if items.iter().all(|v| !matches!(v, Json::Arr(_) | Json::Obj(_))) {
                    out.push('[');
                    for (i, v) in items.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        v.write(out, indent);
                    }
                    out.push(']');
                    return;
                }
                out.push_str("[\n");
                for (i, v) in items.iter().enumerate() {
                    pad(out, indent + 1);
                    v.write(out, indent + 1);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                pad(out, indent);
                out.push(']');
            }
            Json::Obj(fields) => {
                if fields.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push_str("{\n");
                for (i, (k, v)) in fields.iter().enumerate() {
                    pad(out, indent + 1);
                    out.push_str(&serde_json::to_string(k).unwrap());
                    out.push_str(": ");
                    v.write(out, indent + 1);
                    out.push_str(if i + 1 < fields.len() { ",\n" } else { "\n" });
                }
                pad(out, indent);
                out.push('}');
            }
        }
    }
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

impl From<bool> for Json {
    fn from(b: bool) -> Self {
        Json::Bool(b)
    }
}

impl From<f64> for Json {
    fn from(x: f64) -> Self {
        Json::Num(x)
    }
}

impl From<u64> for Json {
    fn from(n: u64) -> Self {
        Json::UInt(n)
    }
}

impl From<usize> for Json {
    fn from(n: usize) -> Self {
        Json::UInt(n as u64)
    }
}

impl From<&str> for Json {
    fn from(s: &str) -> Self {
        Json::Str(s.to_string())
    }
}

impl From<String> for Json {
    fn from(s: String) -> Self {
        Json::Str(s)
    }
}

impl From<C64> for Json {
    fn from(z: C64) -> Self {
        Json::Arr(vec![Json::Num(z.re), Json::Num(z.im)])
    }
}

impl From<&[C64]> for Json {
    fn from(v: &[C64]) -> Self {
        Json::Arr(v.iter().map(|&z| z.into()).collect())
    }
}

impl From<Vec<f64>> for Json {
    fn from(v: Vec<f64>) -> Self {
        Json::Arr(v.into_iter().map(Json::Num).collect())
    }
}

impl From<&Matrix> for Json {
    fn from(m: &Matrix) -> Self {
        Json::Arr(m.to_rows().iter().map(|r| Json::from(r.as_slice())).collect())
    }
}

impl From<&OperatorSpec> for Json {
    fn from(t: &OperatorSpec) -> Self {
        Json::from(t.matrix())
    }
}

impl<T: Into<Json>> From<Option<T>> for Json {
    fn from(o: Option<T>) -> Self {
        o.map_or(Json::Null, Into::into)
    }
}

/// Conversion of solver results into report trees.
pub trait ToJson {
    fn to_json(&self) -> Json;
}

impl ToJson for GNormResult {
    fn to_json(&self) -> Json {
        let mut j = Json::obj()
            .with("value", self.value)
            .with("witness_x", &*self.witness.x)
            .with("method", self.method.to_string())
            .with("certified", self.certified);
        if let Some(p) = &self.profile {
            j = j.with("converged", self.converged).with(
                "delta_profile",
                Json::Arr(p.entries.iter().map(|&(d, s)| Json::Arr(vec![d.into(), s.into()])).collect()),
            );
        }
        j
    }
}

impl ToJson for NuResult {
    fn to_json(&self) -> Json {
        Json::obj()
            .with("value", self.value)
            .with("witness_x", &*self.witness.x)
            .with("witness_ystar", self.witness.ystar.as_ref().map(|y| Json::from(&**y)))
            .with("certified", self.certified)
    }
}

impl ToJson for SpearReport {
    fn to_json(&self) -> Json {
        Json::obj()
            .with("verdict", serde_json::to_value(self.verdict).unwrap().as_str().unwrap())
            .with("worst_T", &self.worst_t)
            .with("gap", self.gap)
            .with("samples_used", self.samples_used)
            .with("tol", self.tol)
            .with("seed", self.seed)
    }
}

impl ToJson for EquivalenceRecord {
    fn to_json(&self) -> Json {
        Json::obj()
            .with("lhs", self.lhs)
            .with("omega", self.omega.0)
            .with("gnorm", self.gnorm)
            .with("nu", self.nu)
            .with("lhs_holds", self.lhs_holds)
            .with("rhs_holds", self.rhs_holds)
            .with("consistent", self.consistent)
    }
}

impl ToJson for ChainRecord {
    fn to_json(&self) -> Json {
        Json::obj().with("nu", self.nu).with("gnorm", self.gnorm).with("opnorm", self.opnorm).with("ok", self.ok)
    }
}

impl ToJson for IndexEstimate {
    fn to_json(&self) -> Json {
        Json::obj()
            .with("kind", self.kind.to_string())
            .with("value", self.value)
            .with("argmin_T", &self.argmin_t)
            .with("samples", self.samples)
            .with("seed", self.seed)
            .with("seminorm_degenerate", self.seminorm_degenerate)
    }
}

impl ToJson for IndexChain {
    fn to_json(&self) -> Json {
        Json::obj()
            .with("nG", self.ng.to_json())
            .with("n1", self.n1.to_json())
            .with("n2", self.n2.to_json())
            .with("product_ok", self.product_ok)
            .with("collapse_ok", self.collapse_ok)
    }
}

impl ToJson for InvarianceRecord {
    fn to_json(&self) -> Json {
        Json::obj().with("max_gnorm_dev", self.max_gnorm_dev).with("max_nu_dev", self.max_nu_dev).with("ok", self.ok)
    }
}

impl ToJson for RankOneFunctional {
    fn to_json(&self) -> Json {
        Json::obj().with("x", &*self.x).with("ystar", &*self.ystar).with("W", &self.w)
    }
}

impl ToJson for SmoothResult {
    fn to_json(&self) -> Json {
        Json::obj()
            .with("smooth", self.smooth)
            .with("functional", self.functional.as_ref().map(ToJson::to_json))
            .with("diameter", self.diameter)
            .with("heuristic", self.heuristic)
    }
}

impl ToJson for Membership {
    fn to_json(&self) -> Json {
        Json::obj().with("inside", self.inside).with("distance", self.distance).with("atoms", self.atoms)
    }
}

impl ToJson for ComparisonModulus {
    fn to_json(&self) -> Json {
        Json::obj()
            .with("grid", Json::Arr(self.grid.iter().map(|&(t, p)| Json::Arr(vec![t.into(), p.into()])).collect()))
            .with("limit_ok", self.limit_ok)
    }
}

impl ToJson for DominanceRecord {
    fn to_json(&self) -> Json {
        Json::obj()
            .with("modulus", self.modulus.to_json())
            .with("dominance_ok", self.dominance_ok)
            .with("max_excess", self.max_excess)
            .with("worst_T", &self.worst_t)
    }
}

impl ToJson for HilbertAnalysis {
    fn to_json(&self) -> Json {
        let c = &self.conditions;
        Json::obj()
            .with("e_basis", Json::Arr(self.e_basis.iter().map(|v| Json::from(v.as_slice())).collect()))
            .with("gamma", self.gamma)
            .with("singular_values", self.singular_values.clone())
            .with("buckets", Json::Arr(self.buckets.iter().map(|&b| b.into()).collect()))
            .with(
                "conditions",
                Json::obj().with("gap", c.gap).with("concentration", c.concentration).with("gnorm_on_e", c.gnorm_on_e),
            )
            .with(
                "distance_checks",
                Json::Arr(
                    self.distance_checks
                        .iter()
                        .map(|d| {
                            Json::obj()
                                .with("delta", d.delta)
                                .with("max_dist_sq", d.max_dist_sq)
                                .with("bound", d.bound)
                                .with("violations", d.violations)
                                .with("sampled", d.sampled)
                        })
                        .collect(),
                ),
            )
            .with("max_gnorm_dev", self.max_gnorm_dev)
            .with("warning", self.warning.clone())
    }
}

impl ToJson for PartialIsometryVerdict {
    fn to_json(&self) -> Json {
        Json::obj()
            .with("is_partial_isometry", self.is_pi)
            .with("witness_T", self.witness_t.as_ref().map(Json::from))
            .with("witness_gnorm", self.witness_gnorm)
            .with("witness_nu", self.witness_nu)
            .with("singular_values", self.singular_values.clone())
    }
}

impl ToJson for RangeSummary {
    fn to_json(&self) -> Json {
        match self {
            RangeSummary::Interval { min, max } => Json::obj().with("interval", vec![*min, *max]),
            RangeSummary::Hull { vertices } => Json::obj().with("hull", vertices.as_slice()),
        }
    }
}

impl ToJson for RangeSample {
    fn to_json(&self) -> Json {
        Json::obj()
            .with("kind", serde_json::to_value(self.kind).unwrap().as_str().unwrap())
            .with(
                "points",
                Json::Arr(
                    self.points
                        .iter()
                        .map(|p| {
                            Json::obj()
                                .with("value", p.value)
                                .with("x", &*p.witness.x)
                                .with("ystar", p.witness.ystar.as_ref().map(|y| Json::from(&**y)))
                        })
                        .collect(),
                ),
            )
    }
}

fn push_coords(header: &mut Vec<String>, prefix: &str, n: usize, field: Field) {
    for i in 0..n {
        match field {
            Field::Real => header.push(format!("{prefix}{i}")),
            Field::Complex => {
                header.push(format!("{prefix}{i}_re"));
                header.push(format!("{prefix}{i}_im"));
            }
        }
    }
}

fn push_values(row: &mut Vec<String>, v: &[C64], field: Field) {
    for z in v {
        row.push(fmt_f64(z.re));
        if field == Field::Complex {
            row.push(fmt_f64(z.im));
        }
    }
}

/// CSV rows `re,im,value,x…,ystar…` where `value = |λ|`.
pub fn range_csv(sample: &RangeSample, field: Field) -> String {
    let nx = sample.points.first().map_or(0, |p| p.witness.x.len());
    let ny = sample.points.first().and_then(|p| p.witness.ystar.as_ref()).map_or(0, |y| y.len());
    let mut header = vec!["re".to_string(), "im".to_string(), "value".to_string()];
    push_coords(&mut header, "x", nx, field);
    push_coords(&mut header, "ystar", ny, field);
    let mut out = header.join(",");
    out.push('\n');
    for p in &sample.points {
        let mut row = vec![fmt_f64(p.value.re), fmt_f64(p.value.im), fmt_f64(p.value.norm())];
        push_values(&mut row, &p.witness.x, field);
        if let Some(y) = &p.witness.ystar {
            push_values(&mut row, y, field);
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Generic CSV of a flat object: one `key,value` line per scalar leaf.
pub fn flat_csv(j: &Json) -> String {
    let mut out = String::from("key,value\n");
    flatten(j, "", &mut out);
    out
}

fn flatten(j: &Json, prefix: &str, out: &mut String) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match j {
        Json::Obj(fields) => {
            for (k, v) in fields {
                flatten(v, &join(k), out);
            }
        }
        Json::Arr(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(v, &join(&i.to_string()), out);
            }
        }
        leaf => {
            let mut s = String::new();
            leaf.write(&mut s, 0);
            writeln!(out, "{prefix},{s}").unwrap();
        }
    }
}
