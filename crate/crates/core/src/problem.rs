//! Problem files: named spaces, named operators and task parameters.
//!
//! ```json
//! {
//!   "spaces": {"X": {"kind": "lp", "p": 1, "dim": 2, "field": "real"}},
//!   "operators": {
//!     "G": {"domain": "X", "codomain": "X", "matrix": [[1, 0], [0, 0]]},
//!     "T": {"domain": "X", "codomain": "X", "matrix": [[1, 2], [3, 4]]}
//!   },
//!   "g": "G",
//!   "task": {"tol": 1e-8, "seed": 0, "samples": 200, "method": "auto"}
//! }
//! ```
//!
//! Operator domains and codomains are either space names or inline space
//! objects. Matrix entries are numbers or `[re, im]` pairs.

use serde_json::{Map, Value};

use crate::gnorm::Method;
use crate::linalg::{Matrix, C64};
use crate::operators::OperatorSpec;
use crate::spaces::{Field, SpaceSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceRef {
    Named(String),
    Inline(SpaceSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorEntry {
    pub domain: SpaceRef,
    pub codomain: SpaceRef,
    pub matrix: Matrix,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaskParams {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub delta_grid: Option<Vec<f64>>,
    pub method: Option<Method>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub spaces: Vec<(String, SpaceSpec)>,
    pub operators: Vec<(String, OperatorEntry)>,
    /// Name of the operator playing the role of G.
    pub g: String,
    pub task: TaskParams,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Validation { path: path.into(), message: message.into() }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| invalid(path, "expected an object"))
}

fn check_keys(obj: &Map<String, Value>, path: &str, allowed: &[&str]) -> Result<()> {
    for k in obj.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(invalid(format!("{path}.{k}"), format!("unknown key (expected one of {})", allowed.join(", "))));
        }
    }
    Ok(())
}

fn number(v: &Value, path: &str) -> Result<f64> {
    let x = v.as_f64().ok_or_else(|| invalid(path, "expected a number"))?;
    if !x.is_finite() {
        return Err(invalid(path, "expected a finite number"));
    }
    Ok(x)
}

fn parse_space(v: &Value, path: &str) -> Result<SpaceSpec> {
    as_object(v, path)?;
    serde_json::from_value::<SpaceSpec>(v.clone()).map_err(|e| invalid(path, e.to_string()))
}

fn parse_space_ref(v: &Value, path: &str) -> Result<SpaceRef> {
    match v {
        Value::String(s) => Ok(SpaceRef::Named(s.clone())),
        Value::Object(_) => parse_space(v, path).map(SpaceRef::Inline),
        _ => Err(invalid(path, "expected a space name or an inline space object")),
    }
}

fn parse_entry(v: &Value, path: &str) -> Result<C64> {
    match v {
        Value::Number(_) => Ok(C64::new(number(v, path)?, 0.0)),
        Value::Array(a) if a.len() == 2 => {
            Ok(C64::new(number(&a[0], &format!("{path}[0]"))?, number(&a[1], &format!("{path}[1]"))?))
        }
        _ => Err(invalid(path, "expected a number or an [re, im] pair")),
    }
}

fn parse_matrix(v: &Value, path: &str) -> Result<Matrix> {
    let rows = v.as_array().ok_or_else(|| invalid(path, "expected an array of rows"))?;
    if rows.is_empty() {
        return Err(invalid(path, "matrix has no rows"));
    }
    let mut out = Vec::with_capacity(rows.len());
    let mut width = None;
    for (i, row) in rows.iter().enumerate() {
        let rpath = format!("{path}[{i}]");
        let row = row.as_array().ok_or_else(|| invalid(&rpath, "expected an array of entries"))?;
        let w = *width.get_or_insert(row.len());
        if row.len() != w {
            return Err(invalid(&rpath, format!("expected {w} entries, found {}", row.len())));
        }
        if w == 0 {
            return Err(invalid(&rpath, "matrix has no columns"));
        }
        out.push(row.iter().enumerate().map(|(j, e)| parse_entry(e, &format!("{rpath}[{j}]"))).collect::<Result<Vec<_>>>()?);
    }
    Matrix::from_rows(&out).map_err(|e| invalid(path, e.to_string()))
}

fn parse_task(v: &Value, path: &str) -> Result<TaskParams> {
    let obj = as_object(v, path)?;
    check_keys(obj, path, &["tol", "seed", "samples", "delta_grid", "method"])?;
    let mut task = TaskParams::default();
    if let Some(t) = obj.get("tol") {
        let p = format!("{path}.tol");
        let tol = number(t, &p)?;
        if tol <= 0.0 {
            return Err(invalid(p, "tolerance must be positive"));
        }
        task.tol = Some(tol);
    }
    if let Some(s) = obj.get("seed") {
        task.seed = Some(s.as_u64().ok_or_else(|| invalid(format!("{path}.seed"), "expected a non-negative integer"))?);
    }
    if let Some(s) = obj.get("samples") {
        let n = s.as_u64().ok_or_else(|| invalid(format!("{path}.samples"), "expected a non-negative integer"))?;
        task.samples = Some(n as usize);
    }
    if let Some(d) = obj.get("delta_grid") {
        let p = format!("{path}.delta_grid");
        let arr = d.as_array().ok_or_else(|| invalid(&p, "expected an array of numbers"))?;
        let grid = arr.iter().enumerate().map(|(i, x)| number(x, &format!("{p}[{i}]"))).collect::<Result<Vec<_>>>()?;
        if let Some(i) = grid.iter().position(|&x| x <= 0.0 || x >= 1.0) {
            return Err(invalid(format!("{p}[{i}]"), "delta must lie in (0, 1)"));
        }
        task.delta_grid = Some(grid);
    }
    if let Some(m) = obj.get("method") {
        let p = format!("{path}.method");
        let s = m.as_str().ok_or_else(|| invalid(&p, "expected a string"))?;
        task.method = Some(s.parse().map_err(|e: Error| invalid(&p, e.to_string()))?);
    }
    Ok(task)
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| invalid("$", format!("malformed JSON: {e}")))?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let root = as_object(v, "$")?;
        check_keys(root, "$", &["spaces", "operators", "g", "task"])?;

        let mut spaces = Vec::new();
        if let Some(sv) = root.get("spaces") {
            for (name, s) in as_object(sv, "spaces")? {
                spaces.push((name.clone(), parse_space(s, &format!("spaces.{name}"))?));
            }
        }

        let ov = root.get("operators").ok_or_else(|| invalid("operators", "missing required key"))?;
        let mut operators = Vec::new();
        for (name, o) in as_object(ov, "operators")? {
            let path = format!("operators.{name}");
            let obj = as_object(o, &path)?;
            check_keys(obj, &path, &["domain", "codomain", "matrix"])?;
            let get = |k: &str| obj.get(k).ok_or_else(|| invalid(format!("{path}.{k}"), "missing required key"));
            let domain = parse_space_ref(get("domain")?, &format!("{path}.domain"))?;
            let codomain = parse_space_ref(get("codomain")?, &format!("{path}.codomain"))?;
            let matrix = parse_matrix(get("matrix")?, &format!("{path}.matrix"))?;
            operators.push((name.clone(), OperatorEntry { domain, codomain, matrix }));
        }

        let g = match root.get("g") {
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(invalid("g", "expected an operator name")),
            None => "G".to_string(),
        };
        let task = match root.get("task") {
            Some(t) => parse_task(t, "task")?,
            None => TaskParams::default(),
        };

        let problem = Self { spaces, operators, g, task };
        problem.validate()?;
        Ok(problem)
    }

    /// Resolves every reference and checks dimensions and scalar fields.
    pub fn validate(&self) -> Result<()> {
        let mut field: Option<(Field, String)> = None;
        for (name, s) in &self.spaces {
            match &field {
                None => field = Some((s.field(), format!("spaces.{name}"))),
                Some((f, first)) if *f != s.field() => {
                    return Err(invalid(format!("spaces.{name}"), format!("scalar field differs from {first}")));
                }
                _ => {}
            }
        }
        for (name, _) in &self.operators {
            self.operator(name)?;
        }
        let g = self.g_operator()?;
        if let Some((f, first)) = field {
            if g.field() != f {
                return Err(invalid(format!("operators.{}", self.g), format!("scalar field differs from {first}")));
            }
        }
        for name in self.t_names() {
            self.target(name)?;
        }
        Ok(())
    }

    fn resolve(&self, r: &SpaceRef, path: &str) -> Result<SpaceSpec> {
        match r {
            SpaceRef::Inline(s) => Ok(s.clone()),
            SpaceRef::Named(n) => self
                .spaces
                .iter()
                .find(|(k, _)| k == n)
                .map(|(_, s)| s.clone())
                .ok_or_else(|| invalid(path, format!("unknown space {n:?}"))),
        }
    }

    pub fn operator(&self, name: &str) -> Result<OperatorSpec> {
        let path = format!("operators.{name}");
        let entry = self
            .operators
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, e)| e)
            .ok_or_else(|| invalid(&path, "unknown operator"))?;
        let domain = self.resolve(&entry.domain, &format!("{path}.domain"))?;
        let codomain = self.resolve(&entry.codomain, &format!("{path}.codomain"))?;
        OperatorSpec::new(entry.matrix.clone(), domain, codomain).map_err(|e| invalid(&path, e.to_string()))
    }

    pub fn g_operator(&self) -> Result<OperatorSpec> {
        if !self.operators.iter().any(|(k, _)| *k == self.g) {
            return Err(invalid("g", format!("unknown operator {:?}", self.g)));
        }
        self.operator(&self.g)
    }

    /// An operator that must share domain and codomain with G.
    pub fn target(&self, name: &str) -> Result<OperatorSpec> {
        let g = self.g_operator()?;
        let t = self.operator(name)?;
        if t.domain() != g.domain() || t.codomain() != g.codomain() {
            return Err(invalid(format!("operators.{name}"), format!("domain and codomain must match those of {}", self.g)));
        }
        Ok(t)
    }

    /// Operators other than G sharing its domain and codomain, in file order.
    pub fn t_names(&self) -> Vec<&str> {
        let g = match self.g_operator() {
            Ok(g) => g,
            Err(_) => return Vec::new(),
        };
        self.operators
            .iter()
            .filter(|(k, _)| *k != self.g)
            .filter(|(k, _)| self.operator(k).map(|t| t.domain() == g.domain() && t.codomain() == g.codomain()).unwrap_or(false))
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn to_value(&self) -> Value {
        let mut root = Map::new();
        let mut spaces = Map::new();
        for (name, s) in &self.spaces {
            spaces.insert(name.clone(), serde_json::to_value(s).expect("space serializes"));
        }
        root.insert("spaces".into(), Value::Object(spaces));
        let mut ops = Map::new();
        for (name, e) in &self.operators {
            let mut o = Map::new();
            o.insert("domain".into(), space_ref_value(&e.domain));
            o.insert("codomain".into(), space_ref_value(&e.codomain));
            o.insert("matrix".into(), matrix_value(&e.matrix));
            ops.insert(name.clone(), Value::Object(o));
        }
        root.insert("operators".into(), Value::Object(ops));
        root.insert("g".into(), Value::String(self.g.clone()));
        let mut task = Map::new();
        let t = &self.task;
        if let Some(x) = t.tol {
            task.insert("tol".into(), x.into());
        }
        if let Some(x) = t.seed {
            task.insert("seed".into(), x.into());
        }
        if let Some(x) = t.samples {
            task.insert("samples".into(), (x as u64).into());
        }
        if let Some(x) = &t.delta_grid {
            task.insert("delta_grid".into(), x.clone().into());
        }
        if let Some(x) = t.method {
            task.insert("method".into(), x.to_string().into());
        }
        root.insert("task".into(), Value::Object(task));
        Value::Object(root)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("problem serializes");
        s.push('\n');
        s
    }
}

fn space_ref_value(r: &SpaceRef) -> Value {
    match r {
        SpaceRef::Named(n) => Value::String(n.clone()),
        SpaceRef::Inline(s) => serde_json::to_value(s).expect("space serializes"),
    }
}

fn matrix_value(m: &Matrix) -> Value {
    let real = m.is_real();
    Value::Array(
        m.to_rows()
            .into_iter()
            .map(|row| {
                Value::Array(
                    row.into_iter()
                        .map(|z| if real { z.re.into() } else { Value::Array(vec![z.re.into(), z.im.into()]) })
                        .collect(),
                )
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const L1: &str = r#"{
      "spaces": {"X": {"kind": "lp", "p": 1, "dim": 2, "field": "real"}},
      "operators": {
        "G": {"domain": "X", "codomain": "X", "matrix": [[1, 0], [0, 0]]},
        "T": {"domain": "X", "codomain": "X", "matrix": [[1, 2], [3, 4]]}
      },
      "task": {"tol": 1e-8, "seed": 7, "method": "polyhedral_exact"}
    }"#;

    fn err_path(text: &str) -> String {
        match ProblemFile::parse(text) {
            Err(Error::Validation { path, .. }) => path,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn parses_names_and_defaults() {
        let p = ProblemFile::parse(L1).unwrap();
        assert_eq!(p.g, "G");
        assert_eq!(p.t_names(), ["T"]);
        assert_eq!(p.task.seed, Some(7));
        assert_eq!(p.task.method, Some(Method::PolyhedralExact));
        assert_eq!(p.target("T").unwrap().matrix()[(1, 0)], C64::new(3.0, 0.0));
    }

    #[test]
    fn emit_then_parse_is_identity() {
        let p = ProblemFile::parse(L1).unwrap();
        let q = ProblemFile::parse(&p.to_json_string()).unwrap();
        assert_eq!(p, q);
        assert_eq!(p.to_json_string(), q.to_json_string());
    }

    #[test]
    fn complex_entries_and_inline_spaces() {
        let text = r#"{
          "operators": {
            "G": {"domain": {"kind": "lp", "p": "inf", "dim": 2, "field": "complex"},
                  "codomain": {"kind": "lp", "p": "inf", "dim": 1, "field": "complex"},
                  "matrix": [[[0.5, 0.5], 1]]}
          }
        }"#;
        let p = ProblemFile::parse(text).unwrap();
        let g = p.g_operator().unwrap();
        assert_eq!(g.matrix()[(0, 0)], C64::new(0.5, 0.5));
        assert_eq!(p, ProblemFile::parse(&p.to_json_string()).unwrap());
    }

    #[test]
    fn errors_name_the_offending_path() {
        assert_eq!(err_path(&L1.replace("[3, 4]", "[3, 4, 5]")), "operators.T.matrix[1]");
        assert_eq!(err_path(&L1.replace("[3, 4]", "[3, \"x\"]")), "operators.T.matrix[1][1]");
        assert_eq!(err_path(&L1.replace(r#""codomain": "X", "matrix": [[1, 2]"#, r#""codomain": "Y", "matrix": [[1, 2]"#)), "operators.T.codomain");
        assert_eq!(err_path(&L1.replace("\"seed\": 7", "\"seed\": -1")), "task.seed");
        assert_eq!(err_path(&L1.replace("polyhedral_exact", "magic")), "task.method");
        assert_eq!(err_path(&L1.replace("\"p\": 1", "\"p\": 0.5")), "spaces.X");
        assert_eq!(err_path(&L1.replace("\"task\"", "\"tusk\"")), "$.tusk");
        assert_eq!(err_path(&L1.replace("[[1, 2], [3, 4]]", "[[1, 2]]")), "operators.T");
        assert_eq!(err_path("{\"operators\": "), "$");
    }

    #[test]
    fn mismatched_targets_are_rejected() {
        let text = r#"{
          "spaces": {"X": {"kind": "lp", "p": 2, "dim": 2}, "Y": {"kind": "lp", "p": 2, "dim": 3}},
          "operators": {
            "G": {"domain": "X", "codomain": "X", "matrix": [[1, 0], [0, 1]]},
            "U": {"domain": "Y", "codomain": "Y", "matrix": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}
          }
        }"#;
        let p = ProblemFile::parse(text).unwrap();
        assert!(p.t_names().is_empty());
        assert!(matches!(p.target("U"), Err(Error::Validation { ref path, .. }) if path == "operators.U"));
        assert!(p.operator("U").is_ok());
    }

    #[test]
    fn real_spaces_reject_complex_entries() {
        assert_eq!(err_path(&L1.replace("[3, 4]", "[[3, 1], 4]")), "operators.T");
    }
}
