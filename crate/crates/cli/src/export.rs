//! Case file formats: canonical json and the line-oriented tcf text.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use smartgen_core::engine::{CaseOrigin, TestCase};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseFile {
    pub function: String,
    pub cases: Vec<CaseRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CaseRecord {
    pub id: usize,
    pub inputs: BTreeMap<String, i64>,
    pub stub_returns: Vec<StubValue>,
    pub expected_return: Option<i64>,
    pub exception: Option<ExceptionRecord>,
    pub covered_edges: Vec<usize>,
    /// `path`, or `boundary:<id>` for a boundary case derived from case `id`.
    pub origin: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StubValue {
    pub name: String,
    pub value: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionRecord {
    pub kind: String,
    pub node: usize,
    pub stmt: usize,
    pub witness: String,
}

pub fn case_file(function: &str, cases: &[TestCase]) -> CaseFile {
    CaseFile {
        function: function.to_string(),
        cases: cases
            .iter()
            .map(|c| CaseRecord {
                id: c.id,
                inputs: c.inputs.clone(),
                stub_returns: c.stub_returns.iter().map(|(n, v)| StubValue { name: n.clone(), value: *v }).collect(),
                expected_return: c.expected_return,
                exception: c.exception.as_ref().map(|e| ExceptionRecord {
                    kind: e.kind.name().to_string(),
                    node: e.node,
                    stmt: e.stmt,
                    witness: e.witness.clone(),
                }),
                covered_edges: c.covered_edges.iter().copied().collect(),
                origin: match c.origin {
                    CaseOrigin::Path => "path".to_string(),
                    CaseOrigin::Boundary { of } => format!("boundary:{of}"),
                },
            })
            .collect(),
    }
}

/// Pretty-printed, with object keys sorted.
pub fn to_json(function: &str, cases: &[TestCase]) -> String {
    let v = serde_json::to_value(case_file(function, cases)).expect("plain data");
    let mut s = serde_json::to_string_pretty(&v).expect("plain data");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<CaseFile, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn to_tcf(function: &str, cases: &[TestCase]) -> String {
    let mut s = format!("#TCF v1\n#FUNCTION {function}\n");
    for c in cases {
        let vars: Vec<String> = c
            .inputs
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .chain(c.stub_returns.iter().map(|(k, v)| format!("{k}={v}")))
            .collect();
        let expect = c.expected_return.map(|v| v.to_string()).unwrap_or_default();
        let exc = c.exception.as_ref().map(|e| e.kind.name()).unwrap_or_default();
        s.push_str(&format!("CASE {} | {} | expect={expect} | exc={exc}\n", c.id, vars.join(",")));
    }
    s
}

/// One `CASE` line read back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TcfCase {
    pub id: usize,
    pub values: Vec<(String, i64)>,
    pub expect: Option<i64>,
    pub exception: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("tcf line {line}: {message}")]
pub struct TcfError {
    pub line: usize,
    pub message: String,
}

pub fn parse_tcf(text: &str) -> Result<(String, Vec<TcfCase>), TcfError> {
    let err = |line: usize, m: &str| TcfError { line, message: m.to_string() };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, "#TCF v1")) => {}
        _ => return Err(err(1, "missing `#TCF v1` header")),
    }
    let mut function = String::new();
    let mut cases = Vec::new();
    for (n, line) in lines {
        if let Some(f) = line.strip_prefix("#FUNCTION ") {
            function = f.trim().to_string();
            continue;
        }
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let rest = line.strip_prefix("CASE ").ok_or_else(|| err(n, "expected CASE"))?;
        let parts: Vec<&str> = rest.split(" | ").collect();
        let [id, vars, expect, exc] = parts[..] else { return Err(err(n, "expected four `|`-separated fields")) };
        let id = id.trim().parse().map_err(|_| err(n, "bad case id"))?;
        let mut values = Vec::new();
        for kv in vars.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = kv.rsplit_once('=').ok_or_else(|| err(n, "expected name=value"))?;
            values.push((k.to_string(), v.parse().map_err(|_| err(n, "bad value"))?));
        }
        let expect = expect.strip_prefix("expect=").ok_or_else(|| err(n, "expected expect="))?;
        let expect = if expect.is_empty() { None } else { Some(expect.parse().map_err(|_| err(n, "bad expect"))?) };
        let exc = exc.strip_prefix("exc=").ok_or_else(|| err(n, "expected exc="))?;
        cases.push(TcfCase { id, values, expect, exception: (!exc.is_empty()).then(|| exc.to_string()) });
    }
    Ok((function, cases))
}
