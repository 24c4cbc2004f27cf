//! Report documents and their JSON and markdown renderings.

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::poly::MultiPoly;
use crate::scalar::{format_rational, Scalar, ScalarKind};
use crate::tensor::{Matrix, SmallTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Section {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// One-line statements for the markdown rendering.
    pub summary: Vec<String>,
    pub result: Value,
}

impl Section {
    pub fn new(name: &str, status: Status, result: Value) -> Self {
        Section { name: name.to_string(), status, reason: None, summary: Vec::new(), result }
    }

    pub fn pass(name: &str, result: Value) -> Self {
        Self::new(name, Status::Pass, result)
    }

    pub fn fail(name: &str, reason: impl Into<String>) -> Self {
        Self::new(name, Status::Fail, Value::Null).with_reason(reason)
    }

    pub fn skipped(name: &str, reason: impl Into<String>) -> Self {
        Self::new(name, Status::Skipped, Value::Null).with_reason(reason)
    }

    pub fn with_reason(mut self, reason: impl Into<String>) -> Self {
        self.reason = Some(reason.into());
        self
    }

    pub fn note(mut self, line: impl Into<String>) -> Self {
        self.summary.push(line.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub operation: String,
    pub label: Option<String>,
    pub input_digest: String,
    pub scalar_mode: String,
    pub tolerance: f64,
    pub seed: u64,
    pub steps: usize,
    pub status: Status,
    pub sections: Vec<Section>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl Report {
    /// Overall status: fail if any section failed, otherwise pass.
    pub fn overall(sections: &[Section]) -> Status {
        if sections.iter().any(|s| s.status == Status::Fail) { Status::Fail } else { Status::Pass }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports serialize");
        text.push('\n');
        text
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("# focalframes report: {}\n\n", self.operation);
        if let Some(label) = &self.label {
            out.push_str(&format!("- label: {label}\n"));
        }
        out.push_str(&format!("- input digest: `{}`\n", self.input_digest));
        out.push_str(&format!("- scalar mode: {}\n", self.scalar_mode));
        out.push_str(&format!("- tolerance: {:e}\n", self.tolerance));
        out.push_str(&format!("- status: {}\n", self.status.name()));
        if let Some(ms) = self.wall_time_ms {
            out.push_str(&format!("- wall time: {ms:.3} ms\n"));
        }
        for s in &self.sections {
            out.push_str(&format!("\n## {}: {}\n\n", s.name, s.status.name()));
            if let Some(reason) = &s.reason {
                out.push_str(&format!("Reason: {reason}\n\n"));
            }
            for line in &s.summary {
                out.push_str(&format!("- {line}\n"));
            }
            if !s.result.is_null() {
                if !s.summary.is_empty() {
                    out.push('\n');
                }
                out.push_str("```json\n");
                out.push_str(&serde_json::to_string_pretty(&s.result).expect("values serialize"));
                out.push_str("\n```\n");
            }
        }
        out
    }
}

/// Rationals as `"p/q"` strings, floats as JSON numbers (non-finite as null).
pub fn scalar<S: Scalar>(x: &S) -> Value {
    match S::KIND {
        ScalarKind::Exact => Value::String(format_rational(&x.to_rational().expect("exact scalars are rational"))),
        ScalarKind::Float => float(x.to_f64()),
    }
}

/// Readable text: `p/q (decimal)` for exact values, the float otherwise.
pub fn scalar_text<S: Scalar>(x: &S) -> String {
    match S::KIND {
        ScalarKind::Exact => {
            let r = x.to_rational().expect("exact scalars are rational");
            let text = format_rational(&r);
            if text.contains('/') { format!("{text} ({})", x.to_f64()) } else { text }
        }
        ScalarKind::Float => format!("{}", x.to_f64()),
    }
}

pub fn float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| float(x)).collect())
}

pub fn float_rows(rows: &[Vec<f64>]) -> Value {
    Value::Array(rows.iter().map(|r| floats(r)).collect())
}

pub fn float_cube(cube: &[Vec<Vec<f64>>]) -> Value {
    Value::Array(cube.iter().map(|m| float_rows(m)).collect())
}

pub fn scalars<S: Scalar>(xs: &[S]) -> Value {
    Value::Array(xs.iter().map(scalar).collect())
}

pub fn matrix<S: Scalar>(m: &Matrix<S>) -> Value {
    Value::Array((0..m.rows()).map(|i| scalars(&m.row(i))).collect())
}

/// `{axes, shape, data}` with `data` nested in axis order.
pub fn tensor<S: Scalar>(t: &SmallTensor<S>, axes: &[&str]) -> Value {
    fn nest<S: Scalar>(data: &[S], ext: &[usize]) -> Value {
        match ext.split_first() {
            None => scalar(&data[0]),
            Some((&n, rest)) => {
                let stride: usize = rest.iter().product();
                Value::Array((0..n).map(|i| nest(&data[i * stride..(i + 1) * stride], rest)).collect())
            }
        }
    }
    let ext = t.extents();
    json!({ "axes": axes, "shape": ext, "data": nest(t.data(), &ext) })
}

/// `{variables, text, degree, terms: [{exp, coeff}]}`, terms in descending lex order.
pub fn poly<S: Scalar>(p: &MultiPoly<S>, vars: &[String]) -> Value {
    let terms: Vec<Value> = p.terms().map(|(m, c)| json!({ "exp": m, "coeff": scalar(c) })).collect();
    json!({ "variables": vars, "text": p.display(vars), "degree": p.degree(), "terms": terms })
}

/// Object from key/value pairs.
pub fn object(pairs: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    for (k, v) in pairs {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}
