//! Shared helpers for integration tests: engine access, formula literal
//! rendering, and native oracles for the shipped components.
#![allow(dead_code)]

pub mod cases;
pub mod oracle;

use bxl_core::eval::{Scalar, Value};
use bxl_core::stdlib::with_stdlib;
use bxl_core::workbook::{Computed, Model, Workbook};

pub fn stdlib_model() -> Model {
    Model::new(&with_stdlib(&Workbook::default()).unwrap()).unwrap()
}

pub fn eval(model: &Model, formula: &str) -> Value {
    model
        .eval_formula(&Computed::empty(), None, formula)
        .unwrap_or_else(|e| panic!("{formula}: {e}"))
}

/// Number as formula text. Shortest round-trip form keeps values exact.
pub fn num(n: f64) -> String {
    if n < 0.0 {
        format!("({n})")
    } else {
        format!("{n}")
    }
}

pub fn text(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Array constant cells may not be parenthesized.
fn cell(s: &Scalar) -> String {
    match s {
        Scalar::Number(n) => format!("{n}"),
        Scalar::Text(t) => text(t),
        Scalar::Bool(b) => if *b { "TRUE" } else { "FALSE" }.to_string(),
        Scalar::Error(e) => e.as_str().to_string(),
        Scalar::Blank => "\"\"".to_string(),
    }
}

/// An array constant `{a,b;c,d}`; a single cell renders as a plain scalar.
pub fn matrix(rows: &[Vec<Scalar>]) -> String {
    if rows.len() == 1 && rows[0].len() == 1 {
        return match &rows[0][0] {
            Scalar::Number(n) => num(*n),
            other => cell(other),
        };
    }
    let body: Vec<String> = rows
        .iter()
        .map(|r| r.iter().map(cell).collect::<Vec<_>>().join(","))
        .collect();
    format!("{{{}}}", body.join(";"))
}

pub fn row(cells: &[Scalar]) -> String {
    matrix(&[cells.to_vec()])
}

pub fn column(cells: &[Scalar]) -> String {
    matrix(&cells.iter().map(|c| vec![c.clone()]).collect::<Vec<_>>())
}

pub fn nums(v: &[f64]) -> Vec<Scalar> {
    v.iter().map(|&n| Scalar::Number(n)).collect()
}

pub fn texts(v: &[String]) -> Vec<Scalar> {
    v.iter().map(|s| Scalar::text(s.as_str())).collect()
}

/// Bit-identical for text and booleans, 1e-12 relative for numbers.
pub fn same(a: &Value, b: &Value) -> bool {
    a.approx_eq(b, 1e-12)
}
