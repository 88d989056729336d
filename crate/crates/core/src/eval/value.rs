use std::fmt;
use std::sync::Arc;

use crate::lang::{ErrorCode, Expr, Param};

use super::env::Env;

#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Blank,
    Number(f64),
    Text(Arc<str>),
    Bool(bool),
    Error(ErrorCode),
}

impl Scalar {
    /// A number, or `#NUM!` when `n` is not finite.
    pub fn num(n: f64) -> Scalar {
        if n.is_finite() {
            // Normalize -0 so results compare and print consistently.
            Scalar::Number(if n == 0.0 { 0.0 } else { n })
        } else {
            Scalar::Error(ErrorCode::Num)
        }
    }

    pub fn text(s: impl Into<Arc<str>>) -> Scalar {
        Scalar::Text(s.into())
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Scalar::Error(_))
    }

    pub fn error(&self) -> Option<ErrorCode> {
        match self {
            Scalar::Error(e) => Some(*e),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Scalar::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Scalar::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl From<f64> for Scalar {
    fn from(n: f64) -> Self {
        Scalar::num(n)
    }
}

impl From<bool> for Scalar {
    fn from(b: bool) -> Self {
        Scalar::Bool(b)
    }
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar::Text(s.into())
    }
}

impl From<ErrorCode> for Scalar {
    fn from(e: ErrorCode) -> Self {
        Scalar::Error(e)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Blank => Ok(()),
            Scalar::Number(n) => f.write_str(&format_general(*n)),
            Scalar::Text(s) => f.write_str(s),
            Scalar::Bool(b) => f.write_str(if *b { "TRUE" } else { "FALSE" }),
            Scalar::Error(e) => f.write_str(e.as_str()),
        }
    }
}

/// A rectangular block of scalars in row-major order. Never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Array {
    rows: usize,
    cols: usize,
    cells: Vec<Scalar>,
}

impl Array {
    pub fn new(rows: usize, cols: usize, cells: Vec<Scalar>) -> Array {
        assert!(rows >= 1 && cols >= 1, "arrays are never empty");
        assert_eq!(rows * cols, cells.len(), "array cells must fill the rectangle");
        Array { rows, cols, cells }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Array {
        let mut cells = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                cells.push(f(r, c));
            }
        }
        Array::new(rows, cols, cells)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Scalar {
        &self.cells[r * self.cols + c]
    }

    pub fn cells(&self) -> &[Scalar] {
        &self.cells
    }

    pub fn into_cells(self) -> Vec<Scalar> {
        self.cells
    }

    pub fn row(&self, r: usize) -> &[Scalar] {
        &self.cells[r * self.cols..(r + 1) * self.cols]
    }
}

/// A function value produced by `LAMBDA`.
#[derive(Debug, Clone)]
pub struct Closure {
    pub params: Vec<Param>,
    pub body: Arc<Expr>,
    pub env: Env,
    /// Defined name the closure was reached through, if any.
    pub name: Option<String>,
}

impl PartialEq for Closure {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && Arc::ptr_eq(&self.body, &other.body)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(Scalar),
    Array(Arc<Array>),
    Closure(Arc<Closure>),
}

impl Value {
    pub const BLANK: Value = Value::Scalar(Scalar::Blank);

    pub fn num(n: f64) -> Value {
        Value::Scalar(Scalar::num(n))
    }

    pub fn text(s: impl Into<Arc<str>>) -> Value {
        Value::Scalar(Scalar::text(s))
    }

    pub fn bool(b: bool) -> Value {
        Value::Scalar(Scalar::Bool(b))
    }

    pub fn error(e: ErrorCode) -> Value {
        Value::Scalar(Scalar::Error(e))
    }

    /// Wraps an array, collapsing a 1×1 array to its scalar.
    pub fn from_array(array: Array) -> Value {
        if array.rows == 1 && array.cols == 1 {
            Value::Scalar(array.cells.into_iter().next().expect("1x1"))
        } else {
            Value::Array(Arc::new(array))
        }
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Value {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Value::from_array(Array::new(r, c, rows.into_iter().flatten().collect()))
    }

    pub fn column(cells: Vec<Scalar>) -> Value {
        let n = cells.len();
        Value::from_array(Array::new(n, 1, cells))
    }

    pub fn row(cells: Vec<Scalar>) -> Value {
        let n = cells.len();
        Value::from_array(Array::new(1, n, cells))
    }

    /// `(rows, cols)`; scalars and closures are 1×1.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Value::Array(a) => (a.rows, a.cols),
            _ => (1, 1),
        }
    }

    /// Element at `(r, c)` with size-1 dimensions repeating and positions
    /// outside a larger dimension reading as `#N/A`.
    pub fn broadcast_get(&self, r: usize, c: usize) -> Scalar {
        match self {
            Value::Scalar(s) => s.clone(),
            Value::Closure(_) => Scalar::Error(ErrorCode::Calc),
            Value::Array(a) => {
                let rr = if a.rows == 1 { 0 } else { r };
                let cc = if a.cols == 1 { 0 } else { c };
                if rr < a.rows && cc < a.cols {
                    a.get(rr, cc).clone()
                } else {
                    Scalar::Error(ErrorCode::NA)
                }
            }
        }
    }

    /// Top-left element; the scalar itself for scalars.
    pub fn first(&self) -> Scalar {
        self.broadcast_get(0, 0)
    }

    pub fn as_scalar(&self) -> Option<&Scalar> {
        match self {
            Value::Scalar(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_closure(&self) -> Option<&Arc<Closure>> {
        match self {
            Value::Closure(c) => Some(c),
            _ => None,
        }
    }

    /// The value as an owned array (scalars become 1×1).
    pub fn to_array(&self) -> Array {
        match self {
            Value::Array(a) => a.as_ref().clone(),
            other => Array::new(1, 1, vec![other.first()]),
        }
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> Vec<Scalar> {
        match self {
            Value::Array(a) => a.cells.clone(),
            other => vec![other.first()],
        }
    }

    pub fn for_each_cell(&self, mut f: impl FnMut(&Scalar)) {
        match self {
            Value::Array(a) => a.cells.iter().for_each(f),
            Value::Scalar(s) => f(s),
            Value::Closure(_) => f(&Scalar::Error(ErrorCode::Calc)),
        }
    }

    /// A scalar error, if the whole value is one.
    pub fn scalar_error(&self) -> Option<ErrorCode> {
        self.as_scalar().and_then(Scalar::error)
    }

    /// Structural equality that treats numbers within `rel` relative
    /// tolerance as equal.
    pub fn approx_eq(&self, other: &Value, rel: f64) -> bool {
        if self.dims() != other.dims() {
            return false;
        }
        let (a, b) = (self.cells(), other.cells());
        a.iter().zip(&b).all(|(x, y)| match (x, y) {
            (Scalar::Number(p), Scalar::Number(q)) => {
                p == q || (p - q).abs() <= rel * p.abs().max(q.abs())
            }
            _ => x == y,
        })
    }
}

impl From<Scalar> for Value {
    fn from(s: Scalar) -> Self {
        Value::Scalar(s)
    }
}

impl From<f64> for Value {
    fn from(n: f64) -> Self {
        Value::num(n)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::bool(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::text(s)
    }
}

impl From<ErrorCode> for Value {
    fn from(e: ErrorCode) -> Self {
        Value::error(e)
    }
}

impl fmt::Display for Value {
    /// Tab-separated columns, newline-separated rows.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Scalar(s) => write!(f, "{s}"),
            Value::Closure(_) => f.write_str(ErrorCode::Calc.as_str()),
            Value::Array(a) => {
                for r in 0..a.rows {
                    if r > 0 {
                        f.write_str("\n")?;
                    }
                    for c in 0..a.cols {
                        if c > 0 {
                            f.write_str("\t")?;
                        }
                        write!(f, "{}", a.get(r, c))?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// General number format: up to 15 significant digits, trailing zeros
/// dropped, scientific notation outside `[1e-9, 1e15)`.
pub fn format_general(n: f64) -> String {
    if n == 0.0 {
        return "0".to_string();
    }
    if n.fract() == 0.0 && n.abs() < 1e15 {
        return format!("{}", n as i64);
    }
    let sci = format!("{:.14e}", n);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let negative = n < 0.0;
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if (-9..15).contains(&exp) {
        if exp < 0 {
            out.push_str("0.");
            out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
            out.push_str(digits);
        } else {
            let int_len = exp as usize + 1;
            if digits.len() <= int_len {
                out.push_str(digits);
                out.extend(std::iter::repeat_n('0', int_len - digits.len()));
            } else {
                out.push_str(&digits[..int_len]);
                out.push('.');
                out.push_str(&digits[int_len..]);
            }
        }
    } else {
        out.push_str(&digits[..1]);
        if digits.len() > 1 {
            out.push('.');
            out.push_str(&digits[1..]);
        }
        out.push_str(&format!("E{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn general_format() {
        assert_eq!(format_general(3.0), "3");
        assert_eq!(format_general(-42.0), "-42");
        assert_eq!(format_general(0.1 + 0.2), "0.3");
        assert_eq!(format_general(1.0 / 3.0), "0.333333333333333");
        assert_eq!(format_general(8659.42), "8659.42");
        assert_eq!(format_general(1e20), "1E+20");
        assert_eq!(format_general(1.5e-12), "1.5E-12");
        assert_eq!(format_general(0.00125), "0.00125");
        assert_eq!(format_general(123456.789), "123456.789");
    }

    #[test]
    fn one_by_one_collapses() {
        let v = Value::from_array(Array::new(1, 1, vec![Scalar::Number(2.0)]));
        assert_eq!(v, Value::num(2.0));
    }

    #[test]
    fn broadcast_reads() {
        let v = Value::row(vec![1.0.into(), 2.0.into(), 3.0.into()]);
        assert_eq!(v.broadcast_get(5, 1), Scalar::Number(2.0));
        assert_eq!(v.broadcast_get(0, 3), Scalar::Error(ErrorCode::NA));
    }

    #[test]
    fn non_finite_is_num_error() {
        assert_eq!(Scalar::num(f64::INFINITY), Scalar::Error(ErrorCode::Num));
        assert_eq!(Scalar::num(f64::NAN), Scalar::Error(ErrorCode::Num));
    }
}
