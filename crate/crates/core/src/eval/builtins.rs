//! The builtin function catalog. `LAMBDA`, `LET`, `IF`, `IFERROR`, `CHOOSE`
//! and `ISOMITTED` need unevaluated arguments and live in the interpreter.

use std::cmp::Ordering;

use crate::lang::ErrorCode;

use super::coerce::{
    compare, same_value, sort_cmp, to_bool, to_int, to_number, to_serial, to_text,
};
use super::date;
use super::interp::{EvalResult, Interp};
use super::ops::{map1, map2, map_n};
use super::textfmt::format_text;
use super::value::{Array, Closure, Scalar, Value};

pub type Builtin = fn(&Interp, &Args) -> EvalResult;

/// Names handled by the interpreter rather than [`lookup`].
pub const SPECIAL_FORMS: &[&str] = &["LAMBDA", "LET", "IF", "IFERROR", "CHOOSE", "ISOMITTED"];

pub const CATALOG: &[(&str, Builtin)] = &[
    ("BYROW", byrow),
    ("BYCOL", bycol),
    ("MAP", map),
    ("REDUCE", reduce),
    ("SCAN", scan),
    ("MAKEARRAY", makearray),
    ("SUM", sum),
    ("MAX", max),
    ("MIN", min),
    ("ABS", abs),
    ("INT", int),
    ("MOD", modulo),
    ("ROUND", round),
    ("AND", and),
    ("OR", or),
    ("NOT", not),
    ("ISERROR", iserror),
    ("ISBLANK", isblank),
    ("ISNUMBER", isnumber),
    ("ISTEXT", istext),
    ("TRIM", trim),
    ("UPPER", upper),
    ("LEFT", left),
    ("LEN", len),
    ("TEXT", text),
    ("TEXTJOIN", textjoin),
    ("TEXTSPLIT", textsplit),
    ("HSTACK", hstack),
    ("VSTACK", vstack),
    ("INDEX", index),
    ("ROWS", rows),
    ("COLUMNS", columns),
    ("SEQUENCE", sequence),
    ("TRANSPOSE", transpose),
    ("UNIQUE", unique),
    ("SORT", sort),
    ("FILTER", filter),
    ("XMATCH", xmatch),
    ("DATE", date_fn),
    ("YEAR", year),
    ("MONTH", month),
    ("DAY", day),
    ("WEEKDAY", weekday),
    ("EDATE", edate),
    ("EOMONTH", eomonth),
];

/// Looks up a builtin by folded (lower-case) name.
pub fn lookup(key: &str) -> Option<Builtin> {
    CATALOG
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(key))
        .map(|(_, f)| *f)
}

/// True for catalog functions and interpreter special forms.
pub fn is_builtin(name: &str) -> bool {
    lookup(name).is_some() || SPECIAL_FORMS.iter().any(|s| s.eq_ignore_ascii_case(name))
}

/// Evaluated call arguments; omitted ones are `None`.
pub struct Args {
    values: Vec<Option<Value>>,
}

impl Args {
    pub fn new(values: Vec<Option<Value>>) -> Args {
        Args { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Value> {
        self.values.get(i).and_then(Option::as_ref)
    }

    /// The argument, with omitted or absent ones reading as Blank.
    pub fn value(&self, i: usize) -> Value {
        self.get(i).cloned().unwrap_or(Value::BLANK)
    }

    fn arity(&self, min: usize, max: usize) -> Result<(), Value> {
        if (min..=max).contains(&self.len()) {
            Ok(())
        } else {
            Err(Value::error(ErrorCode::Value))
        }
    }

    fn scalar_or(&self, i: usize, default: Scalar) -> Scalar {
        self.get(i).map_or(default, Value::first)
    }

    fn closure(&self, i: usize) -> Result<&Closure, Value> {
        match self.get(i) {
            Some(Value::Closure(c)) => Ok(c),
            Some(Value::Scalar(Scalar::Error(e))) => Err(Value::error(*e)),
            _ => Err(Value::error(ErrorCode::Value)),
        }
    }
}

macro_rules! check {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(v) => return Ok(v),
        }
    };
}

fn err(e: ErrorCode) -> EvalResult {
    Ok(Value::error(e))
}

fn scalar_err(v: Result<f64, ErrorCode>) -> Scalar {
    match v {
        Ok(n) => Scalar::num(n),
        Err(e) => Scalar::Error(e),
    }
}

fn error_of(v: &Value) -> Result<(), Value> {
    match v {
        Value::Scalar(Scalar::Error(e)) => Err(Value::error(*e)),
        Value::Closure(_) => Err(Value::error(ErrorCode::Calc)),
        _ => Ok(()),
    }
}

/// A lambda result placed into an array cell.
fn cell_result(v: Value) -> Scalar {
    match v {
        Value::Scalar(s) => s,
        _ => Scalar::Error(ErrorCode::Calc),
    }
}

// ---- lambda helpers ----

fn byrow(it: &Interp, args: &Args) -> EvalResult {
    by_slices(it, args, true)
}

fn bycol(it: &Interp, args: &Args) -> EvalResult {
    by_slices(it, args, false)
}

fn by_slices(it: &Interp, args: &Args, rows: bool) -> EvalResult {
    check!(args.arity(2, 2));
    let array = args.value(0);
    check!(error_of(&array));
    let f = check!(args.closure(1));
    let a = array.to_array();
    let count = if rows { a.rows() } else { a.cols() };
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let slice = if rows {
            Value::row(a.row(i).to_vec())
        } else {
            Value::column((0..a.rows()).map(|r| a.get(r, i).clone()).collect())
        };
        out.push(cell_result(it.invoke(f, vec![Some(slice)])?));
    }
    Ok(if rows { Value::column(out) } else { Value::row(out) })
}

fn map(it: &Interp, args: &Args) -> EvalResult {
    if args.len() < 2 {
        return err(ErrorCode::Value);
    }
    let f = check!(args.closure(args.len() - 1));
    let arrays: Vec<Value> = (0..args.len() - 1).map(|i| args.value(i)).collect();
    for a in &arrays {
        if let Value::Closure(_) = a {
            return err(ErrorCode::Value);
        }
    }
    let dims: Vec<(usize, usize)> = arrays.iter().map(Value::dims).collect();
    let (rows, cols) = super::ops::broadcast_dims(&dims);
    let mut cells = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let call_args = arrays.iter().map(|a| Some(Value::Scalar(a.broadcast_get(r, c)))).collect();
            cells.push(cell_result(it.invoke(f, call_args)?));
        }
    }
    Ok(Value::from_array(Array::new(rows, cols, cells)))
}

fn reduce(it: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(3, 3));
    let f = check!(args.closure(2));
    let array = args.value(1);
    check!(error_of(&array));
    let mut acc = args.value(0);
    for cell in array.cells() {
        acc = it.invoke(f, vec![Some(acc), Some(Value::Scalar(cell))])?;
    }
    Ok(acc)
}

fn scan(it: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(3, 3));
    let f = check!(args.closure(2));
    let array = args.value(1);
    check!(error_of(&array));
    let (rows, cols) = array.dims();
    let mut acc = args.value(0);
    let mut out = Vec::with_capacity(rows * cols);
    for cell in array.cells() {
        acc = it.invoke(f, vec![Some(acc), Some(Value::Scalar(cell))])?;
        out.push(cell_result(acc.clone()));
    }
    Ok(Value::from_array(Array::new(rows, cols, out)))
}

fn makearray(it: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(3, 3));
    let rows = check!(positive_count(&args.value(0)));
    let cols = check!(positive_count(&args.value(1)));
    let f = check!(args.closure(2));
    let mut cells = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let call_args = vec![Some(Value::num((r + 1) as f64)), Some(Value::num((c + 1) as f64))];
            cells.push(cell_result(it.invoke(f, call_args)?));
        }
    }
    Ok(Value::from_array(Array::new(rows, cols, cells)))
}

fn positive_count(v: &Value) -> Result<usize, Value> {
    check_scalar(v)?;
    match to_int(&v.first()) {
        Ok(n) if (1..=1_048_576).contains(&n) => Ok(n as usize),
        Ok(_) => Err(Value::error(ErrorCode::Value)),
        Err(e) => Err(Value::error(e)),
    }
}

fn check_scalar(v: &Value) -> Result<(), Value> {
    error_of(v)?;
    if let Value::Array(_) = v {
        return Err(Value::error(ErrorCode::Value));
    }
    Ok(())
}

// ---- math ----

/// Numbers contributed by aggregate arguments. A directly supplied scalar is
/// coerced; inside arrays only numbers count. The first error wins.
fn collect_numbers(args: &Args) -> Result<Vec<f64>, ErrorCode> {
    let mut out = Vec::new();
    for i in 0..args.len() {
        match args.get(i) {
            None | Some(Value::Scalar(Scalar::Blank)) => {}
            Some(Value::Scalar(s)) => out.push(to_number(s)?),
            Some(Value::Closure(_)) => return Err(ErrorCode::Calc),
            Some(Value::Array(a)) => {
                for cell in a.cells() {
                    match cell {
                        Scalar::Number(n) => out.push(*n),
                        Scalar::Error(e) => return Err(*e),
                        _ => {}
                    }
                }
            }
        }
    }
    Ok(out)
}

fn sum(_: &Interp, args: &Args) -> EvalResult {
    Ok(match collect_numbers(args) {
        Ok(ns) => Value::num(ns.iter().sum()),
        Err(e) => Value::error(e),
    })
}

fn max(_: &Interp, args: &Args) -> EvalResult {
    Ok(match collect_numbers(args) {
        Ok(ns) if ns.is_empty() => Value::num(0.0),
        Ok(ns) => Value::num(ns.into_iter().fold(f64::NEG_INFINITY, f64::max)),
        Err(e) => Value::error(e),
    })
}

fn min(_: &Interp, args: &Args) -> EvalResult {
    Ok(match collect_numbers(args) {
        Ok(ns) if ns.is_empty() => Value::num(0.0),
        Ok(ns) => Value::num(ns.into_iter().fold(f64::INFINITY, f64::min)),
        Err(e) => Value::error(e),
    })
}

fn num1(args: &Args, f: impl Fn(f64) -> Result<f64, ErrorCode>) -> EvalResult {
    check!(args.arity(1, 1));
    Ok(map1(&args.value(0), |s| scalar_err(to_number(s).and_then(&f))))
}

fn abs(_: &Interp, args: &Args) -> EvalResult {
    num1(args, |n| Ok(n.abs()))
}

fn int(_: &Interp, args: &Args) -> EvalResult {
    num1(args, |n| Ok(n.floor()))
}

fn modulo(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(2, 2));
    Ok(map2(&args.value(0), &args.value(1), |a, b| {
        scalar_err((|| {
            let n = to_number(a)?;
            let d = to_number(b)?;
            if d == 0.0 {
                return Err(ErrorCode::Div0);
            }
            let r = n - d * (n / d).floor();
            // Keep the divisor's sign when representation error lands on it.
            Ok(if r.abs() >= d.abs() { 0.0 } else { r })
        })())
    }))
}

/// Rounds half away from zero after snapping to 15 significant digits.
pub fn round_digits(n: f64, digits: i64) -> f64 {
    let digits = digits.clamp(-308, 308) as i32;
    let factor = 10f64.powi(digits.abs());
    let scaled = if digits >= 0 { n * factor } else { n / factor };
    let snapped: f64 = format!("{:.14e}", scaled).parse().unwrap_or(scaled);
    let rounded = snapped.round();
    if digits >= 0 {
        rounded / factor
    } else {
        rounded * factor
    }
}

fn round(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 2));
    let digits = args.get(1).cloned().unwrap_or(Value::num(0.0));
    Ok(map2(&args.value(0), &digits, |a, b| {
        scalar_err(to_number(a).and_then(|n| Ok(round_digits(n, to_int(b)?))))
    }))
}

// ---- logic ----

fn collect_bools(args: &Args) -> Result<Vec<bool>, ErrorCode> {
    let mut out = Vec::new();
    for i in 0..args.len() {
        match args.get(i) {
            None | Some(Value::Scalar(Scalar::Blank)) => {}
            Some(Value::Scalar(s)) => out.push(to_bool(s)?),
            Some(Value::Closure(_)) => return Err(ErrorCode::Calc),
            Some(Value::Array(a)) => {
                for cell in a.cells() {
                    match cell {
                        Scalar::Bool(b) => out.push(*b),
                        Scalar::Number(n) => out.push(*n != 0.0),
                        Scalar::Error(e) => return Err(*e),
                        _ => {}
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return Err(ErrorCode::Value);
    }
    Ok(out)
}

fn and(_: &Interp, args: &Args) -> EvalResult {
    Ok(match collect_bools(args) {
        Ok(bs) => Value::bool(bs.into_iter().all(|b| b)),
        Err(e) => Value::error(e),
    })
}

fn or(_: &Interp, args: &Args) -> EvalResult {
    Ok(match collect_bools(args) {
        Ok(bs) => Value::bool(bs.into_iter().any(|b| b)),
        Err(e) => Value::error(e),
    })
}

fn not(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 1));
    Ok(map1(&args.value(0), |s| match to_bool(s) {
        Ok(b) => Scalar::Bool(!b),
        Err(e) => Scalar::Error(e),
    }))
}

fn iserror(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 1));
    Ok(map1(&args.value(0), |s| Scalar::Bool(s.is_error())))
}

fn isblank(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 1));
    Ok(map1(&args.value(0), |s| Scalar::Bool(*s == Scalar::Blank)))
}

fn isnumber(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 1));
    Ok(map1(&args.value(0), |s| Scalar::Bool(matches!(s, Scalar::Number(_)))))
}

fn istext(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 1));
    Ok(map1(&args.value(0), |s| Scalar::Bool(matches!(s, Scalar::Text(_)))))
}

// ---- text ----

fn upper(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 1));
    Ok(map1(&args.value(0), |s| match to_text(s) {
        Ok(t) => Scalar::text(t.to_uppercase()),
        Err(e) => Scalar::Error(e),
    }))
}

/// LEFT(text, [count]); count defaults to 1 and counts characters.
fn left(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 2));
    let count = args.get(1).cloned().unwrap_or(Value::num(1.0));
    Ok(map2(&args.value(0), &count, |s, n| {
        let text = match to_text(s) {
            Ok(t) => t,
            Err(e) => return Scalar::Error(e),
        };
        match to_number(n) {
            Ok(n) if n >= 0.0 => Scalar::text(text.chars().take(n as usize).collect::<String>()),
            Ok(_) => Scalar::Error(ErrorCode::Value),
            Err(e) => Scalar::Error(e),
        }
    }))
}

fn len(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 1));
    Ok(map1(&args.value(0), |s| match to_text(s) {
        Ok(t) => Scalar::Number(t.chars().count() as f64),
        Err(e) => Scalar::Error(e),
    }))
}

fn trim(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 1));
    Ok(map1(&args.value(0), |s| match to_text(s) {
        Ok(t) => Scalar::text(t.split(' ').filter(|p| !p.is_empty()).collect::<Vec<_>>().join(" ")),
        Err(e) => Scalar::Error(e),
    }))
}

fn text(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(2, 2));
    Ok(map2(&args.value(0), &args.value(1), |v, f| match to_text(f) {
        Ok(fmt) => format_text(v, &fmt),
        Err(e) => Scalar::Error(e),
    }))
}

fn textjoin(_: &Interp, args: &Args) -> EvalResult {
    if args.len() < 3 {
        return err(ErrorCode::Value);
    }
    let delim = args.value(0);
    check!(error_of(&delim));
    let delims: Vec<String> = match delim.cells().iter().map(to_text).collect() {
        Ok(d) => d,
        Err(e) => return err(e),
    };
    let ignore_empty = match to_bool(&args.value(1).first()) {
        Ok(b) => b,
        Err(e) => return err(e),
    };
    let mut parts = Vec::new();
    for i in 2..args.len() {
        let v = args.value(i);
        check!(error_of(&v).or_else(|e| if matches!(v, Value::Closure(_)) { Err(e) } else { Ok(()) }));
        for cell in v.cells() {
            let t = match to_text(&cell) {
                Ok(t) => t,
                Err(e) => return err(e),
            };
            if ignore_empty && t.is_empty() {
                continue;
            }
            parts.push(t);
        }
    }
    let mut out = String::new();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            out.push_str(&delims[(i - 1) % delims.len()]);
        }
        out.push_str(p);
    }
    Ok(Value::text(out))
}

fn delimiters(v: Option<&Value>) -> Result<Vec<String>, ErrorCode> {
    let Some(v) = v else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for cell in v.cells() {
        let t = to_text(&cell)?;
        if !t.is_empty() {
            out.push(t);
        }
    }
    Ok(out)
}

fn split_by<'a>(text: &'a str, delims: &[String]) -> Vec<&'a str> {
    if delims.is_empty() {
        return vec![text];
    }
    let mut parts = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < text.len() {
        let hit = delims
            .iter()
            .filter(|d| text[i..].starts_with(d.as_str()))
            .map(String::len)
            .max();
        match hit {
            Some(len) => {
                parts.push(&text[start..i]);
                i += len;
                start = i;
            }
            None => i += text[i..].chars().next().map_or(1, char::len_utf8),
        }
    }
    parts.push(&text[start..]);
    parts
}

fn textsplit(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(2, 6));
    let source = args.value(0);
    check!(check_scalar(&source));
    let text = match to_text(&source.first()) {
        Ok(t) => t,
        Err(e) => return err(e),
    };
    let col_delims = match delimiters(args.get(1)) {
        Ok(d) => d,
        Err(e) => return err(e),
    };
    let row_delims = match delimiters(args.get(2)) {
        Ok(d) => d,
        Err(e) => return err(e),
    };
    if col_delims.is_empty() && row_delims.is_empty() {
        return err(ErrorCode::Value);
    }
    let ignore_empty = match to_bool(&args.scalar_or(3, Scalar::Bool(false))) {
        Ok(b) => b,
        Err(e) => return err(e),
    };
    let pad = args.scalar_or(5, Scalar::Error(ErrorCode::NA));
    let mut rows: Vec<Vec<Scalar>> = Vec::new();
    for row in split_by(&text, &row_delims) {
        if ignore_empty && row.is_empty() {
            continue;
        }
        let cells: Vec<Scalar> = split_by(row, &col_delims)
            .into_iter()
            .filter(|c| !(ignore_empty && c.is_empty()))
            .map(Scalar::from)
            .collect();
        rows.push(cells);
    }
    if rows.is_empty() || rows.iter().all(Vec::is_empty) {
        return err(ErrorCode::Calc);
    }
    let width = rows.iter().map(Vec::len).max().unwrap_or(1);
    for r in &mut rows {
        r.resize(width, pad.clone());
    }
    Ok(Value::from_rows(rows))
}

// ---- array shaping ----

fn stack(args: &Args, horizontal: bool) -> EvalResult {
    if args.is_empty() {
        return err(ErrorCode::Value);
    }
    let parts: Vec<Value> = (0..args.len()).map(|i| args.value(i)).collect();
    for p in &parts {
        if let Value::Closure(_) = p {
            return err(ErrorCode::Calc);
        }
    }
    let dims: Vec<(usize, usize)> = parts.iter().map(Value::dims).collect();
    let (rows, cols) = if horizontal {
        (dims.iter().map(|d| d.0).max().unwrap_or(1), dims.iter().map(|d| d.1).sum())
    } else {
        (dims.iter().map(|d| d.0).sum(), dims.iter().map(|d| d.1).max().unwrap_or(1))
    };
    let mut grid = vec![Scalar::Error(ErrorCode::NA); rows * cols];
    let mut offset = 0;
    for (p, (pr, pc)) in parts.iter().zip(&dims) {
        let a = p.to_array();
        for r in 0..*pr {
            for c in 0..*pc {
                let (gr, gc) = if horizontal { (r, c + offset) } else { (r + offset, c) };
                grid[gr * cols + gc] = a.get(r, c).clone();
            }
        }
        offset += if horizontal { pc } else { pr };
    }
    Ok(Value::from_array(Array::new(rows, cols, grid)))
}

fn hstack(_: &Interp, args: &Args) -> EvalResult {
    stack(args, true)
}

fn vstack(_: &Interp, args: &Args) -> EvalResult {
    stack(args, false)
}

fn index(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(2, 3));
    let source = args.value(0);
    check!(error_of(&source));
    let a = source.to_array();
    let (rows, cols) = (a.rows(), a.cols());
    let (row_arg, col_arg) = match (args.get(1), args.get(2)) {
        // A single index into a one-row array selects a column.
        (Some(r), None) if rows == 1 && cols > 1 && args.len() == 2 => (Value::num(1.0), r.clone()),
        (r, c) => (
            r.cloned().unwrap_or(Value::num(0.0)),
            c.cloned().unwrap_or(if cols == 1 { Value::num(1.0) } else { Value::num(0.0) }),
        ),
    };
    let whole = |v: &Value| matches!(v, Value::Scalar(s) if to_int(s) == Ok(0));
    if !matches!(row_arg, Value::Array(_)) && !matches!(col_arg, Value::Array(_)) {
        let r = match to_int(&row_arg.first()) {
            Ok(r) => r,
            Err(e) => return err(e),
        };
        let c = match to_int(&col_arg.first()) {
            Ok(c) => c,
            Err(e) => return err(e),
        };
        if r < 0 || c < 0 {
            return err(ErrorCode::Value);
        }
        if r as usize > rows || c as usize > cols {
            return err(ErrorCode::Ref);
        }
        return Ok(match (whole(&row_arg), whole(&col_arg)) {
            (true, true) => source,
            (true, false) => {
                Value::column((0..rows).map(|i| a.get(i, c as usize - 1).clone()).collect())
            }
            (false, true) => Value::row(a.row(r as usize - 1).to_vec()),
            (false, false) => Value::Scalar(a.get(r as usize - 1, c as usize - 1).clone()),
        });
    }
    Ok(map2(&row_arg, &col_arg, |r, c| {
        match (to_int(r), to_int(c)) {
            (Ok(r), Ok(c)) if r >= 1 && c >= 1 => {
                if r as usize > rows || c as usize > cols {
                    Scalar::Error(ErrorCode::Ref)
                } else {
                    a.get(r as usize - 1, c as usize - 1).clone()
                }
            }
            (Err(e), _) | (_, Err(e)) => Scalar::Error(e),
            _ => Scalar::Error(ErrorCode::Value),
        }
    }))
}

fn rows(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 1));
    let v = args.value(0);
    check!(error_of(&v));
    Ok(Value::num(v.dims().0 as f64))
}

fn columns(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 1));
    let v = args.value(0);
    check!(error_of(&v));
    Ok(Value::num(v.dims().1 as f64))
}

fn sequence(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 4));
    let count = |i: usize| -> Result<i64, ErrorCode> {
        match args.get(i) {
            None => Ok(1),
            Some(v) => to_int(&v.first()),
        }
    };
    let number = |i: usize| -> Result<f64, ErrorCode> {
        match args.get(i) {
            None => Ok(1.0),
            Some(v) => to_number(&v.first()),
        }
    };
    let params = (|| Ok::<_, ErrorCode>((count(0)?, count(1)?, number(2)?, number(3)?)))();
    let (rows, cols, start, step) = match params {
        Ok(p) => p,
        Err(e) => return err(e),
    };
    if rows < 1 || cols < 1 {
        return err(ErrorCode::Calc);
    }
    if rows * cols > 16_777_216 {
        return err(ErrorCode::Num);
    }
    let (rows, cols) = (rows as usize, cols as usize);
    Ok(Value::from_array(Array::from_fn(rows, cols, |r, c| {
        Scalar::num(start + step * (r * cols + c) as f64)
    })))
}

fn transpose(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 1));
    let v = args.value(0);
    if let Value::Closure(_) = v {
        return err(ErrorCode::Calc);
    }
    let a = v.to_array();
    Ok(Value::from_array(Array::from_fn(a.cols(), a.rows(), |r, c| a.get(c, r).clone())))
}

/// Lines of an array: its rows, or its columns when `by_col`.
fn lines(a: &Array, by_col: bool) -> Vec<Vec<Scalar>> {
    if by_col {
        (0..a.cols()).map(|c| (0..a.rows()).map(|r| a.get(r, c).clone()).collect()).collect()
    } else {
        (0..a.rows()).map(|r| a.row(r).to_vec()).collect()
    }
}

fn from_lines(lines: Vec<Vec<Scalar>>, by_col: bool) -> Value {
    let v = Value::from_rows(lines);
    if by_col {
        let a = v.to_array();
        Value::from_array(Array::from_fn(a.cols(), a.rows(), |r, c| a.get(c, r).clone()))
    } else {
        v
    }
}

fn flag(args: &Args, i: usize) -> Result<bool, ErrorCode> {
    match args.get(i) {
        None => Ok(false),
        Some(v) => to_bool(&v.first()),
    }
}

fn unique(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 3));
    let v = args.value(0);
    check!(error_of(&v));
    let (by_col, exactly_once) = match (flag(args, 1), flag(args, 2)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return err(e),
    };
    let all = lines(&v.to_array(), by_col);
    let same = |x: &[Scalar], y: &[Scalar]| x.iter().zip(y).all(|(a, b)| same_value(a, b));
    let mut groups: Vec<(Vec<Scalar>, usize)> = Vec::new();
    for line in all {
        match groups.iter_mut().find(|(g, _)| same(g, &line)) {
            Some((_, n)) => *n += 1,
            None => groups.push((line, 1)),
        }
    }
    let kept: Vec<Vec<Scalar>> = groups
        .into_iter()
        .filter(|(_, n)| !exactly_once || *n == 1)
        .map(|(g, _)| g)
        .collect();
    if kept.is_empty() {
        return err(ErrorCode::Calc);
    }
    Ok(from_lines(kept, by_col))
}

fn sort(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 4));
    let v = args.value(0);
    check!(error_of(&v));
    let key = match args.get(1) {
        None => Ok(1),
        Some(k) => to_int(&k.first()),
    };
    let order = match args.get(2) {
        None => Ok(1),
        Some(o) => to_int(&o.first()),
    };
    let (key, order, by_col) = match (key, order, flag(args, 3)) {
        (Ok(k), Ok(o), Ok(b)) => (k, o, b),
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return err(e),
    };
    if order != 1 && order != -1 {
        return err(ErrorCode::Value);
    }
    let mut all = lines(&v.to_array(), by_col);
    let width = all.first().map_or(0, Vec::len);
    if key < 1 || key as usize > width {
        return err(ErrorCode::Value);
    }
    let k = key as usize - 1;
    all.sort_by(|a, b| {
        let ord = sort_cmp(&a[k], &b[k]);
        if order == -1 {
            ord.reverse()
        } else {
            ord
        }
    });
    Ok(from_lines(all, by_col))
}

fn filter(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(2, 3));
    let v = args.value(0);
    check!(error_of(&v));
    let include = args.value(1);
    check!(error_of(&include));
    let a = v.to_array();
    let (ir, ic) = include.dims();
    let by_col = if ir == a.rows() && ic == 1 {
        false
    } else if ir == 1 && ic == a.cols() {
        true
    } else {
        return err(ErrorCode::Value);
    };
    let mut keep = Vec::new();
    for cell in include.cells() {
        match to_bool(&cell) {
            Ok(b) => keep.push(b),
            Err(e) => return err(e),
        }
    }
    let kept: Vec<Vec<Scalar>> = lines(&a, by_col)
        .into_iter()
        .zip(keep)
        .filter_map(|(line, k)| k.then_some(line))
        .collect();
    if kept.is_empty() {
        return Ok(args.get(2).cloned().unwrap_or(Value::error(ErrorCode::Calc)));
    }
    Ok(from_lines(kept, by_col))
}

fn wildcard_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.to_lowercase().chars().collect();
    let t: Vec<char> = text.to_lowercase().chars().collect();
    fn go(p: &[char], t: &[char]) -> bool {
        match p.first() {
            None => t.is_empty(),
            Some('*') => (0..=t.len()).any(|i| go(&p[1..], &t[i..])),
            Some('?') => !t.is_empty() && go(&p[1..], &t[1..]),
            Some('~') if p.len() > 1 => t.first() == Some(&p[1]) && go(&p[2..], &t[1..]),
            Some(c) => t.first() == Some(c) && go(&p[1..], &t[1..]),
        }
    }
    go(&p, &t)
}

fn same_kind(a: &Scalar, b: &Scalar) -> bool {
    matches!(
        (a, b),
        (Scalar::Number(_), Scalar::Number(_))
            | (Scalar::Text(_), Scalar::Text(_))
            | (Scalar::Bool(_), Scalar::Bool(_))
    )
}

fn xmatch_one(needle: &Scalar, hay: &[Scalar], mode: i64, reverse: bool) -> Scalar {
    if let Scalar::Error(e) = needle {
        return Scalar::Error(*e);
    }
    let order: Vec<usize> = if reverse {
        (0..hay.len()).rev().collect()
    } else {
        (0..hay.len()).collect()
    };
    let found = match mode {
        0 => order.iter().copied().find(|&i| same_value(needle, &hay[i])),
        2 => match needle {
            Scalar::Text(p) => order
                .iter()
                .copied()
                .find(|&i| matches!(&hay[i], Scalar::Text(t) if wildcard_match(p, t))),
            _ => order.iter().copied().find(|&i| same_value(needle, &hay[i])),
        },
        _ => {
            let exact = order.iter().copied().find(|&i| same_value(needle, &hay[i]));
            exact.or_else(|| {
                let wanted = if mode == -1 { Ordering::Less } else { Ordering::Greater };
                let mut best: Option<usize> = None;
                for &i in &order {
                    if !same_kind(needle, &hay[i]) || compare(&hay[i], needle) != Ok(wanted) {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some(b) => compare(&hay[i], &hay[b]) == Ok(wanted.reverse()),
                    };
                    if better {
                        best = Some(i);
                    }
                }
                best
            })
        }
    };
    match found {
        Some(i) => Scalar::Number((i + 1) as f64),
        None => Scalar::Error(ErrorCode::NA),
    }
}

fn xmatch(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(2, 4));
    let hay = args.value(1);
    check!(error_of(&hay));
    let (r, c) = hay.dims();
    if r > 1 && c > 1 {
        return err(ErrorCode::Value);
    }
    let mode = match args.get(2) {
        None => Ok(0),
        Some(v) => to_int(&v.first()),
    };
    let search = match args.get(3) {
        None => Ok(1),
        Some(v) => to_int(&v.first()),
    };
    let (mode, search) = match (mode, search) {
        (Ok(m), Ok(s)) => (m, s),
        (Err(e), _) | (_, Err(e)) => return err(e),
    };
    if !matches!(mode, -1..=2) || !matches!(search, -2 | -1 | 1 | 2) {
        return err(ErrorCode::Value);
    }
    let cells = hay.cells();
    let needle = args.value(0);
    if let Value::Closure(_) = needle {
        return err(ErrorCode::Calc);
    }
    Ok(map1(&needle, |n| xmatch_one(n, &cells, mode, search < 0)))
}

// ---- dates ----

fn date_fn(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(3, 3));
    let (y, m, d) = (args.value(0), args.value(1), args.value(2));
    Ok(map_n(&[&y, &m, &d], |s| {
        scalar_err((|| date::date(to_number(&s[0])?, to_number(&s[1])?, to_number(&s[2])?))())
    }))
}

fn date_part(args: &Args, f: impl Fn(chrono::NaiveDate) -> u32) -> EvalResult {
    check!(args.arity(1, 1));
    Ok(map1(&args.value(0), |s| {
        scalar_err(to_serial(s).and_then(date::to_date).map(|d| f(d) as f64))
    }))
}

fn year(_: &Interp, args: &Args) -> EvalResult {
    date_part(args, |d| chrono::Datelike::year(&d) as u32)
}

fn month(_: &Interp, args: &Args) -> EvalResult {
    date_part(args, |d| chrono::Datelike::month(&d))
}

fn day(_: &Interp, args: &Args) -> EvalResult {
    date_part(args, |d| chrono::Datelike::day(&d))
}

fn weekday(_: &Interp, args: &Args) -> EvalResult {
    check!(args.arity(1, 2));
    let kind = args.get(1).cloned().unwrap_or(Value::num(1.0));
    Ok(map2(&args.value(0), &kind, |s, k| {
        scalar_err((|| date::weekday(to_serial(s)?, to_int(k)?))())
    }))
}

fn month_shift(args: &Args, f: fn(f64, f64) -> Result<f64, ErrorCode>) -> EvalResult {
    check!(args.arity(2, 2));
    Ok(map2(&args.value(0), &args.value(1), |s, m| {
        scalar_err((|| f(to_serial(s)?, to_number(m)?))())
    }))
}

fn edate(_: &Interp, args: &Args) -> EvalResult {
    month_shift(args, date::edate)
}

fn eomonth(_: &Interp, args: &Args) -> EvalResult {
    month_shift(args, date::eomonth)
}
