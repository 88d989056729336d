//! Elementwise operators with broadcasting.
//!
//! Shapes combine per dimension: a size-1 dimension repeats to the other
//! operand's size; when both sizes exceed 1 the result takes the larger and
//! positions missing from the smaller operand read as `#N/A`.

use std::cmp::Ordering;

use crate::lang::{BinOp, ErrorCode, UnOp};

use super::coerce::{compare, to_number, to_text};
use super::value::{Array, Scalar, Value};

/// Result shape of broadcasting the given shapes together.
pub fn broadcast_dims(shapes: &[(usize, usize)]) -> (usize, usize) {
    let combine = |a: usize, b: usize| if a == 1 { b } else if b == 1 { a } else { a.max(b) };
    shapes
        .iter()
        .fold((1, 1), |(r, c), &(sr, sc)| (combine(r, sr), combine(c, sc)))
}

/// Applies `f` elementwise over any number of broadcast operands.
pub fn map_n(values: &[&Value], mut f: impl FnMut(&[Scalar]) -> Scalar) -> Value {
    if values.iter().all(|v| !matches!(v, Value::Array(_))) {
        let args: Vec<Scalar> = values.iter().map(|v| v.first()).collect();
        return Value::Scalar(f(&args));
    }
    let dims: Vec<(usize, usize)> = values.iter().map(|v| v.dims()).collect();
    let (rows, cols) = broadcast_dims(&dims);
    let mut buf = Vec::with_capacity(values.len());
    Value::from_array(Array::from_fn(rows, cols, |r, c| {
        buf.clear();
        buf.extend(values.iter().map(|v| v.broadcast_get(r, c)));
        f(&buf)
    }))
}

pub fn map1(v: &Value, mut f: impl FnMut(&Scalar) -> Scalar) -> Value {
    map_n(&[v], |a| f(&a[0]))
}

pub fn map2(a: &Value, b: &Value, mut f: impl FnMut(&Scalar, &Scalar) -> Scalar) -> Value {
    map_n(&[a, b], |s| f(&s[0], &s[1]))
}

fn num_result(r: Result<f64, ErrorCode>) -> Scalar {
    match r {
        Ok(n) => Scalar::num(n),
        Err(e) => Scalar::Error(e),
    }
}

pub fn binary_scalar(op: BinOp, a: &Scalar, b: &Scalar) -> Scalar {
    match op {
        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Pow => {
            let x = match to_number(a) {
                Ok(x) => x,
                Err(e) => return Scalar::Error(e),
            };
            let y = match to_number(b) {
                Ok(y) => y,
                Err(e) => return Scalar::Error(e),
            };
            num_result(match op {
                BinOp::Add => Ok(x + y),
                BinOp::Sub => Ok(x - y),
                BinOp::Mul => Ok(x * y),
                BinOp::Div if y == 0.0 => Err(ErrorCode::Div0),
                BinOp::Div => Ok(x / y),
                _ => power(x, y),
            })
        }
        BinOp::Concat => match (to_text(a), to_text(b)) {
            (Ok(x), Ok(y)) => Scalar::text(x + &y),
            (Err(e), _) | (_, Err(e)) => Scalar::Error(e),
        },
        _ => match compare(a, b) {
            Err(e) => Scalar::Error(e),
            Ok(ord) => Scalar::Bool(match op {
                BinOp::Eq => ord == Ordering::Equal,
                BinOp::Ne => ord != Ordering::Equal,
                BinOp::Lt => ord == Ordering::Less,
                BinOp::Le => ord != Ordering::Greater,
                BinOp::Gt => ord == Ordering::Greater,
                BinOp::Ge => ord != Ordering::Less,
                _ => unreachable!("arithmetic handled above"),
            }),
        },
    }
}

fn power(x: f64, y: f64) -> Result<f64, ErrorCode> {
    if x == 0.0 && y == 0.0 {
        return Err(ErrorCode::Num);
    }
    if x == 0.0 && y < 0.0 {
        return Err(ErrorCode::Div0);
    }
    let r = x.powf(y);
    if r.is_nan() {
        Err(ErrorCode::Num)
    } else {
        Ok(r)
    }
}

fn closure_operand(v: &Value) -> bool {
    matches!(v, Value::Closure(_))
}

pub fn apply_binary(op: BinOp, left: &Value, right: &Value) -> Value {
    if closure_operand(left) || closure_operand(right) {
        return Value::error(ErrorCode::Calc);
    }
    map2(left, right, |a, b| binary_scalar(op, a, b))
}

pub fn unary_scalar(op: UnOp, a: &Scalar) -> Scalar {
    match op {
        UnOp::Plus => a.clone(),
        UnOp::Neg => num_result(to_number(a).map(|n| -n)),
        UnOp::Percent => num_result(to_number(a).map(|n| n / 100.0)),
    }
}

pub fn apply_unary(op: UnOp, operand: &Value) -> Value {
    if closure_operand(operand) {
        return Value::error(ErrorCode::Calc);
    }
    map1(operand, |a| unary_scalar(op, a))
}
