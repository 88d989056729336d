use std::cmp::Ordering;

use crate::lang::ErrorCode;

use super::date::{parse_date_text, to_date, MIN_SERIAL};
use super::value::{format_general, Scalar};

/// Numeric text, allowing surrounding spaces, a sign, decimals, exponent
/// and a trailing `%`.
pub fn parse_numeric_text(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    let (body, scale) = match t.strip_suffix('%') {
        Some(b) => (b.trim_end(), 0.01),
        None => (t, 1.0),
    };
    let valid = body
        .chars()
        .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'))
        && body.chars().any(|c| c.is_ascii_digit());
    if !valid {
        return None;
    }
    body.parse::<f64>().ok().map(|n| n * scale)
}

/// Arithmetic coercion. Blank is 0, booleans are 1/0, text must be numeric
/// or a recognised date.
pub fn to_number(s: &Scalar) -> Result<f64, ErrorCode> {
    match s {
        Scalar::Blank => Ok(0.0),
        Scalar::Number(n) => Ok(*n),
        Scalar::Bool(b) => Ok(if *b { 1.0 } else { 0.0 }),
        Scalar::Text(t) => parse_numeric_text(t)
            .or_else(|| parse_date_text(t))
            .ok_or(ErrorCode::Value),
        Scalar::Error(e) => Err(*e),
    }
}

pub fn to_text(s: &Scalar) -> Result<String, ErrorCode> {
    match s {
        Scalar::Error(e) => Err(*e),
        other => Ok(other.to_string()),
    }
}

pub fn to_bool(s: &Scalar) -> Result<bool, ErrorCode> {
    match s {
        Scalar::Blank => Ok(false),
        Scalar::Number(n) => Ok(*n != 0.0),
        Scalar::Bool(b) => Ok(*b),
        Scalar::Text(t) => {
            if t.eq_ignore_ascii_case("TRUE") {
                Ok(true)
            } else if t.eq_ignore_ascii_case("FALSE") {
                Ok(false)
            } else {
                Err(ErrorCode::Value)
            }
        }
        Scalar::Error(e) => Err(*e),
    }
}

/// A date serial from a number or `yyyy-mm-dd` / `m/d/yyyy` text.
/// Serials before 1900-03-01 are `#NUM!`.
pub fn to_serial(s: &Scalar) -> Result<f64, ErrorCode> {
    let n = match s {
        Scalar::Number(n) => *n,
        Scalar::Text(t) => parse_date_text(t)
            .or_else(|| parse_numeric_text(t))
            .ok_or(ErrorCode::Value)?,
        Scalar::Blank => 0.0,
        Scalar::Bool(_) => return Err(ErrorCode::Value),
        Scalar::Error(e) => return Err(*e),
    };
    if n.floor() < MIN_SERIAL as f64 {
        return Err(ErrorCode::Num);
    }
    to_date(n)?;
    Ok(n.floor())
}

/// Integer argument (truncated toward zero).
pub fn to_int(s: &Scalar) -> Result<i64, ErrorCode> {
    let n = to_number(s)?;
    if n.abs() > 9.0e15 {
        return Err(ErrorCode::Num);
    }
    Ok(n.trunc() as i64)
}

fn type_rank(s: &Scalar) -> u8 {
    match s {
        Scalar::Number(_) | Scalar::Blank => 0,
        Scalar::Text(_) => 1,
        Scalar::Bool(_) => 2,
        Scalar::Error(_) => 3,
    }
}

/// Comparison used by `=`, `<` and friends: numbers < text < booleans, text
/// case-insensitive. Blank takes the type of the other side (0, "" or FALSE).
/// Errors propagate.
pub fn compare(a: &Scalar, b: &Scalar) -> Result<Ordering, ErrorCode> {
    if let Scalar::Error(e) = a {
        return Err(*e);
    }
    if let Scalar::Error(e) = b {
        return Err(*e);
    }
    let blank_as = |other: &Scalar| match other {
        Scalar::Text(_) => Scalar::Text("".into()),
        Scalar::Bool(_) => Scalar::Bool(false),
        _ => Scalar::Number(0.0),
    };
    let a = if *a == Scalar::Blank { blank_as(b) } else { a.clone() };
    let b = if b == &Scalar::Blank { blank_as(&a) } else { b.clone() };
    Ok(match (&a, &b) {
        (Scalar::Number(x), Scalar::Number(y)) => x.partial_cmp(y).unwrap_or(Ordering::Equal),
        (Scalar::Text(x), Scalar::Text(y)) => text_cmp(x, y),
        (Scalar::Bool(x), Scalar::Bool(y)) => x.cmp(y),
        _ => type_rank(&a).cmp(&type_rank(&b)),
    })
}

pub fn text_cmp(a: &str, b: &str) -> Ordering {
    a.to_lowercase().cmp(&b.to_lowercase())
}

/// Total order for SORT and UNIQUE: numbers, text, booleans, errors, then
/// blanks last.
pub fn sort_cmp(a: &Scalar, b: &Scalar) -> Ordering {
    match (a, b) {
        (Scalar::Blank, Scalar::Blank) => Ordering::Equal,
        (Scalar::Blank, _) => Ordering::Greater,
        (_, Scalar::Blank) => Ordering::Less,
        (Scalar::Error(x), Scalar::Error(y)) => x.cmp(y),
        _ => compare(a, b).unwrap_or_else(|_| type_rank(a).cmp(&type_rank(b))),
    }
}

/// Value equality for UNIQUE and lookups (case-insensitive text).
pub fn same_value(a: &Scalar, b: &Scalar) -> bool {
    match (a, b) {
        (Scalar::Error(x), Scalar::Error(y)) => x == y,
        (Scalar::Blank, Scalar::Blank) => true,
        (Scalar::Blank, _) | (_, Scalar::Blank) => false,
        _ => compare(a, b) == Ok(Ordering::Equal) && type_rank(a) == type_rank(b),
    }
}

/// Text shown for a number by `&` and TEXTJOIN.
pub fn number_text(n: f64) -> String {
    format_general(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_text() {
        assert_eq!(to_number(&" 12.5 ".into()), Ok(12.5));
        assert_eq!(to_number(&"50%".into()), Ok(0.5));
        assert_eq!(to_number(&"abc".into()), Err(ErrorCode::Value));
        assert_eq!(to_number(&"".into()), Err(ErrorCode::Value));
        assert_eq!(to_number(&"1/1/2023".into()), Ok(44927.0));
    }

    #[test]
    fn comparison_order() {
        let n = Scalar::Number(5.0);
        let t = Scalar::from("a");
        let b = Scalar::Bool(false);
        assert_eq!(compare(&n, &t), Ok(Ordering::Less));
        assert_eq!(compare(&t, &b), Ok(Ordering::Less));
        assert_eq!(compare(&"ABC".into(), &"abc".into()), Ok(Ordering::Equal));
        assert_eq!(compare(&Scalar::Blank, &"".into()), Ok(Ordering::Equal));
        assert_eq!(compare(&Scalar::Blank, &Scalar::Number(0.0)), Ok(Ordering::Equal));
        assert_eq!(compare(&Scalar::Blank, &b), Ok(Ordering::Equal));
    }

    #[test]
    fn serials_reject_early_dates() {
        assert_eq!(to_serial(&Scalar::Number(60.0)), Err(ErrorCode::Num));
        assert_eq!(to_serial(&Scalar::Number(45108.7)), Ok(45108.0));
        assert_eq!(to_serial(&"1/1/2023".into()), Ok(44927.0));
        assert_eq!(to_serial(&"soon".into()), Err(ErrorCode::Value));
    }
}
