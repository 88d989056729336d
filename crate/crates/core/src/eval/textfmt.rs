//! The subset of number format codes understood by `TEXT`: date parts
//! (`yyyy yy mmmm mmm mm m dddd ddd dd d`), digit placeholders (`0 # , .`),
//! `%`, quoted literals, `\` escapes and `;` sections.

use chrono::Datelike;

use crate::lang::ErrorCode;

use super::builtins::round_digits;
use super::coerce::{parse_numeric_text, to_serial};
use super::date::{parse_date_text, to_date};
use super::value::{format_general, Scalar};

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Literal(String),
    /// A run of `y`, `m` or `d` of the given length.
    Date(char, usize),
    /// Digit placeholders and separators, kept verbatim.
    Digits(String),
    Percent,
}

fn pieces(section: &str) -> Vec<Piece> {
    let chars: Vec<char> = section.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let push_lit = |out: &mut Vec<Piece>, s: &str| match out.last_mut() {
        Some(Piece::Literal(l)) => l.push_str(s),
        _ => out.push(Piece::Literal(s.to_string())),
    };
    while i < chars.len() {
        let c = chars[i];
        match c {
            '"' => {
                let end = chars[i + 1..].iter().position(|&q| q == '"').map_or(chars.len(), |p| i + 1 + p);
                let lit: String = chars[i + 1..end].iter().collect();
                push_lit(&mut out, &lit);
                i = end + 1;
            }
            '\\' if i + 1 < chars.len() => {
                push_lit(&mut out, &chars[i + 1].to_string());
                i += 2;
            }
            'y' | 'Y' | 'm' | 'M' | 'd' | 'D' => {
                let lower = c.to_ascii_lowercase();
                let run = chars[i..].iter().take_while(|x| x.to_ascii_lowercase() == lower).count();
                out.push(Piece::Date(lower, run));
                i += run;
            }
            '0' | '#' | '?' | ',' | '.' => {
                let is_digit = |x: &char| matches!(x, '0' | '#' | '?' | ',' | '.');
                let run: String = chars[i..].iter().take_while(|x| is_digit(x)).collect();
                i += run.chars().count();
                match out.last_mut() {
                    Some(Piece::Digits(d)) => d.push_str(&run),
                    _ => out.push(Piece::Digits(run)),
                }
            }
            '%' => {
                out.push(Piece::Percent);
                i += 1;
            }
            _ => {
                push_lit(&mut out, &c.to_string());
                i += 1;
            }
        }
    }
    out
}

const MONTHS: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];
const DAYS: [&str; 7] = ["Sunday", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday"];

fn format_date(serial: f64, pieces: &[Piece]) -> Result<String, ErrorCode> {
    let date = to_date(serial)?;
    let mut out = String::new();
    for p in pieces {
        match p {
            Piece::Literal(l) => out.push_str(l),
            Piece::Digits(d) => out.push_str(d),
            Piece::Percent => out.push('%'),
            Piece::Date('y', n) if *n <= 2 => out.push_str(&format!("{:02}", date.year() % 100)),
            Piece::Date('y', _) => out.push_str(&format!("{:04}", date.year())),
            Piece::Date('m', 1) => out.push_str(&date.month().to_string()),
            Piece::Date('m', 2) => out.push_str(&format!("{:02}", date.month())),
            Piece::Date('m', 3) => out.push_str(&MONTHS[date.month0() as usize][..3]),
            Piece::Date('m', 5) => out.push_str(&MONTHS[date.month0() as usize][..1]),
            Piece::Date('m', _) => out.push_str(MONTHS[date.month0() as usize]),
            Piece::Date(_, 1) => out.push_str(&date.day().to_string()),
            Piece::Date(_, 2) => out.push_str(&format!("{:02}", date.day())),
            Piece::Date(_, 3) => {
                out.push_str(&DAYS[date.weekday().num_days_from_sunday() as usize][..3])
            }
            Piece::Date(_, _) => out.push_str(DAYS[date.weekday().num_days_from_sunday() as usize]),
        }
    }
    Ok(out)
}

fn group_thousands(digits: &str) -> String {
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// Formats a non-negative number against the digit pattern.
fn format_digits(n: f64, pattern: &str) -> String {
    let (int_pat, frac_pat) = match pattern.find('.') {
        Some(p) => (&pattern[..p], &pattern[p + 1..]),
        None => (pattern, ""),
    };
    let thousands = int_pat.contains(',') && !int_pat.ends_with(',');
    let trailing_commas = int_pat.len() - int_pat.trim_end_matches(',').len();
    let n = n / 1000f64.powi(trailing_commas as i32);
    let min_int = int_pat.chars().filter(|&c| c == '0').count();
    let frac: Vec<char> = frac_pat.chars().filter(|c| matches!(c, '0' | '#' | '?')).collect();
    let rounded = round_digits(n, frac.len() as i64);
    let text = format!("{:.*}", frac.len(), rounded);
    let (int_part, frac_part) = match text.find('.') {
        Some(p) => (&text[..p], &text[p + 1..]),
        None => (text.as_str(), ""),
    };
    let mut int_digits = int_part.trim_start_matches('0').to_string();
    while int_digits.len() < min_int {
        int_digits.insert(0, '0');
    }
    if thousands {
        int_digits = group_thousands(&int_digits);
    }
    // Optional fraction digits drop trailing zeros.
    let mut frac_digits: Vec<char> = frac_part.chars().collect();
    while let (Some(&'0'), Some(&p)) = (frac_digits.last(), frac.get(frac_digits.len().wrapping_sub(1))) {
        if p == '0' {
            break;
        }
        frac_digits.pop();
    }
    if frac_pat.is_empty() && !pattern.contains('.') {
        return int_digits;
    }
    format!("{}.{}", int_digits, frac_digits.into_iter().collect::<String>())
}

fn format_number(n: f64, pieces: &[Piece]) -> String {
    let percent = pieces.contains(&Piece::Percent);
    let n = if percent { n * 100.0 } else { n };
    let mut out = String::new();
    let mut digits_done = false;
    for p in pieces {
        match p {
            Piece::Literal(l) => out.push_str(l),
            Piece::Percent => out.push('%'),
            Piece::Date(c, len) => out.extend(std::iter::repeat_n(*c, *len)),
            Piece::Digits(d) if !digits_done => {
                digits_done = true;
                out.push_str(&format_digits(n, d));
            }
            Piece::Digits(_) => {}
        }
    }
    out
}

fn is_date_format(pieces: &[Piece]) -> bool {
    pieces.iter().any(|p| matches!(p, Piece::Date(..)))
}

/// `TEXT(value, format)` for one cell.
pub fn format_text(value: &Scalar, format: &str) -> Scalar {
    match format_inner(value, format) {
        Ok(s) => Scalar::text(s),
        Err(e) => Scalar::Error(e),
    }
}

fn format_inner(value: &Scalar, format: &str) -> Result<String, ErrorCode> {
    let sections: Vec<&str> = format.split(';').collect();
    let number = match value {
        Scalar::Error(e) => return Err(*e),
        Scalar::Number(n) => Some(*n),
        Scalar::Blank => Some(0.0),
        Scalar::Bool(b) => return Ok(if *b { "TRUE" } else { "FALSE" }.to_string()),
        Scalar::Text(t) => parse_numeric_text(t).or_else(|| parse_date_text(t)),
    };
    let Some(n) = number else {
        let text = value.to_string();
        return Ok(match sections.get(3) {
            Some(s) => s.replace('@', &text).replace('"', ""),
            None => text,
        });
    };
    if format.eq_ignore_ascii_case("general") || format.is_empty() {
        return Ok(format_general(n));
    }
    let (section, n, sign) = if n < 0.0 && sections.len() >= 2 {
        (sections[1], -n, "")
    } else if n == 0.0 && sections.len() >= 3 {
        (sections[2], n, "")
    } else if n < 0.0 {
        (sections[0], -n, "-")
    } else {
        (sections[0], n, "")
    };
    let pieces = pieces(section);
    if is_date_format(&pieces) {
        let serial = to_serial(&Scalar::Number(n))?;
        return format_date(serial, &pieces);
    }
    let body = format_number(n, &pieces);
    let zero = body.chars().all(|c| !c.is_ascii_digit() || c == '0');
    Ok(if zero { body } else { format!("{sign}{body}") })
}
