//! 1900-system serial dates.
//!
//! Serial 61 is 1900-03-01; serials below 61 are rejected so the historical
//! 1900 leap-year quirk never surfaces.

use chrono::{Datelike, Duration, NaiveDate};

use crate::lang::ErrorCode;

pub const MIN_SERIAL: i64 = 61;
/// 9999-12-31.
pub const MAX_SERIAL: i64 = 2_958_465;

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1899, 12, 30).expect("valid epoch")
}

pub fn to_date(serial: f64) -> Result<NaiveDate, ErrorCode> {
    let day = serial.floor();
    if !(MIN_SERIAL as f64..=MAX_SERIAL as f64).contains(&day) {
        return Err(ErrorCode::Num);
    }
    Ok(epoch() + Duration::days(day as i64))
}

pub fn from_date(date: NaiveDate) -> Result<f64, ErrorCode> {
    let serial = (date - epoch()).num_days();
    if (MIN_SERIAL..=MAX_SERIAL).contains(&serial) {
        Ok(serial as f64)
    } else {
        Err(ErrorCode::Num)
    }
}

/// `DATE(year, month, day)` with month and day overflow rolling into the
/// neighbouring periods. Years 0..=1899 are offset by 1900.
pub fn date(year: f64, month: f64, day: f64) -> Result<f64, ErrorCode> {
    let mut year = year.trunc() as i64;
    if (0..1900).contains(&year) {
        year += 1900;
    }
    if !(1900..=9999).contains(&year) {
        return Err(ErrorCode::Num);
    }
    let months = year * 12 + month.trunc() as i64 - 1;
    let (y, m) = (months.div_euclid(12), months.rem_euclid(12) + 1);
    let first = NaiveDate::from_ymd_opt(y as i32, m as u32, 1).ok_or(ErrorCode::Num)?;
    from_date(first + Duration::days(day.trunc() as i64 - 1))
}

fn days_in_month(year: i32, month: u32) -> u32 {
    let (ny, nm) = if month == 12 { (year + 1, 1) } else { (year, month + 1) };
    let next = NaiveDate::from_ymd_opt(ny, nm, 1).expect("valid month");
    next.pred_opt().expect("has predecessor").day()
}

fn shift_months(date: NaiveDate, months: i64) -> Result<(i32, u32), ErrorCode> {
    let total = date.year() as i64 * 12 + date.month0() as i64 + months;
    let year = total.div_euclid(12);
    if !(1900..=9999).contains(&year) {
        return Err(ErrorCode::Num);
    }
    Ok((year as i32, total.rem_euclid(12) as u32 + 1))
}

/// Same day of month `months` later, clamped to the target month's length.
pub fn edate(serial: f64, months: f64) -> Result<f64, ErrorCode> {
    let start = to_date(serial)?;
    let (y, m) = shift_months(start, months.trunc() as i64)?;
    let day = start.day().min(days_in_month(y, m));
    from_date(NaiveDate::from_ymd_opt(y, m, day).expect("clamped day"))
}

/// Last day of the month `months` after the given date.
pub fn eomonth(serial: f64, months: f64) -> Result<f64, ErrorCode> {
    let start = to_date(serial)?;
    let (y, m) = shift_months(start, months.trunc() as i64)?;
    from_date(NaiveDate::from_ymd_opt(y, m, days_in_month(y, m)).expect("last day"))
}

/// WEEKDAY return types 1 (Sunday = 1), 2 (Monday = 1) and 3 (Monday = 0).
pub fn weekday(serial: f64, return_type: i64) -> Result<f64, ErrorCode> {
    let d = to_date(serial)?;
    let from_sunday = d.weekday().num_days_from_sunday() as f64;
    let from_monday = d.weekday().num_days_from_monday() as f64;
    match return_type {
        1 => Ok(from_sunday + 1.0),
        2 => Ok(from_monday + 1.0),
        3 => Ok(from_monday),
        _ => Err(ErrorCode::Num),
    }
}

/// Parses `yyyy-mm-dd` or `m/d/yyyy` into a serial.
pub fn parse_date_text(text: &str) -> Option<f64> {
    let t = text.trim();
    let parsed = if t.contains('-') {
        NaiveDate::parse_from_str(t, "%Y-%m-%d").ok()
    } else if t.contains('/') {
        let parts: Vec<&str> = t.split('/').collect();
        if parts.len() != 3 || parts[2].len() != 4 {
            return None;
        }
        let m: u32 = parts[0].parse().ok()?;
        let d: u32 = parts[1].parse().ok()?;
        let y: i32 = parts[2].parse().ok()?;
        NaiveDate::from_ymd_opt(y, m, d)
    } else {
        None
    }?;
    from_date(parsed).ok()
}
