//! Direct Rust implementations of the shipped components, written from
//! their contracts with calendar arithmetic done by chrono and by
//! enumeration. They share no code with the engine.

use std::cmp::Ordering;

use bxl_core::eval::{Scalar, Value};
use bxl_core::lang::ErrorCode;
use chrono::{Datelike, Months, NaiveDate};

pub type Out<T> = Result<T, ErrorCode>;

pub fn date(serial: i64) -> NaiveDate {
    NaiveDate::from_ymd_opt(1899, 12, 30).unwrap() + chrono::Duration::days(serial)
}

pub fn serial(d: NaiveDate) -> i64 {
    (d - NaiveDate::from_ymd_opt(1899, 12, 30).unwrap()).num_days()
}

pub fn ymd(y: i32, m: u32, d: u32) -> i64 {
    serial(NaiveDate::from_ymd_opt(y, m, d).unwrap())
}

/// Same day `months` later, clamped to the target month's length.
pub fn add_months(s: i64, months: i64) -> i64 {
    let d = date(s);
    let moved = if months >= 0 {
        d.checked_add_months(Months::new(months as u32))
    } else {
        d.checked_sub_months(Months::new((-months) as u32))
    };
    serial(moved.unwrap())
}

/// Whole months from `s` whose anniversary is on or before `f`, counted
/// one month at a time.
fn whole_months(s: i64, f: i64) -> i64 {
    let mut k = 0;
    while add_months(s, k + 1) <= f {
        k += 1;
    }
    k
}

/// Interval argument as the caller wrote it.
#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Omitted,
    Num(f64),
    Text(String),
}

impl Arg {
    pub fn is_blank(&self) -> bool {
        matches!(self, Arg::Omitted) || matches!(self, Arg::Text(t) if t.is_empty())
    }
}

/// Interval code from free text: empty means months, otherwise the first
/// letter after trimming decides. All-space text has no letter.
pub fn interval(text: &str) -> Out<char> {
    if text.is_empty() {
        return Ok('M');
    }
    match text.trim().chars().next().map(|c| c.to_ascii_uppercase()) {
        Some(c) if "DWMQY".contains(c) => Ok(c),
        _ => Err(ErrorCode::Value),
    }
}

fn arg_interval(a: &Arg) -> Out<char> {
    match a {
        Arg::Omitted => Ok('M'),
        Arg::Text(t) => interval(t),
        Arg::Num(n) => interval(&format!("{n}")),
    }
}

pub fn periods(s: i64, f: i64, code: &Arg) -> Out<i64> {
    let code = arg_interval(code)?;
    if s > f {
        return Err(ErrorCode::Num);
    }
    Ok(match code {
        'D' => f - s + 1,
        'W' => (f - s) / 7 + 1,
        'M' => whole_months(s, f) + 1,
        'Q' => whole_months(s, f) / 3 + 1,
        _ => whole_months(s, f) / 12 + 1,
    })
}

const CODE_WORDS: [&str; 10] = ["D", "W", "M", "Q", "Y", "DAYS", "WEEKS", "MONTHS", "QUARTERS", "YEARS"];

pub fn create_start_dates(start: i64, end: &Arg, step: &Arg) -> Out<Vec<i64>> {
    let shifted = matches!(end, Arg::Text(t) if CODE_WORDS.contains(&t.trim().to_uppercase().as_str()))
        && *step == Arg::Omitted;
    let step = if shifted { end.clone() } else { step.clone() };
    let code = arg_interval(&step)?;
    let finish = if shifted || end.is_blank() {
        add_months(start, 12) - 1
    } else {
        match end {
            Arg::Num(n) => *n as i64,
            _ => return Err(ErrorCode::Value),
        }
    };
    let n = periods(start, finish, &Arg::Text(code.to_string()))?;
    Ok((0..n)
        .map(|i| match code {
            'D' => start + i,
            'W' => start + 7 * i,
            'M' => add_months(start, i),
            'Q' => add_months(start, 3 * i),
            _ => add_months(start, 12 * i),
        })
        .collect())
}

/// Last end when none is given: the interval between the first two starts,
/// applied once more.
fn inferred_final(starts: &[i64]) -> Out<i64> {
    let n = starts.len();
    if n < 2 {
        return Err(ErrorCode::Value);
    }
    let (first, second) = (starts[0], starts[1]);
    let (a, b) = (date(first), date(second));
    let m = (b.year() - a.year()) as i64 * 12 + b.month() as i64 - a.month() as i64;
    if m > 0 && add_months(first, m) == second {
        Ok(add_months(first, n as i64 * m) - 1)
    } else {
        Ok(starts[n - 1] + second - first - 1)
    }
}

pub fn create_end_dates(starts: &[i64], end: Option<i64>) -> Vec<Out<i64>> {
    let n = starts.len();
    let last = match end {
        Some(e) => Ok(e),
        None => inferred_final(starts),
    };
    (0..n).map(|i| if i + 1 < n { Ok(starts[i + 1] - 1) } else { last }).collect()
}

/// Does a `code` schedule anchored at `first` fire on `day`?
fn fires(code: char, first: i64, day: i64) -> bool {
    let every_months = |step: i64| {
        let mut k = 0;
        loop {
            let at = add_months(first, k);
            if at >= day {
                return at == day;
            }
            k += step;
        }
    };
    match code {
        'D' => true,
        'W' => (day - first) % 7 == 0,
        'B' => (day - first) % 14 == 0,
        'M' => every_months(1),
        'Q' => every_months(3),
        'S' => every_months(6),
        'A' => every_months(12),
        _ => day == first,
    }
}

fn schedule_code(raw: &str) -> Out<char> {
    let t = raw.trim().to_uppercase();
    if t.is_empty() {
        return Ok('X');
    }
    let mut chars = t.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if "DWBMQSAX".contains(c) => Ok(c),
        _ => Err(ErrorCode::Value),
    }
}

/// Occurrence matrix, one row per item. A row with an unknown code is all
/// `#VALUE!`.
pub fn is_occurrence(dates: &[i64], firsts: &[i64], lasts: Option<&[Option<i64>]>, codes: Option<&[String]>) -> Vec<Vec<Out<bool>>> {
    firsts
        .iter()
        .enumerate()
        .map(|(i, &first)| {
            let last = lasts.map(|l| if l.len() == 1 { l[0] } else { l[i] }).unwrap_or(None).unwrap_or(i64::MAX);
            let code = codes.map(|c| if c.len() == 1 { &c[0] } else { &c[i] }).map_or(Ok('X'), |c| schedule_code(c));
            dates
                .iter()
                .map(|&d| code.map(|code| first <= d && d <= last && fires(code, first, d)))
                .collect()
        })
        .collect()
}

pub fn count_month_dow(d: i64, dow: f64) -> Out<f64> {
    if !(1.0..=7.0).contains(&dow) || dow.fract() != 0.0 {
        return Err(ErrorCode::Num);
    }
    let day = date(d);
    let mut cur = NaiveDate::from_ymd_opt(day.year(), day.month(), 1).unwrap();
    let mut count = 0;
    while cur.month() == day.month() {
        if cur.weekday().number_from_sunday() as f64 == dow {
            count += 1;
        }
        cur = cur.succ_opt().unwrap();
    }
    Ok(count as f64)
}

/// Counts shared days one by one.
pub fn overlap_days(a0: i64, a1: i64, b0: i64, b1: i64) -> Out<f64> {
    if a0 > a1 || b0 > b1 {
        return Err(ErrorCode::Num);
    }
    Ok((a0..=a1).filter(|d| (b0..=b1).contains(d)).count() as f64)
}

pub fn running_total(v: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    v.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

pub fn period_label(d: i64, code: char) -> String {
    let day = date(d);
    match code {
        'D' | 'W' => day.format("%Y-%m-%d").to_string(),
        'M' => day.format("%Y-%b").to_string(),
        'Q' => format!("{}-Q{}", day.year(), (day.month() - 1) / 3 + 1),
        _ => format!("{}", day.year()),
    }
}

pub fn sum(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, b| a + b)
}

/// Group keys are all numbers or all upper-case text.
#[derive(Debug, Clone, PartialEq)]
pub enum Key {
    N(f64),
    T(String),
}

impl Key {
    pub fn scalar(&self) -> Scalar {
        match self {
            Key::N(n) => Scalar::Number(*n),
            Key::T(t) => Scalar::text(t.as_str()),
        }
    }

    fn cmp(&self, other: &Key) -> Ordering {
        match (self, other) {
            (Key::N(a), Key::N(b)) => a.partial_cmp(b).unwrap(),
            (Key::T(a), Key::T(b)) => a.cmp(b),
            (Key::N(_), Key::T(_)) => Ordering::Less,
            (Key::T(_), Key::N(_)) => Ordering::Greater,
        }
    }
}

pub fn groups(keys: &[Key]) -> Vec<Key> {
    let mut out: Vec<Key> = Vec::new();
    for k in keys {
        if !out.contains(k) {
            out.push(k.clone());
        }
    }
    out.sort_by(Key::cmp);
    out
}

pub fn sum_groups(keys: &[Key], values: &[Vec<f64>]) -> Out<Vec<Vec<f64>>> {
    if keys.len() != values.len() {
        return Err(ErrorCode::Value);
    }
    let n = values[0].len();
    Ok(groups(keys)
        .iter()
        .map(|g| (0..n).map(|c| sum(keys.iter().zip(values).map(|(k, row)| if k == g { row[c] } else { 0.0 }))).collect())
        .collect())
}

pub fn sum_groups_and_periods(
    keys: &[Key],
    dates: &[i64],
    amounts: &[f64],
    starts: &[i64],
    ends: Option<&[i64]>,
) -> Out<Vec<Vec<Out<f64>>>> {
    // Without explicit ends a lone start has no period length to infer,
    // and the whole pivot is undefined.
    let bounds: Vec<i64> = match ends {
        Some(e) => e.to_vec(),
        None => create_end_dates(starts, None).into_iter().collect::<Out<_>>()?,
    };
    if keys.len() != dates.len() || keys.len() != amounts.len() || bounds.len() != starts.len() {
        return Err(ErrorCode::Value);
    }
    Ok(groups(keys)
        .iter()
        .map(|g| {
            starts
                .iter()
                .zip(&bounds)
                .map(|(&lo, &hi)| {
                    Ok(sum((0..keys.len()).map(|i| {
                        if &keys[i] == g && lo <= dates[i] && dates[i] <= hi {
                            amounts[i]
                        } else {
                            0.0
                        }
                    })))
                })
                .collect()
        })
        .collect())
}

fn t(s: &str) -> Scalar {
    Scalar::text(s)
}

fn n(x: f64) -> Scalar {
    Scalar::Number(x)
}

pub fn report_group_summary(keys: &[Key], labels: &[String], budget: &[Vec<f64>], actuals: &[Vec<f64>], heads: &[String]) -> Value {
    let g = keys.len();
    let cols = budget.first().map_or(0, Vec::len);
    if labels.len() != g
        || budget.len() != g
        || actuals.len() != g
        || actuals.first().map_or(0, Vec::len) != cols
        || heads.len() != cols
    {
        return Value::error(ErrorCode::Value);
    }
    let mut rows = vec![];
    let mut header = vec![t("Account"), t("Accounts Description"), t("")];
    header.extend(heads.iter().map(|h| t(h)));
    header.push(t("Total"));
    rows.push(header);
    for i in 0..g {
        let (b, a) = (&budget[i], &actuals[i]);
        let mut planned = vec![keys[i].scalar(), t(&labels[i]), t("Budgeted")];
        planned.extend(b.iter().map(|&x| n(x)));
        planned.push(n(sum(b.iter().copied())));
        let mut spent = vec![t(""), t(""), t("Less Expense")];
        spent.extend(a.iter().map(|&x| n(0.0 - x)));
        spent.push(n(0.0 - sum(a.iter().copied())));
        let mut net = vec![t(""), t(""), t("Subtotal")];
        net.extend(b.iter().zip(a).map(|(x, y)| n(x - y)));
        net.push(n(sum(b.iter().copied()) - sum(a.iter().copied())));
        rows.extend([planned, spent, net]);
    }
    Value::from_rows(rows)
}

pub fn report_group_detail(keys: &[Key], labels: &[String], budget: &[Vec<f64>], actuals: &[Vec<f64>], heads: &[String]) -> Value {
    let m = keys.len();
    let cols = budget.first().map_or(0, Vec::len);
    let gs = groups(keys);
    if labels.len() != m
        || budget.len() != m
        || actuals.len() != gs.len()
        || actuals.first().map_or(0, Vec::len) != cols
        || heads.len() != cols
    {
        return Value::error(ErrorCode::Value);
    }
    let mut rows = vec![];
    let mut header = vec![t("Account"), t("Item")];
    header.extend(heads.iter().map(|h| t(h)));
    rows.push(header);
    for (gi, g) in gs.iter().enumerate() {
        let members: Vec<usize> = (0..m).filter(|&i| &keys[i] == g).collect();
        for (j, &i) in members.iter().enumerate() {
            let mut r = vec![if j == 0 { g.scalar() } else { t("") }, t(&labels[i])];
            r.extend(budget[i].iter().map(|&x| n(x)));
            rows.push(r);
        }
        let subtotal: Vec<f64> = (0..cols).map(|c| sum(members.iter().map(|&i| budget[i][c]))).collect();
        let balance: Vec<f64> = subtotal.iter().zip(&actuals[gi]).map(|(b, a)| b - a).collect();
        let labelled = |label: &str, vals: Vec<f64>| {
            let mut r = vec![t(""), t(label)];
            r.extend(vals.into_iter().map(n));
            r
        };
        rows.push(labelled("Budgeted Subtotal", subtotal.clone()));
        rows.push(labelled("Less Spent", actuals[gi].iter().map(|a| 0.0 - a).collect()));
        rows.push(labelled("Accounts Subtotal", balance.clone()));
        rows.push(labelled("Cumulative Total", running_total(&balance)));
    }
    Value::from_rows(rows)
}

/// The component listing each module's About table ends with.
pub fn about_listing(module: &str) -> Vec<(&'static str, &'static str)> {
    match module {
        "BXD" => vec![
            ("Aboutλ", "Produces this table"),
            ("Periodsλ", "Determine the number of periods from date1 to date 2 inclusive"),
            ("CreateStartDatesλ", "Creates a horizontal list of start dates for a timeline"),
            ("CreateEndDatesλ", "Creates a horizontal list of end dates for a timeline"),
            ("IsOccurrenceDateλ", "Determine if a date passed is when a potentially repeating event happens"),
            ("IsBetweenλ", "Determine if a value is between a lower and upper limit"),
            ("CountMonthDOWλ", "Count instances in a month for a specific day of the week"),
            ("OverLapDaysλ", "Return how many days overlap two period ranges."),
            ("ScheduleValuesλ", "Schedules values in a timeline from a schedule in a table."),
            ("RunningTotalλ", "Creates a running total for a vector array"),
            ("PeriodLabelλ", "Creates a table for a date based on period interval"),
        ],
        _ => vec![
            ("Aboutλ", "Produces this table"),
            ("SumRowsλ", "Totals an array's rows"),
            ("SumColumnsλ", "Totals an array's columns"),
            ("SumGroupsλ", "Totals rows that share a key"),
            ("SumGroupsAndPeriodsλ", "Pivots transactions into key by period totals"),
            ("ReportGroupSummaryλ", "Lays out budget, expense, and subtotal rows for each group"),
            ("ReportGroupDetailOffsetλ", "Lays out item rows and balance rows for each group"),
        ],
    }
}

pub fn about(module: &str) -> Value {
    let (blurb, file) = match module {
        "BXD" => ("Date and scheduling components. Suggested module name: BXD", "bxd.bxl"),
        _ => ("Reporting components. Suggested module name: BXR", "bxr.bxl"),
    };
    let mut rows = vec![
        vec![t("About:"), t(blurb)],
        vec![t("Version:"), t("1.0.0")],
        vec![t("Source:"), t(file)],
        vec![t("Function"), t("Description")],
    ];
    rows.extend(about_listing(module).into_iter().map(|(a, b)| vec![t(a), t(b)]));
    Value::from_rows(rows)
}

/// Iterative Fibonacci with positions counted from 1 (0, 1, 1, 2, ...).
pub fn fibonacci(position: u32) -> f64 {
    let (mut a, mut b) = (0.0, 1.0);
    for _ in 1..position {
        (a, b) = (b, a + b);
    }
    a
}

/// Paydays of a 14-day schedule inside `[lo, hi]`.
pub fn paydays(anchor: NaiveDate, lo: NaiveDate, hi: NaiveDate) -> Vec<NaiveDate> {
    let mut out = vec![];
    let mut d = anchor;
    while d <= hi {
        if d >= lo {
            out.push(d);
        }
        d += chrono::Duration::days(14);
    }
    out
}
