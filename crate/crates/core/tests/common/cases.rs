//! Seeded random calls for every shipped component, each paired with the
//! value the native oracle gives for the same inputs.

use bxl_core::eval::{Scalar, Value};
use bxl_core::lang::ErrorCode;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::{self as o, Arg, Key, Out};
use super::{column, matrix, num, nums, row, text, texts};

pub struct Case {
    pub formula: String,
    pub expected: Value,
}

/// Every component as `(prefix, name)`.
pub const COMPONENTS: [(&str, &str); 18] = [
    ("BXD", "Aboutλ"),
    ("BXD", "Periodsλ"),
    ("BXD", "CreateStartDatesλ"),
    ("BXD", "CreateEndDatesλ"),
    ("BXD", "IsOccurrenceDateλ"),
    ("BXD", "IsBetweenλ"),
    ("BXD", "CountMonthDOWλ"),
    ("BXD", "OverLapDaysλ"),
    ("BXD", "ScheduleValuesλ"),
    ("BXD", "RunningTotalλ"),
    ("BXD", "PeriodLabelλ"),
    ("BXR", "Aboutλ"),
    ("BXR", "SumRowsλ"),
    ("BXR", "SumColumnsλ"),
    ("BXR", "SumGroupsλ"),
    ("BXR", "SumGroupsAndPeriodsλ"),
    ("BXR", "ReportGroupSummaryλ"),
    ("BXR", "ReportGroupDetailOffsetλ"),
];

pub fn generate(prefix: &str, name: &str, count: usize, seed: u64) -> Vec<Case> {
    let mut g = Gen(ChaCha8Rng::seed_from_u64(seed));
    (0..count)
        .map(|_| {
            let (args, expected) = match name {
                "Aboutλ" => g.about(prefix),
                "Periodsλ" => g.periods(),
                "CreateStartDatesλ" => g.start_dates(),
                "CreateEndDatesλ" => g.end_dates(),
                "IsOccurrenceDateλ" => g.occurrence(false),
                "ScheduleValuesλ" => g.occurrence(true),
                "IsBetweenλ" => g.between(),
                "CountMonthDOWλ" => g.month_dow(),
                "OverLapDaysλ" => g.overlap(),
                "RunningTotalλ" => g.running(),
                "PeriodLabelλ" => g.label(),
                "SumRowsλ" => g.sum_rows(),
                "SumColumnsλ" => g.sum_columns(),
                "SumGroupsλ" => g.sum_groups(),
                "SumGroupsAndPeriodsλ" => g.pivot(),
                "ReportGroupSummaryλ" => g.summary(),
                "ReportGroupDetailOffsetλ" => g.detail(),
                other => panic!("no generator for {other}"),
            };
            let call = format!("{prefix}.{name}({})", args.join(", "));
            // Aboutλ cases index into the table rather than calling it bare.
            let formula = match args.first() {
                Some(at) if name == "Aboutλ" => format!("={}", at.replace("{CALL}", &format!("{prefix}.{name}()"))),
                _ => format!("={call}"),
            };
            Case { formula, expected }
        })
        .collect()
}

fn out(x: Out<f64>) -> Scalar {
    x.map_or_else(Scalar::Error, Scalar::Number)
}

fn flag(x: Out<bool>) -> Scalar {
    x.map_or_else(Scalar::Error, Scalar::Bool)
}

fn fail(e: ErrorCode) -> Value {
    Value::error(e)
}

fn dates(v: &[i64]) -> Vec<Scalar> {
    v.iter().map(|&d| Scalar::Number(d as f64)).collect()
}

struct Gen(ChaCha8Rng);

impl Gen {
    fn chance(&mut self, p: f64) -> bool {
        self.0.gen_bool(p)
    }

    fn int(&mut self, lo: i64, hi: i64) -> i64 {
        self.0.gen_range(lo..=hi)
    }

    /// Quarter multiples so sums stay exact in binary.
    fn amount(&mut self) -> f64 {
        self.int(-4000, 4000) as f64 / 4.0
    }

    fn amounts(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.amount()).collect()
    }

    fn grid(&mut self, rows: usize, cols: usize) -> Vec<Vec<f64>> {
        (0..rows).map(|_| self.amounts(cols)).collect()
    }

    /// A day in 2019..2027, biased toward month ends where clamping bites.
    fn day(&mut self) -> i64 {
        let y = self.int(2019, 2027) as i32;
        let m = self.int(1, 12) as u32;
        let d = if self.chance(0.3) { *[28, 29, 30, 31].choose(&mut self.0).unwrap() } else { self.int(1, 28) as u32 };
        let last = o::add_months(o::ymd(y, m, 1), 1) - o::ymd(y, m, 1);
        o::ymd(y, m, d.min(last as u32))
    }

    fn pick<'a>(&mut self, options: &[&'a str]) -> &'a str {
        options.choose(&mut self.0).unwrap()
    }

    /// An interval argument: usually a valid code or word, sometimes
    /// blank, omitted, numeric or junk.
    fn interval(&mut self) -> Arg {
        match self.int(0, 9) {
            0 => Arg::Omitted,
            1 => Arg::Text(String::new()),
            2 => Arg::Text(self.pick(&["x", "Hourly", " ", "Z"]).to_string()),
            3 => Arg::Num(self.int(0, 9) as f64),
            _ => Arg::Text(
                self.pick(&["D", "w", "M", "q", "Y", "Days", "weeks", "Months", "Quarterly", "yearly", " m "]).to_string(),
            ),
        }
    }

    fn arg(a: &Arg) -> Option<String> {
        match a {
            Arg::Omitted => None,
            Arg::Num(n) => Some(num(*n)),
            Arg::Text(t) => Some(text(t)),
        }
    }

    fn about(&mut self, prefix: &str) -> (Vec<String>, Value) {
        let table = o::about(prefix);
        let (rows, cols) = table.dims();
        let (r, c) = (self.int(1, rows as i64), self.int(1, cols as i64));
        let at = match self.int(0, 3) {
            0 => "{CALL}".to_string(),
            1 => "ROWS({CALL})*10+COLUMNS({CALL})".to_string(),
            _ => format!("INDEX({{CALL}}, {r}, {c})"),
        };
        let expected = match at.as_str() {
            "{CALL}" => table,
            s if s.starts_with("ROWS") => Value::num((rows * 10 + cols) as f64),
            _ => Value::Scalar(table.to_array().get(r as usize - 1, c as usize - 1).clone()),
        };
        (vec![at], expected)
    }

    fn periods(&mut self) -> (Vec<String>, Value) {
        let s = self.day();
        let f = if self.chance(0.1) { s - self.int(1, 40) } else { s + self.int(0, 2000) };
        let code = self.interval();
        let mut args = vec![num(s as f64), num(f as f64)];
        args.extend(Self::arg(&code));
        (args, Value::Scalar(out(o::periods(s, f, &code).map(|n| n as f64))))
    }

    fn start_dates(&mut self) -> (Vec<String>, Value) {
        let start = self.day();
        let code = self.interval();
        let span = match &code {
            Arg::Text(t) if t.trim().to_uppercase().starts_with('D') => self.int(0, 60),
            Arg::Text(t) if t.trim().to_uppercase().starts_with('W') => self.int(0, 200),
            _ => self.int(0, 1500),
        };
        let end = match self.int(0, 9) {
            0 => Arg::Omitted,
            1 => Arg::Text(String::new()),
            2 => Arg::Text(self.pick(&["M", "weeks", "Q", "years", "d"]).to_string()),
            3 => Arg::Num((start - self.int(1, 30)) as f64),
            _ => Arg::Num((start + span) as f64),
        };
        let mut args = vec![num(start as f64)];
        match (Self::arg(&end), Self::arg(&code)) {
            (e, Some(c)) => {
                args.push(e.unwrap_or_default());
                args.push(c);
            }
            (Some(e), None) => args.push(e),
            (None, None) => {}
        }
        let expected = match o::create_start_dates(start, &end, &code) {
            Ok(v) => Value::row(dates(&v)),
            Err(e) => fail(e),
        };
        (args, expected)
    }

    /// Regular starts: daily, weekly or every `m` months.
    fn starts(&mut self, max: i64) -> Vec<i64> {
        let first = self.day();
        let n = self.int(1, max);
        match self.int(0, 3) {
            0 => (0..n).map(|i| first + i).collect(),
            1 => (0..n).map(|i| first + 7 * i).collect(),
            _ => {
                let m = *[1, 1, 3, 12].choose(&mut self.0).unwrap();
                (0..n).map(|i| o::add_months(first, i * m)).collect()
            }
        }
    }

    fn end_dates(&mut self) -> (Vec<String>, Value) {
        let starts = self.starts(14);
        let end = match self.int(0, 2) {
            0 => Some(starts[starts.len() - 1] + self.int(0, 100)),
            _ => None,
        };
        let mut args = vec![row(&dates(&starts))];
        if let Some(e) = end {
            args.push(num(e as f64));
        } else if self.chance(0.3) {
            args.push(text(""));
        }
        let cells: Vec<Scalar> = o::create_end_dates(&starts, end).into_iter().map(|x| out(x.map(|d| d as f64))).collect();
        (args, Value::row(cells))
    }

    fn code(&mut self) -> String {
        match self.int(0, 19) {
            0 => String::new(),
            1 => self.pick(&["Z", "MONTHLY", "1"]).to_string(),
            2 => format!(" {} ", self.pick(&["m", "w", "a"])),
            _ => self.pick(&["D", "W", "B", "M", "Q", "S", "A", "X"]).to_string(),
        }
    }

    fn occurrence(&mut self, valued: bool) -> (Vec<String>, Value) {
        let base = self.day();
        let items = self.int(1, 5) as usize;
        let firsts: Vec<i64> = (0..items).map(|_| base + self.int(-40, 40)).collect();
        let k = self.int(1, 10);
        let days: Vec<i64> = match self.int(0, 2) {
            0 => (0..k).map(|i| base + i * self.int(1, 3)).collect(),
            1 => (0..k).map(|i| base + 7 * i).collect(),
            _ => (0..k).map(|i| o::add_months(base, i)).collect(),
        };
        let lasts: Option<Vec<Option<i64>>> = match self.int(0, 2) {
            0 => None,
            1 => Some(vec![if self.chance(0.5) { Some(base + self.int(0, 200)) } else { None }]),
            _ => Some((0..items).map(|_| if self.chance(0.7) { Some(base + self.int(-20, 300)) } else { None }).collect()),
        };
        let codes: Option<Vec<String>> = match self.int(0, 4) {
            0 => None,
            1 => Some(vec![self.code()]),
            _ => Some((0..items).map(|_| self.code()).collect()),
        };
        let amounts = self.amounts(items);
        let bad_shape = self.chance(0.03);

        let cells = |v: &[Option<i64>]| -> Vec<Scalar> {
            v.iter().map(|d| d.map_or(Scalar::text(""), |d| Scalar::Number(d as f64))).collect()
        };
        let mut args = vec![
            if bad_shape && k > 1 { column(&dates(&days)) } else { row(&dates(&days)) },
            column(&dates(&firsts)),
        ];
        let omit = String::new;
        let lasts_arg = lasts.as_ref().map(|l| column(&cells(l)));
        let codes_arg = codes.as_ref().map(|c| column(&texts(c)));
        match (lasts_arg, codes_arg, valued) {
            (l, c, true) => {
                args.push(l.unwrap_or_else(omit));
                args.push(c.unwrap_or_else(omit));
                args.push(column(&nums(&amounts)));
            }
            (l, Some(c), false) => {
                args.push(l.unwrap_or_else(omit));
                args.push(c);
            }
            (Some(l), None, false) => args.push(l),
            (None, None, false) => {}
        }
        if bad_shape && k > 1 {
            // The scalar error still broadcasts against the amounts column.
            let width = if valued { items } else { 1 };
            return (args, Value::column(vec![Scalar::Error(ErrorCode::Value); width]));
        }
        let hits = o::is_occurrence(&days, &firsts, lasts.as_deref(), codes.as_deref());
        let rows: Vec<Vec<Scalar>> = hits
            .into_iter()
            .zip(&amounts)
            .map(|(r, &a)| {
                r.into_iter()
                    .map(|h| if valued { out(h.map(|b| if b { a } else { 0.0 })) } else { flag(h) })
                    .collect()
            })
            .collect();
        (args, Value::from_rows(rows))
    }

    fn between(&mut self) -> (Vec<String>, Value) {
        let (lo, hi) = (self.int(-50, 50), self.int(-50, 50));
        let v = if self.chance(0.3) { *[lo, hi].choose(&mut self.0).unwrap() } else { self.int(-60, 60) };
        let (v, lo, hi) = (v as f64 / 2.0, lo as f64 / 2.0, hi as f64 / 2.0);
        let args = vec![num(v), num(lo), num(hi)];
        (args, Value::bool(lo <= v && v <= hi))
    }

    fn month_dow(&mut self) -> (Vec<String>, Value) {
        let d = self.day();
        let dow = if self.chance(0.1) { *[0.0, 8.0, 2.5, -1.0].choose(&mut self.0).unwrap() } else { self.int(1, 7) as f64 };
        (vec![num(d as f64), num(dow)], Value::Scalar(out(o::count_month_dow(d, dow))))
    }

    fn overlap(&mut self) -> (Vec<String>, Value) {
        let a0 = self.day();
        let a1 = a0 + self.int(-3, 120);
        let b0 = a0 + self.int(-100, 100);
        let b1 = b0 + self.int(-3, 120);
        let args = [a0, a1, b0, b1].iter().map(|&d| num(d as f64)).collect();
        (args, Value::Scalar(out(o::overlap_days(a0, a1, b0, b1))))
    }

    fn running(&mut self) -> (Vec<String>, Value) {
        let n = self.int(1, 12) as usize;
        let v = self.amounts(n);
        let totals = nums(&o::running_total(&v));
        match self.int(0, 9) {
            0 => {
                let cols = self.int(2, 4) as usize;
                let g = self.grid(2, cols);
                let cells: Vec<Vec<Scalar>> = g.iter().map(|r| nums(r)).collect();
                (vec![matrix(&cells)], fail(ErrorCode::Value))
            }
            1..=4 => (vec![column(&nums(&v))], Value::column(totals)),
            _ => (vec![row(&nums(&v))], Value::row(totals)),
        }
    }

    fn label(&mut self) -> (Vec<String>, Value) {
        let n = self.int(1, 5) as usize;
        let ds: Vec<i64> = (0..n).map(|_| self.day()).collect();
        let code = self.interval();
        let mut args = vec![row(&dates(&ds))];
        args.extend(Self::arg(&code));
        let text_code = match &code {
            Arg::Omitted => String::new(),
            Arg::Num(x) => format!("{x}"),
            Arg::Text(t) => t.clone(),
        };
        let expected = match o::interval(&text_code) {
            Ok(c) => Value::row(ds.iter().map(|&d| Scalar::text(o::period_label(d, c))).collect()),
            Err(e) => fail(e),
        };
        (args, expected)
    }

    fn any_grid(&mut self) -> Vec<Vec<f64>> {
        let (rows, cols) = (self.int(1, 8) as usize, self.int(1, 8) as usize);
        self.grid(rows, cols)
    }

    fn array_arg(g: &[Vec<f64>]) -> String {
        matrix(&g.iter().map(|r| nums(r)).collect::<Vec<_>>())
    }

    fn sum_rows(&mut self) -> (Vec<String>, Value) {
        let g = self.any_grid();
        let sums = g.iter().map(|r| o::sum(r.iter().copied())).collect::<Vec<_>>();
        (vec![Self::array_arg(&g)], Value::column(nums(&sums)))
    }

    fn sum_columns(&mut self) -> (Vec<String>, Value) {
        let g = self.any_grid();
        let sums = (0..g[0].len()).map(|c| o::sum(g.iter().map(|r| r[c]))).collect::<Vec<_>>();
        (vec![Self::array_arg(&g)], Value::row(nums(&sums)))
    }

    fn keys(&mut self, n: usize) -> Vec<Key> {
        if self.chance(0.5) {
            let span = self.int(1, 6);
            (0..n).map(|_| Key::N((self.int(1, span) * 1000 + 500) as f64)).collect()
        } else {
            let pool = ["OPS", "LAB", "TRAVEL", "A", "B", "ZED"];
            let span = self.int(1, pool.len() as i64) as usize;
            (0..n).map(|_| Key::T(pool[..span].choose(&mut self.0).unwrap().to_string())).collect()
        }
    }

    fn key_arg(keys: &[Key]) -> String {
        column(&keys.iter().map(Key::scalar).collect::<Vec<_>>())
    }

    fn sum_groups(&mut self) -> (Vec<String>, Value) {
        let m = self.int(1, 12) as usize;
        let keys = self.keys(m);
        let extra = usize::from(self.chance(0.05));
        let cols = self.int(1, 5) as usize;
        let g = self.grid(m + extra, cols);
        let args = vec![Self::key_arg(&keys), Self::array_arg(&g)];
        let expected = match o::sum_groups(&keys, &g) {
            Ok(r) => Value::from_rows(r.iter().map(|x| nums(x)).collect()),
            Err(e) => fail(e),
        };
        (args, expected)
    }

    fn pivot(&mut self) -> (Vec<String>, Value) {
        let starts = self.starts(8);
        let span_end = o::create_end_dates(&starts, None).last().unwrap().unwrap_or(starts[0] + 30);
        let m = self.int(1, 15) as usize;
        let keys = self.keys(m);
        let ds: Vec<i64> = (0..m).map(|_| self.int(starts[0] - 10, span_end + 10)).collect();
        let short = usize::from(self.chance(0.05));
        let amounts = self.amounts(m - short.min(m - 1));
        let ends: Option<Vec<i64>> = if self.chance(0.4) {
            let mut e: Vec<i64> = o::create_end_dates(&starts, Some(span_end)).into_iter().map(Result::unwrap).collect();
            if self.chance(0.5) {
                // Explicit ends may leave gaps between periods.
                for (x, s) in e.iter_mut().zip(&starts) {
                    *x = (*x - self.int(0, 3)).max(*s);
                }
            }
            Some(e)
        } else {
            None
        };
        let mut args = vec![Self::key_arg(&keys), column(&dates(&ds)), column(&nums(&amounts)), row(&dates(&starts))];
        if let Some(e) = &ends {
            args.push(row(&dates(e)));
        }
        let expected = match o::sum_groups_and_periods(&keys, &ds, &amounts, &starts, ends.as_deref()) {
            Ok(r) => Value::from_rows(r.into_iter().map(|x| x.into_iter().map(out).collect()).collect()),
            Err(e) => fail(e),
        };
        (args, expected)
    }

    fn labels(&mut self, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{} {i}", self.pick(&["Supplies", "Wages", "Rent", "Fuel"]))).collect()
    }

    fn heads(&mut self, n: usize) -> Vec<String> {
        let start = self.starts(1)[0];
        (0..n).map(|i| o::period_label(o::add_months(start, i as i64), 'M')).collect()
    }

    fn summary(&mut self) -> (Vec<String>, Value) {
        let g = self.int(1, 5) as usize;
        let n = self.int(1, 6) as usize;
        let keys = o::groups(&self.keys(12));
        let keys = &keys[..g.min(keys.len())];
        let g = keys.len();
        let labels = self.labels(g);
        let budget = self.grid(g, n);
        let extra = usize::from(self.chance(0.05));
        let actuals = self.grid(g + extra, n);
        let heads = self.heads(n);
        let args = vec![
            Self::key_arg(keys),
            column(&texts(&labels)),
            Self::array_arg(&budget),
            Self::array_arg(&actuals),
            row(&texts(&heads)),
        ];
        (args, o::report_group_summary(keys, &labels, &budget, &actuals, &heads))
    }

    fn detail(&mut self) -> (Vec<String>, Value) {
        let m = self.int(1, 8) as usize;
        let n = self.int(1, 6) as usize;
        let keys = self.keys(m);
        let labels = self.labels(m);
        let budget = self.grid(m, n);
        let groups = o::groups(&keys).len();
        let extra = usize::from(self.chance(0.05));
        let actuals = self.grid(groups + extra, n);
        let heads = self.heads(n);
        let args = vec![
            Self::key_arg(&keys),
            column(&texts(&labels)),
            Self::array_arg(&budget),
            Self::array_arg(&actuals),
            row(&texts(&heads)),
        ];
        (args, o::report_group_detail(&keys, &labels, &budget, &actuals, &heads))
    }
}
