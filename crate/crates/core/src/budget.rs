//! The departmental budget demo: budget items, synthetic actuals, and a
//! workbook that assembles the whole model from BXD/BXR components.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};

use crate::eval::date::from_date;
use crate::registry::RegistryError;
use crate::stdlib::with_stdlib;
use crate::workbook::{Table, Workbook};

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetItem {
    pub id: u32,
    pub account: u32,
    pub account_description: &'static str,
    pub expense_description: &'static str,
    pub unit_price: f64,
    pub qty: f64,
    pub uom: &'static str,
    pub schedule: char,
    pub first: NaiveDate,
    pub last: Option<NaiveDate>,
}

impl BudgetItem {
    pub fn ext_amount(&self) -> f64 {
        self.unit_price * self.qty
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transaction {
    pub date: NaiveDate,
    pub account: u32,
    pub description: String,
    pub amount: f64,
}

pub const FIXTURE_SEED: u64 = 20230701;
pub const FIXTURE_TRANSACTIONS: usize = 120;

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid fixture date")
}

pub fn fiscal_start() -> NaiveDate {
    ymd(2023, 7, 1)
}

/// Last day of the default one-year span.
pub fn fiscal_end() -> NaiveDate {
    ymd(2024, 6, 30)
}

#[rustfmt::skip]
pub fn budget_items() -> Vec<BudgetItem> {
    let row = |id, account, account_description, expense_description, unit_price, qty, uom, schedule, first, last| BudgetItem {
        id, account, account_description, expense_description, unit_price, qty, uom, schedule, first, last,
    };
    let (y20, y22) = (ymd(2020, 7, 1), ymd(2022, 7, 1));
    vec![
        row(1, 510000, "SALARIES", "Staff Wages", 12000.0, 1.0, "Bi-Wk", 'B', y22, None),
        row(2, 510000, "SALARIES", "Summer Intern", 20.0, 4.0, "Hrs/Day", 'X', ymd(2023, 5, 1), Some(ymd(2023, 8, 30))),
        row(3, 514000, "OVERTIME", "OVERTIME", 200.0, 1.0, "Ea", 'M', y22, None),
        row(4, 520000, "FRINGE EXPENSE", "FRINGE EXPENSE", 8659.42, 1.0, "Ea", 'M', y22, None),
        row(5, 550100, "PRINT & OFFICE SUPPLIES", "PRINT & OFFICE SUPPLIES", 1500.0, 1.0, "Yr", 'A', y20, None),
        row(6, 550300, "POSTAGE", "POSTAGE", 450.0, 1.0, "Yr", 'A', y20, None),
        row(7, 551540, "VEHICLE FUEL", "Town owned vehicle fuel", 10.0, 1.0, "Ea", 'W', fiscal_start(), None),
        row(8, 551550, "EQUIPMENT REPAIR", "EQUIPMENT REPAIR", 10000.0, 1.0, "Yr", 'A', y20, None),
        row(9, 552300, "TELEPHONE", "Town owned cellphone", 125.0, 12.0, "M", 'M', y22, None),
        row(10, 552320, "TELEPHONE STIPEND", "Staff member's personal phone reimbursement", 93.51, 12.0, "M", 'M', y20, None),
        row(11, 554210, "DUES AND MEMBERSHIP", "Virginia Local Gov IT Conference", 200.0, 1.0, "Yr", 'A', y20, None),
        row(12, 554210, "DUES AND MEMBERSHIP", "Roanoke Blacksburg Technology Council", 500.0, 1.0, "Yr", 'A', y20, None),
        row(13, 554210, "DUES AND MEMBERSHIP", "COV Security", 125.0, 1.0, "Yr", 'A', y20, None),
        row(14, 554210, "DUES AND MEMBERSHIP", "NCLGISA-GMIS", 200.0, 1.0, "Yr", 'A', y20, None),
        row(15, 554220, "TRAVEL", "Training and Certification - NCLGISA", 150.0, 1.0, "Yr", 'A', y20, None),
        row(16, 554220, "TRAVEL", "Training and Certification - NCLGISA", 150.0, 1.0, "Yr", 'A', y20, None),
        row(17, 554220, "TRAVEL", "Virginia Local Gov IT Conference", 50.0, 1.0, "Yr", 'A', y20, None),
        row(18, 554220, "TRAVEL", "COV Security", 150.0, 1.0, "Yr", 'A', y20, None),
        row(19, 554220, "TRAVEL", "Roanoke Blacksburg Technology Council", 150.0, 1.0, "Yr", 'A', y20, None),
        row(20, 554220, "TRAVEL", "NCLGISA-GMIS", 100.0, 1.0, "Yr", 'A', y20, None),
        row(21, 554220, "TRAVEL", "MS Training", 2500.0, 1.0, "Yr", 'A', y20, None),
    ]
}

/// Rough occurrences per year, used only to size synthetic spending.
fn yearly_rate(code: char) -> f64 {
    match code {
        'D' => 365.0,
        'W' => 52.0,
        'B' => 26.0,
        'M' => 12.0,
        'Q' => 4.0,
        'S' => 2.0,
        _ => 1.0,
    }
}

/// Seeded synthetic expenditures inside the fiscal year. Every account in
/// `items` receives at least one transaction, so actual and budget groups
/// line up. Each amount is 1% to 12% of the account's yearly budget.
pub fn synthetic_actuals(items: &[BudgetItem], seed: u64, count: usize) -> Vec<Transaction> {
    let mut accounts: Vec<u32> = items.iter().map(|i| i.account).collect();
    accounts.sort_unstable();
    accounts.dedup();
    let yearly: Vec<f64> = accounts
        .iter()
        .map(|a| {
            items
                .iter()
                .filter(|i| i.account == *a)
                .map(|i| i.ext_amount() * yearly_rate(i.schedule))
                .sum()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = (fiscal_end() - fiscal_start()).num_days();
    (0..count.max(accounts.len()))
        .map(|n| {
            let k = if n < accounts.len() { n } else { rng.gen_range(0..accounts.len()) };
            let account = accounts[k];
            let date = fiscal_start() + chrono::Duration::days(rng.gen_range(0..=span));
            let cents = (yearly[k] * rng.gen_range(1.0..12.0)).round().max(100.0) as u32;
            Transaction {
                date,
                account,
                description: format!("Invoice {:05}", rng.gen_range(0..100_000)),
                amount: f64::from(cents) / 100.0,
            }
        })
        .collect()
}

fn serial(d: NaiveDate) -> Json {
    json!(from_date(d).expect("fixture dates are in range"))
}

fn items_table(items: &[BudgetItem]) -> Table {
    Table {
        name: "tblBI".into(),
        sheet: "Inputs".into(),
        origin: "D1".into(),
        columns: [
            "ID",
            "Account",
            "Account Description",
            "Expense Description",
            "Unit Price",
            "Qty",
            "UOM",
            "Ext.Amt.",
            "Schedule",
            "First Date",
            "Last Date",
        ]
        .map(String::from)
        .to_vec(),
        rows: items
            .iter()
            .map(|i| {
                vec![
                    json!(i.id),
                    json!(i.account),
                    json!(i.account_description),
                    json!(i.expense_description),
                    json!(i.unit_price),
                    json!(i.qty),
                    json!(i.uom),
                    json!(i.ext_amount()),
                    json!(i.schedule.to_string()),
                    serial(i.first),
                    i.last.map(serial).unwrap_or(Json::Null),
                ]
            })
            .collect(),
    }
}

fn actuals_table(actuals: &[Transaction]) -> Table {
    Table {
        name: "tblActuals".into(),
        sheet: "Actuals".into(),
        origin: "A1".into(),
        columns: ["Date", "Account", "Description", "Amount"].map(String::from).to_vec(),
        rows: actuals
            .iter()
            .map(|t| vec![serial(t.date), json!(t.account), json!(t.description), json!(t.amount)])
            .collect(),
    }
}

/// Sheet, cell, formula, and optional name for the spilled result.
const FORMULAS: &[(&str, &str, &str, Option<&str>)] = &[
    ("ItemSchedule", "F1", "=BXD.CreateStartDatesλ(Start, End, \"D\")", Some("Dates")),
    ("ItemSchedule", "A3", "=tblBI[[ID]:[Expense Description]]", None),
    ("ItemSchedule", "E2", "=SUM(ItemSchedule)", None),
    ("ItemSchedule", "E3", "=BXR.SumRowsλ(ItemSchedule)", None),
    ("ItemSchedule", "F2", "=BXR.SumColumnsλ(ItemSchedule)", None),
    (
        "ItemSchedule",
        "F3",
        "=BXD.IsOccurrenceDateλ(Dates, tblBI[First Date], tblBI[Last Date], tblBI[Schedule]) * tblBI[Ext.Amt.]",
        Some("ItemSchedule"),
    ),
    ("ItemsByPrd", "F1", "=BXD.CreateStartDatesλ(Start, End, Interval)", Some("Periods")),
    ("ItemsByPrd", "F2", "=BXD.CreateEndDatesλ(Periods, MAX(Dates))", Some("PeriodEnds")),
    ("ItemsByPrd", "A3", "=tblBI[[ID]:[Expense Description]]", None),
    ("ItemsByPrd", "E3", "=BXR.SumRowsλ(ItemSummary)", None),
    (
        "ItemsByPrd",
        "F3",
        "=MAKEARRAY(ROWS(ItemSchedule), COLUMNS(Periods), LAMBDA(r, c, \
         SUM(INDEX(ItemSchedule, r, 0) * BXD.IsBetweenλ(Dates, INDEX(Periods, 1, c), INDEX(PeriodEnds, 1, c)))))",
        Some("ItemSummary"),
    ),
    ("BudgetByAcctPrd", "D1", "=BXD.PeriodLabelλ(Periods, Interval)", Some("PeriodLabels")),
    ("BudgetByAcctPrd", "A3", "=SORT(UNIQUE(tblBI[Account]))", Some("Accounts")),
    ("BudgetByAcctPrd", "B3", "=INDEX(tblBI[Account Description], XMATCH(Accounts, tblBI[Account]))", Some("AccountLabels")),
    ("BudgetByAcctPrd", "C3", "=BXR.SumRowsλ(BudgetSummary)", None),
    ("BudgetByAcctPrd", "D3", "=BXR.SumGroupsλ(tblBI[Account], ItemSummary)", Some("BudgetSummary")),
    ("ActualsByAcctPrd", "D1", "=PeriodLabels", None),
    ("ActualsByAcctPrd", "A3", "=Accounts", None),
    ("ActualsByAcctPrd", "C3", "=BXR.SumRowsλ(ActualsSummary)", None),
    (
        "ActualsByAcctPrd",
        "D3",
        "=BXR.SumGroupsAndPeriodsλ(tblActuals[Account], tblActuals[Date], tblActuals[Amount], Periods, PeriodEnds)",
        Some("ActualsSummary"),
    ),
    ("BalancesByAcctPrd", "D1", "=PeriodLabels", None),
    ("BalancesByAcctPrd", "A3", "=Accounts", None),
    ("BalancesByAcctPrd", "C3", "=BXR.SumRowsλ(BalancesSummary)", None),
    ("BalancesByAcctPrd", "D3", "=BudgetSummary - ActualsSummary", Some("BalancesSummary")),
    (
        "Rpt Summary",
        "A1",
        "=BXR.ReportGroupSummaryλ(Accounts, AccountLabels, BudgetSummary, ActualsSummary, PeriodLabels)",
        None,
    ),
    (
        "Rpt Detail",
        "A1",
        "=BXR.ReportGroupDetailOffsetλ(tblBI[Account], tblBI[Expense Description], ItemSummary, ActualsSummary, PeriodLabels)",
        None,
    ),
];

const TOTALS: &[(&str, &str)] = &[
    ("GrandTotal", "=SUM(ItemSchedule)"),
    ("ItemTotal", "=SUM(ItemSummary)"),
    ("BudgetTotal", "=SUM(BudgetSummary)"),
    ("ActualsTotal", "=SUM(ActualsSummary)"),
    ("BalanceTotal", "=SUM(BalancesSummary)"),
];

fn quoted(sheet: &str) -> String {
    if sheet.contains(' ') {
        format!("'{sheet}'")
    } else {
        sheet.to_string()
    }
}

/// Builds the demo workbook from the given items and expenditures, with
/// both shipped modules imported.
pub fn budget_workbook(items: &[BudgetItem], actuals: &[Transaction]) -> Result<Workbook, RegistryError> {
    let mut wb = Workbook::default();
    wb.set_literal("Inputs", "A1", "Name");
    wb.set_literal("Inputs", "B1", "Value");
    wb.set_literal("Inputs", "A2", "Start");
    wb.set_literal("Inputs", "B2", serial(fiscal_start()));
    wb.set_literal("Inputs", "A3", "End");
    wb.set_literal("Inputs", "A4", "Interval");
    wb.set_literal("Inputs", "B4", "Months");
    wb.define_name("Start", "=Inputs!$B$2");
    wb.define_name("End", "=Inputs!$B$3");
    wb.define_name("Interval", "=Inputs!$B$4");
    wb.tables.push(items_table(items));
    wb.sheet_mut("Actuals");
    wb.tables.push(actuals_table(actuals));
    for (sheet, addr, formula, name) in FORMULAS {
        wb.set_formula(sheet, addr, formula);
        if let Some(name) = name {
            let absolute = addr.find(|c: char| c.is_ascii_digit()).map(|i| format!("${}${}", &addr[..i], &addr[i..]));
            wb.define_name(name, &format!("={}!{}#", quoted(sheet), absolute.unwrap_or_default()));
        }
    }
    for (name, formula) in TOTALS {
        wb.define_name(name, formula);
    }
    with_stdlib(&wb)
}

pub fn demo_workbook() -> Workbook {
    let items = budget_items();
    let actuals = synthetic_actuals(&items, FIXTURE_SEED, FIXTURE_TRANSACTIONS);
    budget_workbook(&items, &actuals).expect("demo workbook assembles")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{Scalar, Value};
    use crate::workbook::Model;

    fn total(m: &Model, c: &crate::workbook::Computed, name: &str) -> f64 {
        match m.name_value(c, name) {
            Some(Value::Scalar(Scalar::Number(n))) => n,
            other => panic!("{name}: {other:?}"),
        }
    }

    #[test]
    fn demo_recalculates_cleanly() {
        let wb = demo_workbook();
        let m = Model::new(&wb).unwrap();
        let c = m.recalculate();
        assert!(c.error_cells().is_empty(), "{:?}", &c.error_cells()[..c.error_cells().len().min(5)]);
        let grand = total(&m, &c, "GrandTotal");
        for name in ["ItemTotal", "BudgetTotal"] {
            let t = total(&m, &c, name);
            assert!((t - grand).abs() <= 1e-9 * grand.abs(), "{name} {t} vs {grand}");
        }
        let actual = total(&m, &c, "ActualsTotal");
        let expected: f64 = synthetic_actuals(&budget_items(), FIXTURE_SEED, FIXTURE_TRANSACTIONS).iter().map(|t| t.amount).sum();
        assert!((actual - expected).abs() < 1e-6);
        assert!((total(&m, &c, "BalanceTotal") - (grand - actual)).abs() < 1e-6);
    }

    #[test]
    fn actuals_cover_every_account() {
        let items = budget_items();
        let tx = synthetic_actuals(&items, 7, 3);
        assert_eq!(tx.len(), 11);
        assert!(tx.iter().all(|t| t.date >= fiscal_start() && t.date <= fiscal_end()));
        assert_eq!(tx, synthetic_actuals(&items, 7, 3));
    }
}
