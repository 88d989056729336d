use std::path::PathBuf;

use assert_cmd::Command;
use predicates::prelude::*;

fn bxl() -> Command {
    Command::cargo_bin("bxl").unwrap()
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn module(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/modules").join(name)
}

fn stdout(cmd: &mut Command) -> String {
    String::from_utf8(cmd.output().unwrap().stdout).unwrap()
}

/// Sum of every item's FY2024 occurrences times its amount, worked out by
/// hand from the budget items table.
const GRAND_TOTAL: f64 = 466_533.48;

#[test]
fn lint_shipped_modules_pass() {
    for m in ["bxd.bxl", "bxr.bxl"] {
        bxl().arg("lint").arg(module(m)).assert().code(0).stdout(predicate::str::contains("compliant (0 findings)"));
    }
}

#[test]
fn lint_flags_grid_references() {
    let out = bxl().arg("lint").arg(fixture("table1_row3.bxl")).assert().code(1);
    let text = String::from_utf8(out.get_output().stdout.clone()).unwrap();
    let rules: Vec<&str> = text.lines().filter_map(|l| l.split_whitespace().next()).filter(|w| w.starts_with('R')).collect();
    assert_eq!(rules, vec!["R1", "R1"]);
    assert!(text.contains("non-compliant"));
    bxl().arg("lint").arg(fixture("table1_row2.bxl")).assert().code(0);
    bxl().args(["lint", "--rules", "R4,R5"]).arg(fixture("table1_row3.bxl")).assert().code(0);
}

#[test]
fn lint_json_and_usage_errors() {
    let out = stdout(bxl().args(["lint", "--format", "json"]).arg(fixture("table1_row3.bxl")));
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["verdict"], "non-compliant");
    assert_eq!(doc["findings"][0]["fragment"], "A2");
    bxl().args(["lint", "no/such/file.bxl"]).assert().code(2);
    bxl().args(["lint", "--rules", "R9"]).arg(fixture("table1_row2.bxl")).assert().code(2);
}

#[test]
fn lint_cell_formula_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cell.bxl");
    std::fs::write(&path, "=LAMBDA(Parm1,Parm2, A2 + B2)(A2,B2)\n").unwrap();
    bxl().arg("lint").arg(&path).assert().code(1).stdout(predicate::str::contains("R1"));
    std::fs::write(&path, "=LAMBDA(Parm1,Param2, Parm1 + Param2)(A2,B2)\n").unwrap();
    bxl().arg("lint").arg(&path).assert().code(0);
}

#[test]
fn eval_prints_values() {
    bxl().args(["eval", "=1+2"]).assert().code(0).stdout("3\n");
    bxl().args(["eval", "={1,2;3,4}"]).assert().code(0).stdout("1\t2\n3\t4\n");
    bxl().args(["eval", "=SumColumnsλ({1,2;3,4})"]).assert().code(0).stdout("#NAME?\n");
    bxl().args(["eval", "=1+"]).assert().code(2);
}

#[test]
fn eval_against_demo_workbook() {
    let out = stdout(bxl().args(["eval", "=BXD.Aboutλ()", "--workbook"]).arg(fixture("demo.wbk.json")));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4 + 11);
    assert_eq!(lines[4], "Aboutλ\tProduces this table");
    let out = stdout(bxl().args(["eval", "=SUM(ItemSchedule)", "--workbook"]).arg(fixture("demo.wbk.json")));
    let total: f64 = out.trim().parse().unwrap();
    assert!((total - GRAND_TOTAL).abs() < 1e-6);
}

#[test]
fn import_collide_and_update() {
    let dir = tempfile::tempdir().unwrap();
    let wb = dir.path().join("book.wbk.json");
    std::fs::write(&wb, "{}").unwrap();
    let cache = dir.path().join("cache");
    let out = bxl()
        .args(["import", "--in-place", "--prefix", "BXD", "--cache"])
        .arg(&cache)
        .arg("--workbook")
        .arg(&wb)
        .arg(module("bxd.bxl"))
        .assert()
        .code(0);
    let names = String::from_utf8(out.get_output().stdout.clone()).unwrap();
    assert_eq!(names.lines().count(), 11);
    assert!(names.contains("BXD.Periodsλ"));
    assert!(cache.join("index.json").exists());
    bxl().args(["import", "--prefix", "bxd", "--workbook"]).arg(&wb).arg(module("bxd.bxl")).assert().code(1);

    let original = std::fs::read_to_string(module("bxd.bxl")).unwrap();
    let appended = original.replace("[Value], [Lower], [Upper],", "[Value], [Lower], [Upper], [Inclusive],");
    assert_ne!(appended, original);
    let v2 = dir.path().join("bxd_v2.bxl");
    std::fs::write(&v2, &appended).unwrap();
    bxl().args(["import", "--in-place", "--update", "--strict", "--prefix", "BXD", "--workbook"]).arg(&wb).arg(&v2).assert().code(0);

    let renamed = appended.replace("[Value], [Lower], [Upper], [Inclusive],", "[Number], [Lower], [Upper], [Inclusive],");
    let v3 = dir.path().join("bxd_v3.bxl");
    std::fs::write(&v3, renamed).unwrap();
    bxl()
        .args(["import", "--in-place", "--update", "--strict", "--prefix", "BXD", "--workbook"])
        .arg(&wb)
        .arg(&v3)
        .assert()
        .code(1)
        .stderr(predicate::str::contains("R6"));
    bxl().args(["eval", "=BXD.IsBetweenλ(5, 1, 10)", "--workbook"]).arg(&wb).assert().stdout("TRUE\n");
}

#[test]
fn import_writes_a_new_file_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let wb = dir.path().join("book.wbk.json");
    std::fs::write(&wb, "{}").unwrap();
    bxl().args(["import", "--prefix", "BXR", "--workbook"]).arg(&wb).arg(module("bxr.bxl")).assert().code(0);
    assert_eq!(std::fs::read_to_string(&wb).unwrap(), "{}");
    let written = bxl_core::workbook::Workbook::load(&dir.path().join("book.imported.wbk.json")).unwrap();
    assert_eq!(written.module("BXR").unwrap().names.len(), 7);
    let chosen = dir.path().join("other.json");
    bxl().args(["import", "--prefix", "BXR", "--workbook"]).arg(&wb).arg("--out").arg(&chosen).arg(module("bxr.bxl")).assert().code(0);
    assert!(chosen.exists());
}

#[test]
fn import_missing_workbook_is_usage_error() {
    bxl().args(["import", "--prefix", "BXD", "--workbook", "no/such.wbk.json"]).arg(module("bxd.bxl")).assert().code(2);
}

#[test]
fn run_asserts_and_dumps() {
    let demo = fixture("demo.wbk.json");
    bxl()
        .arg("run")
        .arg(&demo)
        .arg("--assert")
        .arg(format!("GrandTotal={GRAND_TOTAL}"))
        .arg("--assert")
        .arg(format!("BudgetTotal={GRAND_TOTAL}"))
        .assert()
        .code(0);
    bxl()
        .arg("run")
        .arg(&demo)
        .args(["--assert", "GrandTotal=1"])
        .assert()
        .code(1)
        .stdout(predicate::str::contains("expected 1").and(predicate::str::contains("466533.48")));
    let out = stdout(bxl().arg("run").arg(&demo).args(["--dump", "Rpt Summary"]));
    for label in ["Budgeted", "Less Expense", "Subtotal", "2023-Jul", "Total"] {
        assert!(out.contains(label), "{label}");
    }
    let out = stdout(bxl().arg("run").arg(&demo).args(["--dump", "Rpt Detail"]));
    for label in ["Budgeted Subtotal", "Less Spent", "Accounts Subtotal", "Cumulative Total"] {
        assert!(out.contains(label), "{label}");
    }
}

#[test]
fn run_reports_error_cells() {
    let dir = tempfile::tempdir().unwrap();
    let wb = dir.path().join("err.wbk.json");
    std::fs::write(&wb, r#"{"sheets":[{"name":"S","cells":{"A1":{"f":"=1/0"}}}]}"#).unwrap();
    bxl().arg("run").arg(&wb).assert().code(1).stdout(predicate::str::contains("S!A1 #DIV/0!"));
    bxl().arg("run").arg(&wb).args(["--allow", "S!A1:A1"]).assert().code(0);
}

#[test]
fn about_lists_components() {
    let out = stdout(bxl().args(["about", "BXD"]));
    assert_eq!(out.lines().count(), 11);
    assert!(out.starts_with("Aboutλ\tProduces this table\n"));
    bxl().args(["about", "BXR", "--workbook"]).arg(fixture("demo.wbk.json")).assert().code(0).stdout(predicate::str::contains("ReportGroupSummaryλ"));
    bxl().args(["about", "ZZZ"]).assert().code(1);
}

/// The checked-in demo fixture is exactly what `bxl demo` writes.
#[test]
fn demo_fixture_is_current() {
    let out = stdout(bxl().arg("demo"));
    let golden = std::fs::read_to_string(fixture("demo.wbk.json")).unwrap();
    assert_eq!(out.trim_end(), golden.trim_end());
    assert_eq!(golden.trim_end(), bxl_core::budget::demo_workbook().to_json().trim_end());
}
