use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bxl_core::eval::{Scalar, Value};
use bxl_core::lang::{parse_address, parse_module};
use bxl_core::lint::{all_rules, lint_formula, lint_module, parse_rules, LintReport, Severity};
use bxl_core::registry::{fetch, import_module, list_components, update_module, Cache, Fetched, RegistryError};
use bxl_core::stdlib::with_stdlib;
use bxl_core::workbook::{CellKey, Computed, Model, Rect, Workbook};
use clap::{Parser, Subcommand, ValueEnum};

/// Formula engine, component linter and module manager for LAMBDA
/// component libraries.
#[derive(Parser)]
#[command(name = "bxl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check a module file (or a single `=` formula file) against the
    /// component rules.
    Lint {
        path: PathBuf,
        /// Comma-separated rule ids, e.g. R1,R3. Defaults to all rules.
        #[arg(long)]
        rules: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Treat warnings as failures.
        #[arg(long)]
        strict: bool,
    },
    /// Evaluate a formula, optionally against a recalculated workbook.
    Eval {
        formula: String,
        #[arg(long)]
        workbook: Option<PathBuf>,
        /// Sheet that unqualified references resolve on.
        #[arg(long)]
        sheet: Option<String>,
    },
    /// Import a module into a workbook under a prefix.
    Import {
        locator: String,
        #[arg(long)]
        prefix: String,
        #[arg(long)]
        workbook: PathBuf,
        /// Cache directory for fetched modules.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Replace the module already imported under the prefix.
        #[arg(long)]
        update: bool,
        /// Refuse an update that breaks existing callers.
        #[arg(long)]
        strict: bool,
        /// Overwrite the input workbook.
        #[arg(long, conflicts_with = "out")]
        in_place: bool,
        /// Where to write the result; defaults to `NAME.imported.EXT` next
        /// to the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recalculate a workbook, print sheets and check named totals.
    Run {
        workbook: PathBuf,
        /// Sheet whose computed grid is printed.
        #[arg(long)]
        dump: Vec<String>,
        /// `Name=number`; arrays compare by their sum.
        #[arg(long = "assert")]
        asserts: Vec<String>,
        /// `Sheet!A1:B2` range where error values are expected.
        #[arg(long)]
        allow: Vec<String>,
    },
    /// List the components of an imported module.
    About {
        prefix: String,
        /// Defaults to a workbook holding only the shipped modules.
        #[arg(long)]
        workbook: Option<PathBuf>,
    },
    /// Write the budget demo workbook.
    Demo {
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit status: 1 for a failed check, 2 for unusable input.
struct Failure(u8, String);

type Outcome = Result<u8, Failure>;

fn usage(msg: impl ToString) -> Failure {
    Failure(2, msg.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Lint {
            path,
            rules,
            format,
            strict,
        } => lint(&path, rules.as_deref(), format, strict),
        Command::Eval {
            formula,
            workbook,
            sheet,
        } => eval(&formula, workbook.as_deref(), sheet.as_deref()),
        Command::Import {
            locator,
            prefix,
            workbook,
            cache,
            update,
            strict,
            in_place,
            out,
        } => {
            let target = if in_place { workbook.clone() } else { out.unwrap_or_else(|| imported_path(&workbook)) };
            import(&locator, &prefix, &workbook, &target, cache, update, strict)
        }
        Command::Run {
            workbook,
            dump,
            asserts,
            allow,
        } => run(&workbook, &dump, &asserts, &allow),
        Command::About { prefix, workbook } => about(&prefix, workbook.as_deref()),
        Command::Demo { out } => demo(out.as_deref()),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("bxl: {msg}");
            ExitCode::from(code)
        }
    }
}

fn lint(path: &Path, rules: Option<&str>, format: Format, strict: bool) -> Outcome {
    let rules = match rules {
        Some(list) => parse_rules(list).map_err(usage)?,
        None => all_rules(),
    };
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let report = if text.trim_start().starts_with('=') {
        let findings = lint_formula(text.trim()).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let findings = findings.into_iter().filter(|f| rules.contains(&f.rule)).collect();
        LintReport::new(path.display().to_string(), findings)
    } else {
        let module = parse_module(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let mut report = lint_module(&module, &rules);
        if report.module.is_empty() {
            report.module = path.display().to_string();
        }
        report
    };
    match format {
        Format::Text => print!("{}", report.to_text()),
        Format::Json => println!("{}", report.to_json()),
    }
    let warned = strict && report.findings.iter().any(|f| f.severity() == Severity::Warning);
    Ok(if report.is_compliant() && !warned { 0 } else { 1 })
}

fn load(path: &Path) -> Result<Workbook, Failure> {
    Workbook::load(path).map_err(usage)
}

fn model(wb: &Workbook) -> Result<Model, Failure> {
    Model::new(wb).map_err(usage)
}

fn eval(formula: &str, workbook: Option<&Path>, sheet: Option<&str>) -> Outcome {
    let wb = match workbook {
        Some(path) => load(path)?,
        None => Workbook::default(),
    };
    let model = model(&wb)?;
    let computed = if workbook.is_some() { model.recalculate() } else { Computed::empty() };
    if let Some(s) = sheet {
        if model.sheet_id(s).is_none() {
            return Err(usage(format!("no sheet named {s}")));
        }
    }
    let value = model.eval_formula(&computed, sheet, formula).map_err(usage)?;
    println!("{value}");
    Ok(0)
}

fn registry_failure(e: RegistryError) -> Failure {
    let code = match e {
        RegistryError::Collision(_) | RegistryError::Incompatible(_) | RegistryError::NotImported(_) => 1,
        _ => 2,
    };
    let detail = match &e {
        RegistryError::Incompatible(findings) => findings
            .iter()
            .map(|f| format!("\n  {}  {}  {}", f.rule, f.definition, f.message))
            .collect::<String>(),
        _ => String::new(),
    };
    Failure(code, format!("{e}{detail}"))
}

/// `book.wbk.json` becomes `book.imported.wbk.json`.
fn imported_path(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let renamed = match name.split_once('.') {
        Some((stem, ext)) => format!("{stem}.imported.{ext}"),
        None => format!("{name}.imported"),
    };
    path.with_file_name(renamed)
}

fn import(
    locator: &str,
    prefix: &str,
    path: &Path,
    target: &Path,
    cache: Option<PathBuf>,
    update: bool,
    strict: bool,
) -> Outcome {
    let wb = load(path)?;
    let Fetched { text, source } = match cache {
        Some(dir) => Cache::new(dir).fetch(locator),
        None => fetch(locator),
    }
    .map_err(registry_failure)?;
    let wb = if update {
        let (wb, findings) = update_module(&wb, prefix, &text, source, strict).map_err(registry_failure)?;
        for f in &findings {
            println!("{}  {}  {}", f.rule, f.definition, f.message);
        }
        wb
    } else {
        import_module(&wb, &text, source, prefix).map_err(registry_failure)?
    };
    let record = wb.module(prefix).expect("module was just imported");
    for name in &record.names {
        println!("{name}");
    }
    wb.save(target).map_err(usage)?;
    if target != path {
        eprintln!("wrote {}", target.display());
    }
    Ok(0)
}

/// `Sheet!A1:B2`, `'My Sheet'!A1` or a single cell.
fn parse_range(model: &Model, text: &str) -> Result<Rect, Failure> {
    let bad = || usage(format!("bad range {text:?}"));
    let (sheet, cells) = text.rsplit_once('!').ok_or_else(bad)?;
    let sheet = model.sheet_id(sheet.trim_matches('\'')).ok_or_else(bad)?;
    let (a, b) = cells.split_once(':').unwrap_or((cells, cells));
    let (a, b) = (parse_address(a).ok_or_else(bad)?, parse_address(b).ok_or_else(bad)?);
    Ok(Rect {
        sheet,
        row: a.row.min(b.row),
        col: a.col.min(b.col),
        rows: a.row.abs_diff(b.row) + 1,
        cols: a.col.abs_diff(b.col) + 1,
    })
}

fn numeric_total(value: &Value) -> Option<f64> {
    match value {
        Value::Scalar(Scalar::Number(n)) => Some(*n),
        Value::Array(_) => {
            let mut sum = 0.0;
            let mut ok = true;
            value.for_each_cell(|s| match s {
                Scalar::Number(n) => sum += n,
                Scalar::Error(_) => ok = false,
                _ => {}
            });
            ok.then_some(sum)
        }
        _ => None,
    }
}

fn run(path: &Path, dumps: &[String], asserts: &[String], allow: &[String]) -> Outcome {
    let wb = load(path)?;
    let model = model(&wb)?;
    let computed = model.recalculate();
    for sheet in dumps {
        let id = model.sheet_id(sheet).ok_or_else(|| usage(format!("no sheet named {sheet}")))?;
        if let Some((_, grid)) = computed.sheet_grid(&model, id) {
            println!("{grid}");
        }
    }
    let allowed: Vec<Rect> = allow.iter().map(|r| parse_range(&model, r)).collect::<Result<_, _>>()?;
    let mut failed = false;
    for spec in asserts {
        let (name, want) = spec.split_once('=').ok_or_else(|| usage(format!("bad assertion {spec:?}")))?;
        let want: f64 = want.trim().parse().map_err(|_| usage(format!("bad number in {spec:?}")))?;
        let got = model
            .name_value(&computed, name.trim())
            .ok_or_else(|| Failure(1, format!("{name}: no such name")))?;
        match numeric_total(&got) {
            Some(n) if (n - want).abs() <= 1e-9 * want.abs().max(n.abs()) => println!("ok {name} = {}", Value::num(n)),
            Some(n) => {
                failed = true;
                println!("FAIL {name}: expected {want}, got {}", Value::num(n));
            }
            None => {
                failed = true;
                println!("FAIL {name}: expected {want}, got {got}");
            }
        }
    }
    let stray: Vec<(CellKey, _)> = computed
        .error_cells()
        .into_iter()
        .filter(|(k, _)| !allowed.iter().any(|r| r.contains(*k)))
        .collect();
    for (key, code) in &stray {
        println!("error {} {}", model.address(*key), code.as_str());
    }
    Ok(if failed || !stray.is_empty() { 1 } else { 0 })
}

fn about(prefix: &str, workbook: Option<&Path>) -> Outcome {
    let wb = match workbook {
        Some(path) => load(path)?,
        None => with_stdlib(&Workbook::default()).map_err(registry_failure)?,
    };
    let record = wb
        .module(prefix)
        .ok_or_else(|| Failure(1, format!("no module imported under prefix {prefix}")))?;
    let module = parse_module(&record.text).map_err(usage)?;
    for (name, description) in list_components(&module) {
        println!("{name}\t{description}");
    }
    Ok(0)
}

fn demo(out: Option<&Path>) -> Outcome {
    let wb = bxl_core::budget::demo_workbook();
    match out {
        Some(path) => wb.save(path).map_err(usage)?,
        None => println!("{}", wb.to_json()),
    }
    Ok(0)
}
