//! A workbook compiled for evaluation: formulas parsed, names and tables
//! indexed, module scopes built.

use std::collections::HashMap;
use std::sync::Arc;

use crate::eval::{invoke_closure, Env, ModuleScope, Scalar, Value};
use crate::lang::{
    column_letters, fold_name, parse_address, parse_formula, parse_module, Expr, Module,
    ModuleError, ParseError,
};

use super::recalc::{Computed, View};
use super::schema::{literal_scalar, CellInput, Workbook};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub sheet: usize,
    pub row: u32,
    pub col: u32,
}

impl CellKey {
    pub fn new(sheet: usize, row: u32, col: u32) -> CellKey {
        CellKey { sheet, row, col }
    }
}

/// A rectangle of cells on one sheet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub sheet: usize,
    pub row: u32,
    pub col: u32,
    pub rows: u32,
    pub cols: u32,
}

impl Rect {
    pub fn contains(&self, key: CellKey) -> bool {
        key.sheet == self.sheet
            && key.row >= self.row
            && key.row < self.row + self.rows
            && key.col >= self.col
            && key.col < self.col + self.cols
    }

    pub fn keys(&self) -> impl Iterator<Item = CellKey> + '_ {
        (self.row..self.row + self.rows)
            .flat_map(move |r| (self.col..self.col + self.cols).map(move |c| CellKey::new(self.sheet, r, c)))
    }
}

#[derive(Debug, Clone)]
pub struct Formula {
    pub text: String,
    pub expr: Result<Arc<Expr>, ParseError>,
}

impl Formula {
    fn parse(text: &str) -> Formula {
        Formula {
            text: text.to_string(),
            expr: parse_formula(text).map(Arc::new),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Content {
    Literal(Scalar),
    Formula(Formula),
}

#[derive(Debug)]
pub struct SheetData {
    pub name: String,
    /// Keyed by (row, col), both zero-based.
    pub cells: HashMap<(u32, u32), Content>,
}

#[derive(Debug)]
pub struct TableData {
    pub name: String,
    pub sheet: usize,
    pub row: u32,
    pub col: u32,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Scalar>>,
}

impl TableData {
    /// Header row plus data rows.
    pub fn region(&self) -> Rect {
        Rect {
            sheet: self.sheet,
            row: self.row,
            col: self.col,
            rows: self.rows.len() as u32 + 1,
            cols: self.columns.len() as u32,
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.eq_ignore_ascii_case(name.trim()))
    }

    fn cell(&self, key: CellKey) -> Option<Scalar> {
        if !self.region().contains(key) {
            return None;
        }
        let c = (key.col - self.col) as usize;
        if key.row == self.row {
            return Some(Scalar::text(self.columns[c].as_str()));
        }
        let r = (key.row - self.row - 1) as usize;
        Some(self.rows[r].get(c).cloned().unwrap_or(Scalar::Blank))
    }
}

#[derive(Debug, Clone)]
pub enum NameEntry {
    Formula { display: String, formula: Formula },
    Component { display: String, scope: Arc<ModuleScope>, definition: String },
}

impl NameEntry {
    pub fn display(&self) -> &str {
        match self {
            NameEntry::Formula { display, .. } | NameEntry::Component { display, .. } => display,
        }
    }
}

#[derive(Debug)]
pub struct LoadedModule {
    pub prefix: String,
    pub module: Module,
    pub scope: Arc<ModuleScope>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("duplicate sheet name {0}")]
    DuplicateSheet(String),
    #[error("invalid cell address {address} on sheet {sheet}")]
    BadAddress { sheet: String, address: String },
    #[error("duplicate name {0}")]
    DuplicateName(String),
    #[error("table {table} refers to unknown sheet {sheet}")]
    UnknownSheet { table: String, sheet: String },
    #[error("tables {0} and {1} overlap")]
    TableOverlap(String, String),
    #[error("module {prefix} does not parse: {error}")]
    Module { prefix: String, error: ModuleError },
}

#[derive(Debug)]
pub struct Model {
    pub(crate) sheets: Vec<SheetData>,
    sheet_index: HashMap<String, usize>,
    pub(crate) names: HashMap<String, NameEntry>,
    pub(crate) tables: Vec<TableData>,
    table_index: HashMap<String, usize>,
    pub(crate) modules: Vec<LoadedModule>,
    pub(crate) limit: usize,
}

fn overlaps(a: &Rect, b: &Rect) -> bool {
    a.sheet == b.sheet
        && a.row < b.row + b.rows
        && b.row < a.row + a.rows
        && a.col < b.col + b.cols
        && b.col < a.col + a.cols
}

impl Model {
    pub fn new(wb: &Workbook) -> Result<Model, ModelError> {
        let mut sheets = Vec::new();
        let mut sheet_index = HashMap::new();
        for sheet in &wb.sheets {
            let key = fold_name(&sheet.name);
            if sheet_index.insert(key, sheets.len()).is_some() {
                return Err(ModelError::DuplicateSheet(sheet.name.clone()));
            }
            let mut cells = HashMap::new();
            for (addr, input) in &sheet.cells {
                let cell = parse_address(addr).ok_or_else(|| ModelError::BadAddress {
                    sheet: sheet.name.clone(),
                    address: addr.clone(),
                })?;
                let content = match input {
                    CellInput::Formula { f } => Content::Formula(Formula::parse(f)),
                    CellInput::Literal { v } => Content::Literal(literal_scalar(v)),
                };
                cells.insert((cell.row, cell.col), content);
            }
            sheets.push(SheetData {
                name: sheet.name.clone(),
                cells,
            });
        }

        let mut model = Model {
            sheets,
            sheet_index,
            names: HashMap::new(),
            tables: Vec::new(),
            table_index: HashMap::new(),
            modules: Vec::new(),
            limit: wb.settings.recursion_limit,
        };

        for table in &wb.tables {
            let sheet = model.sheet_id(&table.sheet).ok_or_else(|| ModelError::UnknownSheet {
                table: table.name.clone(),
                sheet: table.sheet.clone(),
            })?;
            let origin = parse_address(&table.origin).ok_or_else(|| ModelError::BadAddress {
                sheet: table.sheet.clone(),
                address: table.origin.clone(),
            })?;
            let data = TableData {
                name: table.name.clone(),
                sheet,
                row: origin.row,
                col: origin.col,
                columns: table.columns.clone(),
                rows: table
                    .rows
                    .iter()
                    .map(|r| r.iter().map(literal_scalar).collect())
                    .collect(),
            };
            for other in &model.tables {
                if overlaps(&other.region(), &data.region()) {
                    return Err(ModelError::TableOverlap(other.name.clone(), data.name.clone()));
                }
            }
            let key = fold_name(&table.name);
            if model.table_index.insert(key, model.tables.len()).is_some() {
                return Err(ModelError::DuplicateName(table.name.clone()));
            }
            model.tables.push(data);
        }

        for name in &wb.names {
            let entry = NameEntry::Formula {
                display: name.name.clone(),
                formula: Formula::parse(&name.refers_to),
            };
            model.add_name(&name.name, entry)?;
        }

        for record in &wb.modules {
            let module = parse_module(&record.text).map_err(|error| ModelError::Module {
                prefix: record.prefix.clone(),
                error,
            })?;
            let scope = ModuleScope::new(
                &record.prefix,
                module
                    .definitions
                    .iter()
                    .map(|d| (d.name.clone(), d.lambda.clone())),
            );
            for def in &module.definitions {
                let display = format!("{}.{}", record.prefix, def.name);
                let entry = NameEntry::Component {
                    display: display.clone(),
                    scope: scope.clone(),
                    definition: def.name.clone(),
                };
                model.add_name(&display, entry)?;
            }
            model.modules.push(LoadedModule {
                prefix: record.prefix.clone(),
                module,
                scope,
            });
        }
        Ok(model)
    }

    fn add_name(&mut self, name: &str, entry: NameEntry) -> Result<(), ModelError> {
        let key = fold_name(name);
        if self.names.contains_key(&key) || self.table_index.contains_key(&key) {
            return Err(ModelError::DuplicateName(name.to_string()));
        }
        self.names.insert(key, entry);
        Ok(())
    }

    pub fn sheet_id(&self, name: &str) -> Option<usize> {
        self.sheet_index.get(&fold_name(name)).copied()
    }

    pub fn sheet_name(&self, sheet: usize) -> &str {
        &self.sheets[sheet].name
    }

    pub fn sheet_count(&self) -> usize {
        self.sheets.len()
    }

    pub fn recursion_limit(&self) -> usize {
        self.limit
    }

    pub fn content(&self, key: CellKey) -> Option<&Content> {
        self.sheets.get(key.sheet)?.cells.get(&(key.row, key.col))
    }

    pub fn table(&self, name: &str) -> Option<&TableData> {
        self.table_index.get(&fold_name(name)).map(|&i| &self.tables[i])
    }

    pub(crate) fn table_cell(&self, key: CellKey) -> Option<Scalar> {
        self.tables.iter().find_map(|t| t.cell(key))
    }

    pub fn name(&self, name: &str) -> Option<&NameEntry> {
        self.names.get(&fold_name(name))
    }

    pub fn modules(&self) -> &[LoadedModule] {
        &self.modules
    }

    /// All formula cells in a deterministic order.
    pub fn formula_cells(&self) -> Vec<CellKey> {
        let mut keys: Vec<CellKey> = self
            .sheets
            .iter()
            .enumerate()
            .flat_map(|(s, sheet)| {
                sheet.cells.iter().filter_map(move |(&(row, col), content)| {
                    matches!(content, Content::Formula(_)).then_some(CellKey::new(s, row, col))
                })
            })
            .collect();
        keys.sort();
        keys
    }

    /// `Sheet!A1`, quoting the sheet name when it is not a plain identifier.
    pub fn address(&self, key: CellKey) -> String {
        let name = &self.sheets[key.sheet].name;
        let plain = name.chars().all(|c| c.is_alphanumeric() || c == '_')
            && name.chars().next().is_some_and(|c| c.is_alphabetic());
        let sheet = if plain {
            name.clone()
        } else {
            format!("'{}'", name.replace('\'', "''"))
        };
        format!("{}!{}{}", sheet, column_letters(key.col), key.row + 1)
    }

    /// Evaluates formula text against computed workbook state. Unqualified
    /// references resolve on `sheet` (the first sheet when `None`).
    pub fn eval_formula(&self, computed: &Computed, sheet: Option<&str>, text: &str) -> Result<Value, ParseError> {
        let expr = parse_formula(text)?;
        let sheet = sheet.and_then(|s| self.sheet_id(s)).unwrap_or(0);
        Ok(self.eval_expr(computed, sheet, &expr))
    }

    pub fn eval_expr(&self, computed: &Computed, sheet: usize, expr: &Expr) -> Value {
        let view = View::settled(self, computed, sheet);
        crate::eval::evaluate(expr, &Env::new(), &view)
    }

    /// The computed value of a defined or imported name.
    pub fn name_value(&self, computed: &Computed, name: &str) -> Option<Value> {
        let view = View::settled(self, computed, 0);
        crate::eval::Host::name(&view, &fold_name(name))
    }

    /// Invokes the function bound to a workbook name. `None` arguments are
    /// omitted.
    pub fn call(&self, computed: &Computed, name: &str, args: Vec<Option<Value>>) -> Value {
        match self.name_value(computed, name) {
            Some(Value::Closure(c)) => {
                let view = View::settled(self, computed, 0);
                invoke_closure(&c, args, &view)
            }
            Some(Value::Scalar(Scalar::Error(e))) => Value::error(e),
            Some(_) => Value::error(crate::lang::ErrorCode::Calc),
            None => Value::error(crate::lang::ErrorCode::Name),
        }
    }
}
