//! On-disk workbook format (`.wbk.json`).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eval::{Scalar, DEFAULT_RECURSION_LIMIT};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Workbook {
    #[serde(default)]
    pub sheets: Vec<Sheet>,
    #[serde(default)]
    pub names: Vec<DefinedName>,
    #[serde(default)]
    pub tables: Vec<Table>,
    /// Imported component modules, each with its full source text.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modules: Vec<ImportRecord>,
    #[serde(default)]
    pub settings: Settings,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sheet {
    pub name: String,
    #[serde(default)]
    pub cells: BTreeMap<String, CellInput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellInput {
    Formula { f: String },
    Literal { v: serde_json::Value },
}

impl CellInput {
    pub fn formula(text: impl Into<String>) -> CellInput {
        CellInput::Formula { f: text.into() }
    }

    pub fn literal(v: impl Into<serde_json::Value>) -> CellInput {
        CellInput::Literal { v: v.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefinedName {
    pub name: String,
    pub refers_to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub sheet: String,
    /// Address of the header row's first cell; data rows follow below.
    pub origin: String,
    pub columns: Vec<String>,
    #[serde(default)]
    pub rows: Vec<Vec<serde_json::Value>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    #[serde(default = "default_limit")]
    pub recursion_limit: usize,
}

fn default_limit() -> usize {
    DEFAULT_RECURSION_LIMIT
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            recursion_limit: DEFAULT_RECURSION_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleSource {
    pub locator: String,
    /// Lower-case hex SHA-256 of the source text.
    pub sha256: String,
    pub retrieved_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportRecord {
    pub prefix: String,
    pub version: String,
    pub source: ModuleSource,
    /// Registered names, each `prefix.definition`.
    pub names: Vec<String>,
    pub text: String,
}

#[derive(Debug, thiserror::Error)]
pub enum WorkbookIoError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("invalid workbook JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Workbook {
    pub fn from_json(text: &str) -> Result<Workbook, WorkbookIoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("workbook serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Workbook, WorkbookIoError> {
        let text = std::fs::read_to_string(path).map_err(|source| WorkbookIoError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Workbook::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), WorkbookIoError> {
        std::fs::write(path, self.to_json()).map_err(|source| WorkbookIoError::Write {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn sheet_mut(&mut self, name: &str) -> &mut Sheet {
        if let Some(i) = self.sheets.iter().position(|s| s.name.eq_ignore_ascii_case(name)) {
            return &mut self.sheets[i];
        }
        self.sheets.push(Sheet {
            name: name.to_string(),
            cells: BTreeMap::new(),
        });
        self.sheets.last_mut().expect("just pushed")
    }

    pub fn set_formula(&mut self, sheet: &str, addr: &str, formula: &str) {
        self.sheet_mut(sheet)
            .cells
            .insert(addr.to_string(), CellInput::formula(formula));
    }

    pub fn set_literal(&mut self, sheet: &str, addr: &str, v: impl Into<serde_json::Value>) {
        self.sheet_mut(sheet)
            .cells
            .insert(addr.to_string(), CellInput::literal(v));
    }

    pub fn define_name(&mut self, name: &str, refers_to: &str) {
        self.names.push(DefinedName {
            name: name.to_string(),
            refers_to: refers_to.to_string(),
        });
    }

    pub fn module(&self, prefix: &str) -> Option<&ImportRecord> {
        self.modules.iter().find(|m| m.prefix.eq_ignore_ascii_case(prefix))
    }
}

/// JSON literal to scalar: null is Blank; strings stay text.
pub fn literal_scalar(v: &serde_json::Value) -> Scalar {
    match v {
        serde_json::Value::Null => Scalar::Blank,
        serde_json::Value::Bool(b) => Scalar::Bool(*b),
        serde_json::Value::Number(n) => Scalar::num(n.as_f64().unwrap_or(f64::NAN)),
        serde_json::Value::String(s) => Scalar::text(s.as_str()),
        _ => Scalar::Error(crate::lang::ErrorCode::Value),
    }
}
