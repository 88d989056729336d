//! Fetching, caching and importing component modules under a prefix.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::lang::{fold_name, parse_module, Module, ModuleError};
use crate::lint::{check_version_compat, Finding};
use crate::workbook::{ImportRecord, ModuleSource, Workbook};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("module not found: {0}")]
    NotFound(String),
    #[error("timed out fetching {0}")]
    Timeout(String),
    #[error("fetching {locator} failed: {reason}")]
    Fetch { locator: String, reason: String },
    #[error("{0} is not valid UTF-8")]
    NotUtf8(String),
    #[error("module does not parse: {0}")]
    Parse(#[from] ModuleError),
    #[error("invalid prefix '{0}': expected a letter followed by letters, digits or underscores")]
    InvalidPrefix(String),
    #[error("import would collide with existing names: {}", .0.join(", "))]
    Collision(Vec<String>),
    #[error("no module is imported under prefix {0}")]
    NotImported(String),
    #[error("update refused: {} incompatible change(s)", .0.len())]
    Incompatible(Vec<Finding>),
    #[error("cache error at {path}: {reason}")]
    Cache { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fetched {
    pub text: String,
    pub source: ModuleSource,
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Reads a module from a plain path, a `file:` locator or an `https:` URL.
pub fn fetch(locator: &str) -> Result<Fetched, RegistryError> {
    fetch_with_timeout(locator, DEFAULT_TIMEOUT)
}

pub fn fetch_with_timeout(locator: &str, timeout: Duration) -> Result<Fetched, RegistryError> {
    let bytes = if locator.starts_with("https://") || locator.starts_with("http://") {
        fetch_http(locator, timeout)?
    } else {
        let path = locator.strip_prefix("file://").or_else(|| locator.strip_prefix("file:")).unwrap_or(locator);
        std::fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => RegistryError::NotFound(locator.to_string()),
            _ => RegistryError::Fetch {
                locator: locator.to_string(),
                reason: e.to_string(),
            },
        })?
    };
    let text = String::from_utf8(bytes).map_err(|_| RegistryError::NotUtf8(locator.to_string()))?;
    Ok(Fetched {
        source: ModuleSource {
            locator: locator.to_string(),
            sha256: sha256_hex(&text),
            retrieved_at: now(),
        },
        text,
    })
}

fn fetch_http(url: &str, timeout: Duration) -> Result<Vec<u8>, RegistryError> {
    let agent = ureq::AgentBuilder::new().timeout(timeout).build();
    let response = agent.get(url).call().map_err(|e| match e {
        ureq::Error::Status(404, _) => RegistryError::NotFound(url.to_string()),
        ureq::Error::Transport(t) if is_timeout(&t) => RegistryError::Timeout(url.to_string()),
        other => RegistryError::Fetch {
            locator: url.to_string(),
            reason: other.to_string(),
        },
    })?;
    let mut bytes = Vec::new();
    response
        .into_reader()
        .take(16 * 1024 * 1024)
        .read_to_end(&mut bytes)
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock => RegistryError::Timeout(url.to_string()),
            _ => RegistryError::Fetch {
                locator: url.to_string(),
                reason: e.to_string(),
            },
        })?;
    Ok(bytes)
}

fn is_timeout(t: &ureq::Transport) -> bool {
    let text = t.to_string().to_ascii_lowercase();
    text.contains("timed out") || text.contains("timeout")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub sha256: String,
    pub version: String,
    pub retrieved_at: String,
}

/// `<dir>/<sha256>.bxl` files plus `<dir>/index.json` keyed by locator.
#[derive(Debug, Clone)]
pub struct Cache {
    pub dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Cache {
        Cache { dir: dir.into() }
    }

    /// `BXL_CACHE`, else `~/.cache/bxl`.
    pub fn from_env() -> Cache {
        if let Some(dir) = std::env::var_os("BXL_CACHE").filter(|d| !d.is_empty()) {
            return Cache::new(dir);
        }
        let home = std::env::var_os("HOME").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
        Cache::new(home.join(".cache").join("bxl"))
    }

    fn err(&self, path: &Path, e: impl ToString) -> RegistryError {
        RegistryError::Cache {
            path: path.display().to_string(),
            reason: e.to_string(),
        }
    }

    pub fn index(&self) -> Result<BTreeMap<String, CacheEntry>, RegistryError> {
        let path = self.dir.join("index.json");
        match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| self.err(&path, e)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeMap::new()),
            Err(e) => Err(self.err(&path, e)),
        }
    }

    /// Writes through a temporary file so readers never see a partial file.
    fn write_atomic(&self, name: &str, contents: &str) -> Result<(), RegistryError> {
        std::fs::create_dir_all(&self.dir).map_err(|e| self.err(&self.dir, e))?;
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.{}.tmp", std::process::id()));
        std::fs::write(&tmp, contents).map_err(|e| self.err(&tmp, e))?;
        std::fs::rename(&tmp, &target).map_err(|e| self.err(&target, e))
    }

    pub fn store(&self, fetched: &Fetched, version: &str) -> Result<(), RegistryError> {
        self.write_atomic(&format!("{}.bxl", fetched.source.sha256), &fetched.text)?;
        let mut index = self.index()?;
        index.insert(
            fetched.source.locator.clone(),
            CacheEntry {
                sha256: fetched.source.sha256.clone(),
                version: version.to_string(),
                retrieved_at: fetched.source.retrieved_at.clone(),
            },
        );
        let text = serde_json::to_string_pretty(&index).expect("index serializes");
        self.write_atomic("index.json", &text)
    }

    /// Cached text for a locator, verified against its recorded hash.
    pub fn get(&self, locator: &str) -> Result<Option<Fetched>, RegistryError> {
        let Some(entry) = self.index()?.remove(locator) else {
            return Ok(None);
        };
        let path = self.dir.join(format!("{}.bxl", entry.sha256));
        let Ok(text) = std::fs::read_to_string(&path) else {
            return Ok(None);
        };
        if sha256_hex(&text) != entry.sha256 {
            return Ok(None);
        }
        Ok(Some(Fetched {
            text,
            source: ModuleSource {
                locator: locator.to_string(),
                sha256: entry.sha256,
                retrieved_at: entry.retrieved_at,
            },
        }))
    }

    /// Fetches and records the module in the cache.
    pub fn fetch(&self, locator: &str) -> Result<Fetched, RegistryError> {
        let fetched = fetch(locator)?;
        let version = parse_module(&fetched.text).map(|m| m.version).unwrap_or_default();
        self.store(&fetched, &version)?;
        Ok(fetched)
    }
}

/// A nonempty identifier without dots.
pub fn valid_prefix(prefix: &str) -> bool {
    let mut chars = prefix.chars();
    chars.next().is_some_and(|c| c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Every name the workbook already defines, folded.
fn taken_names(wb: &Workbook) -> BTreeSet<String> {
    let mut taken: BTreeSet<String> = wb.names.iter().map(|n| fold_name(&n.name)).collect();
    taken.extend(wb.tables.iter().map(|t| fold_name(&t.name)));
    taken.extend(wb.modules.iter().flat_map(|m| m.names.iter().map(|n| fold_name(n))));
    taken
}

/// Registers every definition as `prefix.name`. Nothing changes on error.
pub fn import_module(wb: &Workbook, text: &str, source: ModuleSource, prefix: &str) -> Result<Workbook, RegistryError> {
    if !valid_prefix(prefix) {
        return Err(RegistryError::InvalidPrefix(prefix.to_string()));
    }
    let module = parse_module(text)?;
    let names: Vec<String> = module.definitions.iter().map(|d| format!("{prefix}.{}", d.name)).collect();
    let taken = taken_names(wb);
    let prefix_taken = wb.module(prefix).map(|m| m.prefix.clone());
    let mut collisions: Vec<String> = names.iter().filter(|n| taken.contains(&fold_name(n))).cloned().collect();
    if collisions.is_empty() {
        if let Some(p) = prefix_taken {
            collisions.push(format!("prefix {p}"));
        }
    }
    if !collisions.is_empty() {
        return Err(RegistryError::Collision(collisions));
    }
    let mut out = wb.clone();
    out.modules.push(ImportRecord {
        prefix: prefix.to_string(),
        version: module.version.clone(),
        source,
        names,
        text: text.to_string(),
    });
    Ok(out)
}

pub fn remove_module(wb: &Workbook, prefix: &str) -> Result<Workbook, RegistryError> {
    let Some(i) = wb.modules.iter().position(|m| m.prefix.eq_ignore_ascii_case(prefix)) else {
        return Err(RegistryError::NotImported(prefix.to_string()));
    };
    let mut out = wb.clone();
    out.modules.remove(i);
    Ok(out)
}

/// Replaces the module under `prefix`, returning R6 findings. With `strict`
/// any finding refuses the update.
pub fn update_module(
    wb: &Workbook,
    prefix: &str,
    text: &str,
    source: ModuleSource,
    strict: bool,
) -> Result<(Workbook, Vec<Finding>), RegistryError> {
    let record = wb.module(prefix).ok_or_else(|| RegistryError::NotImported(prefix.to_string()))?;
    let old = parse_module(&record.text)?;
    let new = parse_module(text)?;
    let findings = check_version_compat(&old, &new);
    if strict && !findings.is_empty() {
        return Err(RegistryError::Incompatible(findings));
    }
    let prefix = record.prefix.clone();
    let position = wb.modules.iter().position(|m| m.prefix == prefix).expect("record exists");
    let removed = remove_module(wb, &prefix)?;
    let mut updated = import_module(&removed, text, source, &prefix)?;
    let record = updated.modules.pop().expect("just imported");
    updated.modules.insert(position, record);
    Ok((updated, findings))
}

/// One row per definition: name and description (blank when undocumented).
pub fn list_components(module: &Module) -> Vec<(String, String)> {
    module
        .definitions
        .iter()
        .map(|d| (d.name.clone(), d.doc.as_ref().map(|doc| doc.description.clone()).unwrap_or_default()))
        .collect()
}
