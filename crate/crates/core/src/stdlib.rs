//! The shipped component modules: BXD (dates and scheduling) and BXR
//! (reporting).

use crate::lang::{fold_name, parse_module, tokenize, Module, TokenKind};
use crate::registry::{import_module, sha256_hex, RegistryError};
use crate::workbook::{ModuleSource, Workbook};

pub const BXD_SOURCE: &str = include_str!("../modules/bxd.bxl");
pub const BXR_SOURCE: &str = include_str!("../modules/bxr.bxl");

/// `(suggested prefix, file name, source)` for each shipped module.
pub const MODULES: [(&str, &str, &str); 2] = [("BXD", "bxd.bxl", BXD_SOURCE), ("BXR", "bxr.bxl", BXR_SOURCE)];

/// Source of a shipped module by suggested prefix or file name.
pub fn source(which: &str) -> Option<&'static str> {
    MODULES
        .iter()
        .find(|(p, f, _)| p.eq_ignore_ascii_case(which) || f.eq_ignore_ascii_case(which))
        .map(|(_, _, s)| *s)
}

pub fn bxd() -> Module {
    parse_module(BXD_SOURCE).expect("bxd.bxl parses")
}

pub fn bxr() -> Module {
    parse_module(BXR_SOURCE).expect("bxr.bxl parses")
}

pub fn builtin_source(file: &str, text: &str) -> ModuleSource {
    ModuleSource {
        locator: format!("builtin:{file}"),
        sha256: sha256_hex(text),
        retrieved_at: "1970-01-01T00:00:00Z".into(),
    }
}

/// Imports both shipped modules under their suggested prefixes.
pub fn with_stdlib(wb: &Workbook) -> Result<Workbook, RegistryError> {
    let mut out = wb.clone();
    for (prefix, file, text) in MODULES {
        out = import_module(&out, text, builtin_source(file, text), prefix)?;
    }
    Ok(out)
}

/// Rewrites unqualified uses of `module`'s component names in `formula` as
/// `prefix.Name`. Text literals are left alone.
pub fn qualify(formula: &str, module: &Module, prefix: &str) -> String {
    let names: Vec<String> = module.definitions.iter().map(|d| fold_name(&d.name)).collect();
    let Ok(tokens) = tokenize(formula) else {
        return formula.to_string();
    };
    let mut out = String::with_capacity(formula.len() + 16);
    let mut at = 0;
    for t in tokens {
        if t.kind == TokenKind::Ident && names.contains(&fold_name(&t.lexeme)) {
            out.push_str(&formula[at..t.span.start]);
            out.push_str(prefix);
            out.push('.');
            at = t.span.start;
        }
    }
    out.push_str(&formula[at..]);
    out
}
