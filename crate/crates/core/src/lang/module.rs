//! Module files: a sequence of `name = LAMBDA(...);` definitions with
//! `//` and `/* */` comments.
//!
//! A definition's documentation comes from two places. Comments immediately
//! before the definition supply the description and the revision table
//! (`| date | author | note` rows). A `Help` binding in the lambda's top-level
//! LET, built as `TEXTSPLIT("label→value¶...", "→", "¶")`, supplies the
//! sections DESCRIPTION, VERSION, PARAMETERS, REQUISITES, RETURNS and
//! EXAMPLES. The comment description wins when both are present.

use std::collections::HashMap;

use chrono::NaiveDate;
use thiserror::Error;

use super::ast::*;
use super::lexer::{tokenize_with_comments, Token, TokenKind};
use super::parser::{ParseError, Parser};

#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub definitions: Vec<Definition>,
    pub version: String,
    pub header: ModuleHeader,
    pub source: String,
}

/// Fields of a leading comment that contains a `MODULE:` line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModuleHeader {
    pub name: Option<String>,
    pub description: Option<String>,
    pub version: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub name: String,
    pub lambda: LambdaExpr,
    pub doc: Option<DocBlock>,
    pub revisions: Vec<Revision>,
    /// From the definition name through the terminating `;`.
    pub span: Span,
    /// The lambda expression alone.
    pub body_span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Revision {
    pub date: String,
    pub author: String,
    pub note: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DocBlock {
    pub description: String,
    pub version: String,
    pub parameters: Vec<ParamDoc>,
    pub examples: Vec<Example>,
    pub requisites: Option<String>,
    pub returns: Option<String>,
    /// The raw help rows, label then value, when a Help binding was decoded.
    pub help_rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDoc {
    pub name: String,
    pub required: bool,
    pub constraint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub result: String,
    pub formula: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModuleError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("expected a definition name at offset {offset}, found '{found}'")]
    ExpectedDefinition { offset: usize, found: String },
    #[error("definition '{name}' at offset {offset} is missing '='")]
    MissingEquals { name: String, offset: usize },
    #[error("definition '{name}' is defined more than once (second at offset {offset})")]
    Duplicate { name: String, offset: usize },
    #[error("definition '{name}' at offset {offset} is not a LAMBDA")]
    NotLambda { name: String, offset: usize },
    #[error("definition '{name}' is not terminated by ';' (offset {offset})")]
    MissingSemicolon { name: String, offset: usize },
}

impl ModuleError {
    pub fn offset(&self) -> usize {
        match self {
            ModuleError::Parse(e) => e.offset(),
            ModuleError::ExpectedDefinition { offset, .. }
            | ModuleError::MissingEquals { offset, .. }
            | ModuleError::Duplicate { offset, .. }
            | ModuleError::NotLambda { offset, .. }
            | ModuleError::MissingSemicolon { offset, .. } => *offset,
        }
    }
}

impl Module {
    pub fn definition(&self, name: &str) -> Option<&Definition> {
        let key = fold_name(name);
        self.definitions.iter().find(|d| fold_name(&d.name) == key)
    }

    /// Source text of a definition, from its name through `;`.
    pub fn definition_source(&self, def: &Definition) -> &str {
        &self.source[def.span.start..def.span.end]
    }
}

pub fn parse_module(source: &str) -> Result<Module, ModuleError> {
    let all = tokenize_with_comments(source).map_err(ParseError::from)?;
    let (comments, tokens): (Vec<Token>, Vec<Token>) =
        all.into_iter().partition(|t| t.kind == TokenKind::Comment);

    let mut header = ModuleHeader::default();
    let mut header_span = None;
    if let Some(first) = comments.first() {
        if first.lexeme.contains("MODULE:") {
            header = parse_header(comment_text(&first.lexeme));
            header_span = Some(first.span);
        }
    }

    let mut definitions: Vec<Definition> = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    let mut pos = 0;
    let mut prev_end = 0;
    while pos < tokens.len() {
        let name_tok = &tokens[pos];
        if name_tok.kind != TokenKind::Ident {
            return Err(ModuleError::ExpectedDefinition {
                offset: name_tok.span.start,
                found: name_tok.lexeme.clone(),
            });
        }
        let name = name_tok.lexeme.clone();
        match tokens.get(pos + 1) {
            Some(t) if t.is_op("=") => {}
            _ => {
                return Err(ModuleError::MissingEquals {
                    name,
                    offset: name_tok.span.start,
                })
            }
        }
        let rest = &tokens[pos + 2..];
        let mut parser = Parser::new(rest, source.len());
        let expr = parser.expression()?;
        let consumed = parser.position();
        let end = match rest.get(consumed) {
            Some(t) if t.is_punct(";") => t.span.end,
            _ => {
                return Err(ModuleError::MissingSemicolon {
                    name,
                    offset: expr.span.end,
                })
            }
        };
        let ExprKind::Lambda(lambda) = expr.kind else {
            return Err(ModuleError::NotLambda {
                name,
                offset: expr.span.start,
            });
        };
        if seen.insert(fold_name(&name), ()).is_some() {
            return Err(ModuleError::Duplicate {
                name,
                offset: name_tok.span.start,
            });
        }

        let preceding: Vec<&str> = comments
            .iter()
            .filter(|c| c.span.start >= prev_end && c.span.end <= name_tok.span.start)
            .filter(|c| Some(c.span) != header_span)
            .map(|c| comment_text(&c.lexeme))
            .collect();
        let comment_doc = parse_doc_comments(&preceding);
        let help = help_rows(&lambda).map(doc_from_help);
        let doc = merge_doc(comment_doc.description, help);

        definitions.push(Definition {
            name,
            lambda,
            doc,
            revisions: comment_doc.revisions,
            span: Span::new(name_tok.span.start, end),
            body_span: expr.span,
        });
        prev_end = end;
        pos += 2 + consumed + 1;
    }

    let version = header
        .version
        .clone()
        .or_else(|| latest_revision(&definitions))
        .unwrap_or_default();
    Ok(Module {
        definitions,
        version,
        header,
        source: source.to_string(),
    })
}

fn comment_text(lexeme: &str) -> &str {
    if let Some(body) = lexeme.strip_prefix("//") {
        body
    } else {
        lexeme
            .strip_prefix("/*")
            .and_then(|b| b.strip_suffix("*/"))
            .unwrap_or(lexeme)
    }
}

fn clean_value(text: &str) -> String {
    text.trim()
        .trim_start_matches("/**")
        .trim_start_matches('*')
        .trim_end_matches("*/")
        .trim()
        .to_string()
}

fn parse_header(text: &str) -> ModuleHeader {
    let mut header = ModuleHeader::default();
    for line in text.lines() {
        let line = line.trim();
        if let Some(v) = line.strip_prefix("MODULE:") {
            header.name = Some(clean_value(v));
        } else if let Some(v) = line.strip_prefix("DESCRIPTION:") {
            header.description = Some(clean_value(v));
        } else if let Some(v) = line.strip_prefix("VERSION:") {
            header.version = Some(clean_value(v));
        }
    }
    header
}

#[derive(Default)]
struct CommentDoc {
    description: Option<String>,
    revisions: Vec<Revision>,
}

fn parse_doc_comments(comments: &[&str]) -> CommentDoc {
    let mut doc = CommentDoc::default();
    for text in comments {
        for line in text.lines() {
            let line = line.trim();
            if let Some(idx) = line.find("DESCRIPTION:") {
                let value = clean_value(&line[idx + "DESCRIPTION:".len()..]);
                if !value.is_empty() {
                    doc.description = Some(value);
                }
            } else if let Some(row) = line.strip_prefix('|') {
                let cells: Vec<&str> = row.split('|').map(str::trim).collect();
                if cells.iter().all(|c| c.chars().all(|ch| ch == '-')) {
                    continue;
                }
                let cell = |i: usize| cells.get(i).map_or(String::new(), |s| s.to_string());
                doc.revisions.push(Revision {
                    date: cell(0),
                    author: cell(1),
                    note: cell(2),
                });
            }
        }
    }
    doc
}

/// Parses revision dates such as `Apr 10 2023`.
pub fn parse_revision_date(text: &str) -> Option<NaiveDate> {
    let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ");
    ["%b %d %Y", "%B %d %Y", "%Y-%m-%d", "%m/%d/%Y"]
        .iter()
        .find_map(|fmt| NaiveDate::parse_from_str(&normalized, fmt).ok())
}

fn latest_revision(defs: &[Definition]) -> Option<String> {
    defs.iter()
        .flat_map(|d| d.revisions.iter())
        .filter_map(|r| parse_revision_date(&r.date).map(|d| (d, r.date.clone())))
        .max_by_key(|(d, _)| *d)
        .map(|(_, text)| text)
}

/// The `Help` binding of the lambda's top-level LET, if any.
pub fn help_binding(lambda: &LambdaExpr) -> Option<&Expr> {
    let ExprKind::Let(l) = &lambda.body.kind else {
        return None;
    };
    l.bindings
        .iter()
        .find(|(name, _)| name.name.eq_ignore_ascii_case("help"))
        .map(|(_, e)| e)
}

/// Decodes a Help binding of the form `TEXTSPLIT("a→b¶...", "→", "¶")`,
/// possibly wrapped (for example in TRIM), into rows of trimmed cells.
pub fn help_rows(lambda: &LambdaExpr) -> Option<Vec<Vec<String>>> {
    let split = find_textsplit(help_binding(lambda)?)?;
    let ExprKind::Call { args, .. } = &split.kind else {
        return None;
    };
    let text = fold_text(args.first()?.expr()?)?;
    let col_delim = args.get(1).and_then(Arg::expr).and_then(fold_text)?;
    let row_delim = args.get(2).and_then(Arg::expr).and_then(fold_text);
    let rows: Vec<&str> = match &row_delim {
        Some(d) if !d.is_empty() => text.split(d.as_str()).collect(),
        _ => vec![text.as_str()],
    };
    Some(
        rows.into_iter()
            .map(|row| row.split(col_delim.as_str()).map(|c| c.trim().to_string()).collect())
            .collect(),
    )
}

fn find_textsplit(expr: &Expr) -> Option<&Expr> {
    match &expr.kind {
        ExprKind::Call { name, args } => {
            if name.eq_ignore_ascii_case("TEXTSPLIT") {
                Some(expr)
            } else {
                args.iter().filter_map(Arg::expr).find_map(find_textsplit)
            }
        }
        _ => None,
    }
}

fn fold_text(expr: &Expr) -> Option<String> {
    match &expr.kind {
        ExprKind::Text(s) => Some(s.clone()),
        ExprKind::Binary {
            op: BinOp::Concat,
            left,
            right,
        } => Some(fold_text(left)? + &fold_text(right)?),
        _ => None,
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Parameters,
    Examples,
    Other,
}

fn doc_from_help(rows: Vec<Vec<String>>) -> DocBlock {
    let mut doc = DocBlock::default();
    let mut section = Section::None;
    for row in &rows {
        let label = row.first().map_or("", String::as_str);
        let value = row.get(1).map_or("", String::as_str);
        if label.is_empty() && value.is_empty() {
            continue;
        }
        if is_section_label(label) {
            let upper = label.trim_end_matches(':').to_ascii_uppercase();
            section = Section::Other;
            match upper.as_str() {
                "DESCRIPTION" => doc.description = value.to_string(),
                "VERSION" => doc.version = value.to_string(),
                "PARAMETERS" => section = Section::Parameters,
                "EXAMPLES" => section = Section::Examples,
                "REQUISITES" => doc.requisites = Some(value.to_string()),
                "RETURNS" | "OUTPUT" | "OUTPUTS" => doc.returns = Some(value.to_string()),
                _ => {}
            }
            continue;
        }
        match section {
            Section::Parameters if !label.is_empty() => {
                let required = value.contains("(Required)");
                let constraint = value
                    .replace("(Required)", "")
                    .replace("(Optional)", "")
                    .trim()
                    .to_string();
                doc.parameters.push(ParamDoc {
                    name: label.to_string(),
                    required,
                    constraint,
                });
            }
            Section::Examples => {
                if label == "Result" && value == "Formula" {
                    continue;
                }
                doc.examples.push(Example {
                    result: label.to_string(),
                    formula: value.to_string(),
                });
            }
            _ => {}
        }
    }
    doc.help_rows = rows;
    doc
}

fn is_section_label(label: &str) -> bool {
    label.len() > 1
        && label.ends_with(':')
        && label[..label.len() - 1]
            .chars()
            .all(|c| c.is_ascii_uppercase() || c == ' ')
}

fn merge_doc(comment_description: Option<String>, help: Option<DocBlock>) -> Option<DocBlock> {
    match (comment_description, help) {
        (None, None) => None,
        (Some(d), None) => Some(DocBlock {
            description: d,
            ..DocBlock::default()
        }),
        (desc, Some(mut help)) => {
            if let Some(d) = desc {
                help.description = d;
            }
            Some(help)
        }
    }
}
