//! Compliance rules for module definitions.
//!
//! A reference is reported once, under the rule of its innermost context:
//! R3 inside a LET binding's value, R2 inside a call to a lambda helper
//! (BYROW, BYCOL, MAKEARRAY, MAP, REDUCE, SCAN), R1 anywhere else.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::eval::is_builtin;
use crate::lang::module::help_binding;
use crate::lang::{fold_name, parse_formula, Definition, Expr, ExprKind, LambdaExpr, Module, ParseError, Span, BinOp};

const HELPERS: &[&str] = &["BYROW", "BYCOL", "MAKEARRAY", "MAP", "REDUCE", "SCAN"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Rule {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl Rule {
    pub const ALL: [Rule; 7] = [Rule::R1, Rule::R2, Rule::R3, Rule::R4, Rule::R5, Rule::R6, Rule::R7];

    pub fn id(self) -> &'static str {
        match self {
            Rule::R1 => "R1-self-contained-body",
            Rule::R2 => "R2-wrapped-helpers",
            Rule::R3 => "R3-pure-let",
            Rule::R4 => "R4-documentation",
            Rule::R5 => "R5-inline-help",
            Rule::R6 => "R6-version-compat",
            Rule::R7 => "R7-naming-style",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            Rule::R7 => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown lint rule '{0}'")]
pub struct UnknownRule(pub String);

impl FromStr for Rule {
    type Err = UnknownRule;

    /// Accepts `R1` or the full id, case-insensitively.
    fn from_str(s: &str) -> Result<Rule, UnknownRule> {
        let t = s.trim();
        Rule::ALL
            .into_iter()
            .find(|r| t.eq_ignore_ascii_case(&r.to_string()) || t.eq_ignore_ascii_case(r.id()))
            .ok_or_else(|| UnknownRule(s.to_string()))
    }
}

/// Parses a comma-separated rule list such as `R1,R3`.
pub fn parse_rules(list: &str) -> Result<BTreeSet<Rule>, UnknownRule> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

pub fn all_rules() -> BTreeSet<Rule> {
    Rule::ALL.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub rule: Rule,
    pub definition: String,
    /// Byte offsets into the module source.
    pub span: (usize, usize),
    pub fragment: String,
    pub message: String,
}

impl Finding {
    pub fn severity(&self) -> Severity {
        self.rule.severity()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Compliant,
    NonCompliant,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Compliant => "compliant",
            Verdict::NonCompliant => "non-compliant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintReport {
    pub module: String,
    pub verdict: Verdict,
    pub findings: Vec<Finding>,
}

impl LintReport {
    /// Findings are kept in the order given.
    pub fn new(module: impl Into<String>, findings: Vec<Finding>) -> LintReport {
        let verdict = if findings.iter().any(|f| f.severity() == Severity::Error) {
            Verdict::NonCompliant
        } else {
            Verdict::Compliant
        };
        LintReport {
            module: module.into(),
            verdict,
            findings,
        }
    }

    pub fn is_compliant(&self) -> bool {
        self.verdict == Verdict::Compliant
    }

    pub fn count(&self, rule: Rule) -> usize {
        self.findings.iter().filter(|f| f.rule == rule).count()
    }

    /// One finding per line, then the verdict.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.findings {
            out.push_str(&format!(
                "{}  {}  {}..{}  {}\n",
                f.rule, f.definition, f.span.0, f.span.1, f.message
            ));
        }
        out.push_str(&format!(
            "{}: {} ({} finding{})\n",
            if self.module.is_empty() { "<module>" } else { &self.module },
            self.verdict,
            self.findings.len(),
            if self.findings.len() == 1 { "" } else { "s" }
        ));
        out
    }

    pub fn to_json(&self) -> String {
        let findings: Vec<serde_json::Value> = self
            .findings
            .iter()
            .map(|f| {
                serde_json::json!({
                    "rule": f.rule.to_string(),
                    "definition": f.definition,
                    "span": [f.span.0, f.span.1],
                    "fragment": f.fragment,
                    "message": f.message,
                })
            })
            .collect();
        let doc = serde_json::json!({
            "module": self.module,
            "verdict": self.verdict.to_string(),
            "findings": findings,
        });
        serde_json::to_string_pretty(&doc).expect("report serializes")
    }
}

/// Lints every definition. Findings come out in definition order, then by
/// span.
pub fn lint_module(module: &Module, rules: &BTreeSet<Rule>) -> LintReport {
    let siblings: BTreeSet<String> = module.definitions.iter().map(|d| fold_name(&d.name)).collect();
    let mut findings = Vec::new();
    for def in &module.definitions {
        let mut own = Vec::new();
        if rules.iter().any(|r| matches!(r, Rule::R1 | Rule::R2 | Rule::R3)) {
            own.extend(
                check_self_contained(&module.source, def, &siblings)
                    .into_iter()
                    .filter(|f| rules.contains(&f.rule)),
            );
        }
        if rules.contains(&Rule::R4) || rules.contains(&Rule::R5) {
            own.extend(
                check_documentation(&module.source, def)
                    .into_iter()
                    .filter(|f| rules.contains(&f.rule)),
            );
        }
        if rules.contains(&Rule::R7) && !def.name.ends_with('λ') {
            own.push(Finding {
                rule: Rule::R7,
                definition: def.name.clone(),
                span: name_span(def),
                fragment: def.name.clone(),
                message: "name does not end in λ".into(),
            });
        }
        own.sort_by_key(|f| (f.span.0, f.span.1, f.rule));
        findings.extend(own);
    }
    LintReport::new(module.header.name.clone().unwrap_or_default(), findings)
}

fn name_span(def: &Definition) -> (usize, usize) {
    (def.span.start, def.span.start + def.name.len())
}

fn fragment(source: &str, span: Span) -> String {
    source.get(span.start..span.end).unwrap_or_default().to_string()
}

#[derive(Clone, Copy, PartialEq)]
enum Context {
    Body,
    Helper,
    LetBinding,
}

struct Walker<'a> {
    source: &'a str,
    definition: &'a str,
    siblings: &'a BTreeSet<String>,
    locals: Vec<String>,
    findings: Vec<Finding>,
}

impl Walker<'_> {
    fn report_ref(&mut self, expr: &Expr, ctx: Context) {
        let fragment = fragment(self.source, expr.span);
        let (rule, message) = match ctx {
            Context::Body => (Rule::R1, format!("body references the grid directly: {fragment}")),
            Context::Helper => (Rule::R2, format!("helper function references the grid directly: {fragment}")),
            Context::LetBinding => (Rule::R3, format!("LET binding references the grid directly: {fragment}")),
        };
        self.findings.push(Finding {
            rule,
            definition: self.definition.to_string(),
            span: (expr.span.start, expr.span.end),
            fragment,
            message,
        });
    }

    fn report_name(&mut self, expr: &Expr, name: &str, ctx: Context) {
        let key = fold_name(name);
        if self.locals.contains(&key) || self.siblings.contains(&key) || is_builtin(name) {
            return;
        }
        let fragment = fragment(self.source, expr.span);
        let what = if name.contains('.') {
            "depends on another module"
        } else {
            "depends on a name outside its module"
        };
        let rule = match ctx {
            Context::LetBinding => Rule::R3,
            _ => Rule::R1,
        };
        self.findings.push(Finding {
            rule,
            definition: self.definition.to_string(),
            span: (expr.span.start, expr.span.end),
            fragment,
            message: format!("{what}: {name}"),
        });
    }

    fn walk(&mut self, expr: &Expr, ctx: Context) {
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || self.walk_inner(expr, ctx))
    }

    fn walk_inner(&mut self, expr: &Expr, ctx: Context) {
        match &expr.kind {
            ExprKind::Cell(_) | ExprKind::Range(..) | ExprKind::Spill(_) | ExprKind::Structured(_) => {
                self.report_ref(expr, ctx)
            }
            ExprKind::Name(n) => self.report_name(expr, n, ctx),
            ExprKind::Call { name, .. } => {
                self.report_name(expr, name, ctx);
                let inner = if HELPERS.iter().any(|h| h.eq_ignore_ascii_case(name)) {
                    Context::Helper
                } else {
                    ctx
                };
                for child in expr.children() {
                    self.walk(child, inner);
                }
            }
            ExprKind::Let(l) => {
                let mark = self.locals.len();
                for (name, value) in &l.bindings {
                    self.walk(value, Context::LetBinding);
                    self.locals.push(fold_name(&name.name));
                }
                self.walk(&l.body, ctx);
                self.locals.truncate(mark);
            }
            ExprKind::Lambda(l) => self.walk_lambda(l, ctx),
            _ => {
                for child in expr.children() {
                    self.walk(child, ctx);
                }
            }
        }
    }

    fn walk_lambda(&mut self, l: &LambdaExpr, ctx: Context) {
        let mark = self.locals.len();
        self.locals.extend(l.params.iter().map(|p| fold_name(&p.name)));
        self.walk(&l.body, ctx);
        self.locals.truncate(mark);
    }
}

/// Rules R1 to R3 for one definition.
pub fn check_self_contained(source: &str, def: &Definition, siblings: &BTreeSet<String>) -> Vec<Finding> {
    let mut w = Walker {
        source,
        definition: &def.name,
        siblings,
        locals: Vec::new(),
        findings: Vec::new(),
    };
    w.walk_lambda(&def.lambda, Context::Body);
    w.findings
}

/// Lints a cell formula as a candidate component. For `LAMBDA(...)(args)`
/// only the lambda is checked: arguments are where grid values belong.
pub fn lint_formula(text: &str) -> Result<Vec<Finding>, ParseError> {
    let expr = parse_formula(text)?;
    let siblings = BTreeSet::new();
    let mut w = Walker {
        source: text,
        definition: "<formula>",
        siblings: &siblings,
        locals: Vec::new(),
        findings: Vec::new(),
    };
    match &expr.kind {
        ExprKind::Invoke { callee, .. } if callee.as_lambda().is_some() => {
            w.walk_lambda(callee.as_lambda().expect("checked"), Context::Body)
        }
        _ => w.walk(&expr, Context::Body),
    }
    Ok(w.findings)
}

/// Rules R4 and R5 for one definition.
pub fn check_documentation(source: &str, def: &Definition) -> Vec<Finding> {
    let mut out = Vec::new();
    let span = name_span(def);
    let push = |out: &mut Vec<Finding>, rule: Rule, span: (usize, usize), message: String| {
        out.push(Finding {
            rule,
            definition: def.name.clone(),
            span,
            fragment: source.get(span.0..span.1).unwrap_or_default().to_string(),
            message,
        })
    };
    let doc = def.doc.as_ref();
    if doc.is_none_or(|d| d.description.trim().is_empty()) {
        push(&mut out, Rule::R4, span, "no description".into());
    }
    for p in &def.lambda.params {
        let documented = doc.is_some_and(|d| {
            d.parameters.iter().any(|pd| {
                fold_name(pd.name.trim_matches(|c| c == '[' || c == ']')) == fold_name(&p.name)
                    && !pd.constraint.trim().is_empty()
            })
        });
        if !documented {
            push(
                &mut out,
                Rule::R4,
                (p.span.start, p.span.end),
                format!("parameter {} has no documented constraint", p.name),
            );
        }
    }
    let has_output = doc.is_some_and(|d| d.returns.as_ref().is_some_and(|r| !r.trim().is_empty()) || !d.examples.is_empty());
    if !has_output {
        push(&mut out, Rule::R4, span, "no output description or examples".into());
    }

    let required = def.lambda.params.iter().any(|p| !p.optional)
        || doc.is_some_and(|d| d.parameters.iter().any(|p| p.required));
    if required && !has_help_path(&def.lambda) {
        push(
            &mut out,
            Rule::R5,
            span,
            "no inline help path (looked for a Help binding returned behind an omitted-input guard)".into(),
        );
    }
    out
}

/// The structural help idiom: a `Help` LET binding, a guard on omitted or
/// blank input, and a reference to `Help` outside its own binding.
fn has_help_path(lambda: &LambdaExpr) -> bool {
    if help_binding(lambda).is_none() {
        return false;
    }
    let ExprKind::Let(l) = &lambda.body.kind else {
        return false;
    };
    let mut guarded = false;
    let mut returned = false;
    for (name, value) in &l.bindings {
        guarded |= has_guard(value);
        if !name.name.eq_ignore_ascii_case("help") {
            returned |= mentions(value, "help");
        }
    }
    guarded |= has_guard(&l.body);
    returned |= mentions(&l.body, "help");
    guarded && returned
}

fn has_guard(expr: &Expr) -> bool {
    let here = match &expr.kind {
        ExprKind::Call { name, .. } => ["ISOMITTED", "ISBLANK"].iter().any(|g| g.eq_ignore_ascii_case(name)),
        ExprKind::Binary { op: BinOp::Eq, left, right } => {
            matches!(&right.kind, ExprKind::Text(s) if s.is_empty())
                || matches!(&left.kind, ExprKind::Text(s) if s.is_empty())
        }
        _ => false,
    };
    here || expr.children().into_iter().any(has_guard)
}

fn mentions(expr: &Expr, key: &str) -> bool {
    match &expr.kind {
        ExprKind::Name(n) if fold_name(n) == key => true,
        _ => expr.children().into_iter().any(|c| mentions(c, key)),
    }
}

/// Rule R6: `new` must keep every definition of `old` with its parameter
/// list as a prefix, optionality never tightened, additions optional.
pub fn check_version_compat(old: &Module, new: &Module) -> Vec<Finding> {
    let mut out = Vec::new();
    for od in &old.definitions {
        let Some(nd) = new.definition(&od.name) else {
            out.push(Finding {
                rule: Rule::R6,
                definition: od.name.clone(),
                span: name_span(od),
                fragment: od.name.clone(),
                message: format!("{} was removed", od.name),
            });
            continue;
        };
        let mut push = |span: Span, message: String| {
            out.push(Finding {
                rule: Rule::R6,
                definition: nd.name.clone(),
                span: (span.start, span.end),
                fragment: fragment(&new.source, span),
                message,
            })
        };
        let (op, np) = (&od.lambda.params, &nd.lambda.params);
        for (i, o) in op.iter().enumerate() {
            let pos = i + 1;
            match np.get(i) {
                None => push(
                    Span::new(nd.span.start, nd.span.start + nd.name.len()),
                    format!("position {pos}: parameter {} was removed", o.name),
                ),
                Some(n) if fold_name(&n.name) != fold_name(&o.name) => push(
                    n.span,
                    format!("position {pos}: parameter {} was renamed to {}", o.name, n.name),
                ),
                Some(n) if o.optional && !n.optional => push(
                    n.span,
                    format!("position {pos}: parameter {} changed from optional to required", o.name),
                ),
                Some(_) => {}
            }
        }
        for (i, n) in np.iter().enumerate().skip(op.len()) {
            if !n.optional {
                push(n.span, format!("position {}: added parameter {} must be optional", i + 1, n.name));
            }
        }
    }
    out
}
