//! Formula syntax tree.
//!
//! Every node carries the byte span it was parsed from. Spans are positional
//! metadata only: equality on [`Expr`] compares structure and ignores spans,
//! so a tree re-parsed from its formatted text compares equal to the original.

use std::fmt;
use std::sync::Arc;

/// Byte offsets `[start, end)` into the source text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

/// Spreadsheet error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorCode {
    Value,
    NA,
    Ref,
    Name,
    Num,
    Calc,
    Spill,
    Div0,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 8] = [
        ErrorCode::Value,
        ErrorCode::NA,
        ErrorCode::Ref,
        ErrorCode::Name,
        ErrorCode::Num,
        ErrorCode::Calc,
        ErrorCode::Spill,
        ErrorCode::Div0,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Value => "#VALUE!",
            ErrorCode::NA => "#N/A",
            ErrorCode::Ref => "#REF!",
            ErrorCode::Name => "#NAME?",
            ErrorCode::Num => "#NUM!",
            ErrorCode::Calc => "#CALC!",
            ErrorCode::Spill => "#SPILL!",
            ErrorCode::Div0 => "#DIV/0!",
        }
    }

    /// Case-insensitive lookup of an error literal such as `#Value!`.
    pub fn parse(text: &str) -> Option<ErrorCode> {
        ErrorCode::ALL
            .into_iter()
            .find(|code| code.as_str().eq_ignore_ascii_case(text))
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single-cell reference. Column and row are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellRef {
    pub sheet: Option<String>,
    pub col: u32,
    pub row: u32,
    pub col_abs: bool,
    pub row_abs: bool,
}

impl CellRef {
    pub fn relative(col: u32, row: u32) -> Self {
        CellRef {
            sheet: None,
            col,
            row,
            col_abs: false,
            row_abs: false,
        }
    }
}

/// `tbl[Col]` or `tbl[[First]:[Last]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StructuredRef {
    pub table: String,
    pub first: String,
    pub last: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
            BinOp::Concat => "&",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
        }
    }

    pub fn from_symbol(sym: &str) -> Option<BinOp> {
        Some(match sym {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "^" => BinOp::Pow,
            "&" => BinOp::Concat,
            "=" => BinOp::Eq,
            "<>" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            _ => return None,
        })
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 1,
            BinOp::Concat => 2,
            BinOp::Add | BinOp::Sub => 3,
            BinOp::Mul | BinOp::Div => 4,
            BinOp::Pow => 5,
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Mul | BinOp::Eq | BinOp::Ne)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Plus,
    Percent,
}

/// A named binding site (LET name) with its span.
#[derive(Debug, Clone)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl PartialEq for Ident {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub optional: bool,
    pub span: Span,
}

impl PartialEq for Param {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.optional == other.optional
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LetExpr {
    pub bindings: Vec<(Ident, Expr)>,
    pub body: Box<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaExpr {
    pub params: Vec<Param>,
    pub body: Arc<Expr>,
}

/// A call argument; `f(a,,c)` has an omitted middle argument.
#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Omitted,
    Value(Expr),
}

impl Arg {
    pub fn expr(&self) -> Option<&Expr> {
        match self {
            Arg::Omitted => None,
            Arg::Value(e) => Some(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Number(f64),
    Text(String),
    Bool(bool),
    Error(ErrorCode),
    Array(Vec<Vec<Expr>>),
    Cell(CellRef),
    Range(CellRef, CellRef),
    Spill(CellRef),
    Name(String),
    Structured(StructuredRef),
    Call { name: String, args: Vec<Arg> },
    Invoke { callee: Box<Expr>, args: Vec<Arg> },
    Binary { op: BinOp, left: Box<Expr>, right: Box<Expr> },
    Unary { op: UnOp, operand: Box<Expr> },
    Let(LetExpr),
    Lambda(LambdaExpr),
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Builds a node with an empty span, for trees constructed in code.
    pub fn bare(kind: ExprKind) -> Self {
        Expr {
            kind,
            span: Span::default(),
        }
    }

    pub fn as_lambda(&self) -> Option<&LambdaExpr> {
        match &self.kind {
            ExprKind::Lambda(l) => Some(l),
            _ => None,
        }
    }

    /// True for the grid-reference variants.
    pub fn is_reference(&self) -> bool {
        matches!(
            self.kind,
            ExprKind::Cell(_) | ExprKind::Range(..) | ExprKind::Spill(_) | ExprKind::Structured(_)
        )
    }

    /// Direct children in source order.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Array(rows) => rows.iter().flatten().collect(),
            ExprKind::Call { args, .. } => args.iter().filter_map(Arg::expr).collect(),
            ExprKind::Invoke { callee, args } => std::iter::once(callee.as_ref())
                .chain(args.iter().filter_map(Arg::expr))
                .collect(),
            ExprKind::Binary { left, right, .. } => vec![left, right],
            ExprKind::Unary { operand, .. } => vec![operand],
            ExprKind::Let(l) => l
                .bindings
                .iter()
                .map(|(_, e)| e)
                .chain(std::iter::once(l.body.as_ref()))
                .collect(),
            ExprKind::Lambda(l) => vec![l.body.as_ref()],
            _ => Vec::new(),
        }
    }
}

/// Identifier comparison key: case-insensitive except for `λ`, which is kept
/// as written.
pub fn fold_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for ch in name.chars() {
        if ch == 'λ' || ch == 'Λ' {
            out.push(ch);
        } else {
            out.extend(ch.to_lowercase());
        }
    }
    out
}

/// Converts a zero-based column index to letters (`0` → `A`).
pub fn column_letters(mut col: u32) -> String {
    let mut letters = Vec::new();
    loop {
        letters.push(b'A' + (col % 26) as u8);
        if col < 26 {
            break;
        }
        col = col / 26 - 1;
    }
    letters.reverse();
    String::from_utf8(letters).expect("ascii")
}

pub const MAX_COLUMNS: u32 = 16_384;
pub const MAX_ROWS: u32 = 1_048_576;

/// Parses column letters (`A`..`XFD`) into a zero-based index.
pub fn column_index(letters: &str) -> Option<u32> {
    if letters.is_empty() || letters.len() > 3 {
        return None;
    }
    let mut col: u32 = 0;
    for b in letters.bytes() {
        if !b.is_ascii_alphabetic() {
            return None;
        }
        col = col * 26 + u32::from(b.to_ascii_uppercase() - b'A') + 1;
    }
    (col <= MAX_COLUMNS).then(|| col - 1)
}
