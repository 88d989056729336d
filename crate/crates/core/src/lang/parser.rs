use std::sync::Arc;

use super::ast::*;
use super::lexer::{tokenize, LexError, Token, TokenKind};
use thiserror::Error;

/// Maximum number of parameters a single LAMBDA may declare.
pub const MAX_LAMBDA_PARAMS: usize = 253;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("syntax error at offset {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: String,
        found: String,
    },
    #[error("unbalanced '{open}' opened at offset {offset}")]
    Unbalanced { open: char, offset: usize },
    #[error("LAMBDA at offset {offset} declares more than {MAX_LAMBDA_PARAMS} parameters")]
    TooManyParams { offset: usize },
    #[error("array literal at offset {offset} has rows of unequal length")]
    RaggedArray { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Lex(e) => e.offset(),
            ParseError::Syntax { offset, .. }
            | ParseError::Unbalanced { offset, .. }
            | ParseError::TooManyParams { offset }
            | ParseError::RaggedArray { offset } => *offset,
        }
    }
}

/// Parses a formula (with or without a leading `=`) into an expression tree.
pub fn parse_formula(source: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser::new(&tokens, source.len());
    let expr = parser.expression()?;
    if let Some(tok) = parser.peek() {
        return Err(parser.unexpected(tok, "end of formula"));
    }
    Ok(expr)
}

pub(crate) struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    eof: usize,
}

impl<'t> Parser<'t> {
    pub(crate) fn new(tokens: &'t [Token], eof: usize) -> Self {
        Parser {
            tokens,
            pos: 0,
            eof,
        }
    }

    pub(crate) fn position(&self) -> usize {
        self.pos
    }

    pub(crate) fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_nth(&self, n: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + n)
    }

    pub(crate) fn bump(&mut self) -> Option<&'t Token> {
        let tok = self.tokens.get(self.pos);
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn prev_end(&self) -> usize {
        self.pos
            .checked_sub(1)
            .and_then(|i| self.tokens.get(i))
            .map_or(0, |t| t.span.end)
    }

    pub(crate) fn unexpected(&self, tok: &Token, expected: &str) -> ParseError {
        ParseError::Syntax {
            offset: tok.span.start,
            expected: expected.to_string(),
            found: format!("'{}'", tok.lexeme),
        }
    }

    fn at_eof(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.eof,
            expected: expected.to_string(),
            found: "end of input".to_string(),
        }
    }

    fn expect_punct(&mut self, p: &str, open: Option<(char, usize)>) -> Result<&'t Token, ParseError> {
        match self.peek() {
            Some(t) if t.is_punct(p) => {
                self.pos += 1;
                Ok(t)
            }
            Some(t) => Err(self.unexpected(t, &format!("'{p}'"))),
            None => match open {
                Some((open, offset)) => Err(ParseError::Unbalanced { open, offset }),
                None => Err(self.at_eof(&format!("'{p}'"))),
            },
        }
    }

    pub(crate) fn expression(&mut self) -> Result<Expr, ParseError> {
        stacker::maybe_grow(32 * 1024, 1024 * 1024, || self.comparison())
    }

    fn binary_level(
        &mut self,
        ops: &[&str],
        next: fn(&mut Self) -> Result<Expr, ParseError>,
    ) -> Result<Expr, ParseError> {
        let mut left = next(self)?;
        while let Some(tok) = self.peek() {
            if tok.kind != TokenKind::Operator || !ops.contains(&tok.lexeme.as_str()) {
                break;
            }
            self.pos += 1;
            let op = BinOp::from_symbol(&tok.lexeme).expect("listed operator");
            let right = next(self)?;
            let span = left.span.join(right.span);
            left = Expr::new(
                ExprKind::Binary {
                    op,
                    left: Box::new(left),
                    right: Box::new(right),
                },
                span,
            );
        }
        Ok(left)
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&["=", "<>", "<", "<=", ">", ">="], Self::concat)
    }

    fn concat(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&["&"], Self::additive)
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&["+", "-"], Self::multiplicative)
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&["*", "/"], Self::power)
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&["^"], Self::unary)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(tok) = self.peek() {
            if tok.is_op("-") || tok.is_op("+") {
                self.pos += 1;
                let operand = self.unary()?;
                let op = if tok.lexeme == "-" { UnOp::Neg } else { UnOp::Plus };
                let span = tok.span.join(operand.span);
                return Ok(Expr::new(
                    ExprKind::Unary {
                        op,
                        operand: Box::new(operand),
                    },
                    span,
                ));
            }
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut expr = self.primary()?;
        while let Some(tok) = self.peek() {
            if !tok.is_op("%") {
                break;
            }
            self.pos += 1;
            let span = expr.span.join(tok.span);
            expr = Expr::new(
                ExprKind::Unary {
                    op: UnOp::Percent,
                    operand: Box::new(expr),
                },
                span,
            );
        }
        Ok(expr)
    }

    /// `callee(args)(args)...` after a lambda, call or parenthesized expression.
    fn call_suffixes(&mut self, mut expr: Expr) -> Result<Expr, ParseError> {
        while self.peek().is_some_and(|t| t.is_punct("(")) {
            let open = self.bump().expect("peeked");
            let args = self.arguments(open.span.start)?;
            let span = Span::new(expr.span.start, self.prev_end());
            expr = Expr::new(
                ExprKind::Invoke {
                    callee: Box::new(expr),
                    args,
                },
                span,
            );
        }
        Ok(expr)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.bump() else {
            return Err(self.at_eof("an expression"));
        };
        let span = tok.span;
        let expr = match tok.kind {
            TokenKind::Number => {
                let value: f64 = tok.lexeme.parse().map_err(|_| ParseError::Syntax {
                    offset: span.start,
                    expected: "a number".into(),
                    found: format!("'{}'", tok.lexeme),
                })?;
                Expr::new(ExprKind::Number(value), span)
            }
            TokenKind::Text => Expr::new(ExprKind::Text(tok.text_value()), span),
            TokenKind::Bool => Expr::new(
                ExprKind::Bool(tok.lexeme.eq_ignore_ascii_case("TRUE")),
                span,
            ),
            TokenKind::ErrorLiteral => Expr::new(
                ExprKind::Error(ErrorCode::parse(&tok.lexeme).expect("lexer validated")),
                span,
            ),
            TokenKind::CellRef => return self.reference(tok),
            TokenKind::TableName => return self.structured(tok),
            TokenKind::Ident => {
                let is_call = self.peek().is_some_and(|t| t.is_punct("("));
                if !is_call {
                    return Ok(Expr::new(ExprKind::Name(tok.lexeme.clone()), span));
                }
                let open = self.bump().expect("peeked");
                let expr = if tok.lexeme.eq_ignore_ascii_case("LAMBDA") {
                    self.lambda(span.start, open.span.start)?
                } else if tok.lexeme.eq_ignore_ascii_case("LET") {
                    self.let_expr(span.start, open.span.start)?
                } else {
                    let args = self.arguments(open.span.start)?;
                    Expr::new(
                        ExprKind::Call {
                            name: tok.lexeme.clone(),
                            args,
                        },
                        Span::new(span.start, self.prev_end()),
                    )
                };
                return self.call_suffixes(expr);
            }
            TokenKind::Punct if tok.lexeme == "(" => {
                let inner = self.expression()?;
                self.expect_punct(")", Some(('(', span.start)))?;
                let inner = Expr::new(inner.kind, Span::new(span.start, self.prev_end()));
                return self.call_suffixes(inner);
            }
            TokenKind::Punct if tok.lexeme == "{" => return self.array(span.start),
            _ => return Err(self.unexpected(tok, "an expression")),
        };
        Ok(expr)
    }

    fn arguments(&mut self, open: usize) -> Result<Vec<Arg>, ParseError> {
        let mut args = Vec::new();
        if self.peek().is_some_and(|t| t.is_punct(")")) {
            self.pos += 1;
            return Ok(args);
        }
        loop {
            match self.peek() {
                Some(t) if t.is_punct(",") || t.is_punct(")") => args.push(Arg::Omitted),
                None => return Err(ParseError::Unbalanced { open: '(', offset: open }),
                _ => args.push(Arg::Value(self.expression()?)),
            }
            match self.bump() {
                Some(t) if t.is_punct(",") => continue,
                Some(t) if t.is_punct(")") => return Ok(args),
                Some(t) => return Err(self.unexpected(t, "',' or ')'")),
                None => return Err(ParseError::Unbalanced { open: '(', offset: open }),
            }
        }
    }

    fn lambda(&mut self, start: usize, open: usize) -> Result<Expr, ParseError> {
        let mut params = Vec::new();
        loop {
            let Some(tok) = self.peek() else {
                return Err(ParseError::Unbalanced { open: '(', offset: open });
            };
            if tok.is_punct("[") {
                self.pos += 1;
                let name = match self.bump() {
                    Some(t) if t.kind == TokenKind::Ident => t,
                    Some(t) => return Err(self.unexpected(t, "a parameter name")),
                    None => return Err(ParseError::Unbalanced { open: '[', offset: tok.span.start }),
                };
                let close = self.expect_punct("]", Some(('[', tok.span.start)))?;
                params.push(Param {
                    name: name.lexeme.clone(),
                    optional: true,
                    span: tok.span.join(close.span),
                });
                self.expect_punct(",", None)?;
                continue;
            }
            let is_param = tok.kind == TokenKind::Ident
                && self.peek_nth(1).is_some_and(|t| t.is_punct(","));
            if is_param {
                self.pos += 2;
                params.push(Param {
                    name: tok.lexeme.clone(),
                    optional: false,
                    span: tok.span,
                });
                continue;
            }
            if tok.is_punct(")") {
                return Err(self.unexpected(tok, "a LAMBDA body"));
            }
            let body = self.expression()?;
            self.expect_punct(")", Some(('(', open)))?;
            if params.len() > MAX_LAMBDA_PARAMS {
                return Err(ParseError::TooManyParams { offset: start });
            }
            return Ok(Expr::new(
                ExprKind::Lambda(LambdaExpr {
                    params,
                    body: Arc::new(body),
                }),
                Span::new(start, self.prev_end()),
            ));
        }
    }

    fn let_expr(&mut self, start: usize, open: usize) -> Result<Expr, ParseError> {
        let mut bindings = Vec::new();
        loop {
            let Some(tok) = self.peek() else {
                return Err(ParseError::Unbalanced { open: '(', offset: open });
            };
            let is_binding = tok.kind == TokenKind::Ident
                && self.peek_nth(1).is_some_and(|t| t.is_punct(","));
            if is_binding {
                self.pos += 2;
                let value = self.expression()?;
                match self.bump() {
                    Some(t) if t.is_punct(",") => {}
                    Some(t) => return Err(self.unexpected(t, "',' followed by the LET body")),
                    None => return Err(ParseError::Unbalanced { open: '(', offset: open }),
                }
                bindings.push((
                    Ident {
                        name: tok.lexeme.clone(),
                        span: tok.span,
                    },
                    value,
                ));
                continue;
            }
            if bindings.is_empty() {
                return Err(self.unexpected(tok, "a LET binding name"));
            }
            let body = self.expression()?;
            self.expect_punct(")", Some(('(', open)))?;
            return Ok(Expr::new(
                ExprKind::Let(LetExpr {
                    bindings,
                    body: Box::new(body),
                }),
                Span::new(start, self.prev_end()),
            ));
        }
    }

    fn array(&mut self, open: usize) -> Result<Expr, ParseError> {
        let mut rows: Vec<Vec<Expr>> = vec![Vec::new()];
        loop {
            if self.peek().is_none() {
                return Err(ParseError::Unbalanced { open: '{', offset: open });
            }
            let item = self.expression()?;
            rows.last_mut().expect("nonempty").push(item);
            match self.bump() {
                Some(t) if t.is_punct(",") => {}
                Some(t) if t.is_punct(";") => rows.push(Vec::new()),
                Some(t) if t.is_punct("}") => break,
                Some(t) => return Err(self.unexpected(t, "',', ';' or '}'")),
                None => return Err(ParseError::Unbalanced { open: '{', offset: open }),
            }
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(ParseError::RaggedArray { offset: open });
        }
        Ok(Expr::new(ExprKind::Array(rows), Span::new(open, self.prev_end())))
    }

    fn reference(&mut self, tok: &'t Token) -> Result<Expr, ParseError> {
        let first = parse_cell_lexeme(&tok.lexeme);
        if self.peek().is_some_and(|t| t.is_punct(":")) {
            let colon = self.bump().expect("peeked");
            let second = match self.bump() {
                Some(t) if t.kind == TokenKind::CellRef => t,
                Some(t) => return Err(self.unexpected(t, "a cell reference after ':'")),
                None => return Err(self.at_eof("a cell reference after ':'")),
            };
            let _ = colon;
            let mut last = parse_cell_lexeme(&second.lexeme);
            if last.sheet.is_some() && last.sheet != first.sheet {
                return Err(ParseError::Syntax {
                    offset: second.span.start,
                    expected: "a range within one sheet".into(),
                    found: format!("'{}'", second.lexeme),
                });
            }
            last.sheet = None;
            return Ok(Expr::new(
                ExprKind::Range(first, last),
                tok.span.join(second.span),
            ));
        }
        if let Some(hash) = self.peek().filter(|t| t.is_punct("#")) {
            self.pos += 1;
            return Ok(Expr::new(ExprKind::Spill(first), tok.span.join(hash.span)));
        }
        Ok(Expr::new(ExprKind::Cell(first), tok.span))
    }

    fn structured(&mut self, table: &'t Token) -> Result<Expr, ParseError> {
        let Some(next) = self.bump() else {
            return Err(self.at_eof("a table column"));
        };
        if next.kind == TokenKind::TableColumn {
            return Ok(Expr::new(
                ExprKind::Structured(StructuredRef {
                    table: table.lexeme.clone(),
                    first: next.column_name(),
                    last: None,
                }),
                table.span.join(next.span),
            ));
        }
        if !next.is_punct("[") {
            return Err(self.unexpected(next, "'['"));
        }
        let first = match self.bump() {
            Some(t) if t.kind == TokenKind::TableColumn => t.column_name(),
            Some(t) => return Err(self.unexpected(t, "a table column")),
            None => return Err(ParseError::Unbalanced { open: '[', offset: next.span.start }),
        };
        let mut last = None;
        if self.peek().is_some_and(|t| t.is_punct(":")) {
            self.pos += 1;
            last = match self.bump() {
                Some(t) if t.kind == TokenKind::TableColumn => Some(t.column_name()),
                Some(t) => return Err(self.unexpected(t, "a table column")),
                None => return Err(ParseError::Unbalanced { open: '[', offset: next.span.start }),
            };
        }
        let close = self.expect_punct("]", Some(('[', next.span.start)))?;
        Ok(Expr::new(
            ExprKind::Structured(StructuredRef {
                table: table.lexeme.clone(),
                first,
                last,
            }),
            table.span.join(close.span),
        ))
    }
}

/// Splits a lexed cell-reference token (`Sheet!$A$1`, `'My Sheet'!B2`, `C3`).
pub(crate) fn parse_cell_lexeme(lexeme: &str) -> CellRef {
    let (sheet, addr) = match lexeme.rfind('!') {
        Some(i) => {
            let raw = &lexeme[..i];
            let sheet = if raw.starts_with('\'') {
                raw[1..raw.len() - 1].replace("''", "'")
            } else {
                raw.to_string()
            };
            (Some(sheet), &lexeme[i + 1..])
        }
        None => (None, lexeme),
    };
    parse_address(addr)
        .map(|mut c| {
            c.sheet = sheet;
            c
        })
        .expect("lexer validated the address")
}

/// Parses an A1-style address such as `$F$6` (no sheet).
pub fn parse_address(addr: &str) -> Option<CellRef> {
    let bytes = addr.as_bytes();
    let mut i = 0;
    let col_abs = bytes.first() == Some(&b'$');
    if col_abs {
        i += 1;
    }
    let col_start = i;
    while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
        i += 1;
    }
    let col = column_index(&addr[col_start..i])?;
    let row_abs = bytes.get(i) == Some(&b'$');
    if row_abs {
        i += 1;
    }
    if i == bytes.len() || !addr[i..].bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let row: u32 = addr[i..].parse().ok()?;
    if row == 0 || row > MAX_ROWS {
        return None;
    }
    Some(CellRef {
        sheet: None,
        col,
        row: row - 1,
        col_abs,
        row_abs,
    })
}
