use super::ast::{column_index, ErrorCode, Span, MAX_ROWS};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Number,
    Text,
    Bool,
    ErrorLiteral,
    Ident,
    CellRef,
    Operator,
    Punct,
    /// Table name at the head of a structured reference.
    TableName,
    /// A bracketed column inside a structured reference, e.g. `[First Date]`.
    TableColumn,
    /// Only produced by [`tokenize_with_comments`].
    Comment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Span,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.lexeme == p
    }

    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokenKind::Operator && self.lexeme == op
    }

    /// The unquoted value of a text literal.
    pub fn text_value(&self) -> String {
        debug_assert_eq!(self.kind, TokenKind::Text);
        let inner = &self.lexeme[1..self.lexeme.len() - 1];
        inner.replace("\"\"", "\"")
    }

    /// The column name of a `TableColumn` token, with `'` escapes removed.
    pub fn column_name(&self) -> String {
        debug_assert_eq!(self.kind, TokenKind::TableColumn);
        unescape_column(&self.lexeme[1..self.lexeme.len() - 1])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unterminated string starting at offset {0}")]
    UnterminatedString(usize),
    #[error("unterminated comment starting at offset {0}")]
    UnterminatedComment(usize),
    #[error("unterminated structured reference starting at offset {0}")]
    UnterminatedTableRef(usize),
    #[error("illegal character {ch:?} at offset {offset}")]
    IllegalChar { ch: char, offset: usize },
}

impl LexError {
    pub fn offset(&self) -> usize {
        match *self {
            LexError::UnterminatedString(o)
            | LexError::UnterminatedComment(o)
            | LexError::UnterminatedTableRef(o) => o,
            LexError::IllegalChar { offset, .. } => offset,
        }
    }
}

fn is_ident_start(ch: char) -> bool {
    ch.is_alphabetic() || ch == '_'
}

fn is_ident_continue(ch: char) -> bool {
    ch.is_alphanumeric() || ch == '_' || ch == '.'
}

fn unescape_column(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c == '\'' {
            if let Some(next) = chars.next() {
                out.push(next);
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Tokenizes formula text. A leading `=` is accepted and not emitted;
/// comments are skipped.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut tokens = tokenize_with_comments(source)?;
    tokens.retain(|t| t.kind != TokenKind::Comment);
    Ok(tokens)
}

/// Like [`tokenize`] but keeps `//` and `/* */` comments as tokens.
pub fn tokenize_with_comments(source: &str) -> Result<Vec<Token>, LexError> {
    Lexer::new(source).run()
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    tokens: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            pos: 0,
            tokens: Vec::new(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.src.get(self.pos + offset..)?.chars().next()
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn push(&mut self, kind: TokenKind, start: usize, end: usize) {
        self.tokens.push(Token {
            kind,
            lexeme: self.src[start..end].to_string(),
            span: Span::new(start, end),
        });
        self.pos = end;
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        let leading = self.src.len() - self.src.trim_start().len();
        if self.src[leading..].starts_with('=') {
            self.pos = leading + 1;
        }
        while let Some(ch) = self.peek() {
            let start = self.pos;
            if ch.is_whitespace() {
                self.pos += ch.len_utf8();
                continue;
            }
            let rest = self.rest();
            if rest.starts_with("//") {
                let end = rest.find('\n').map_or(self.src.len(), |i| start + i);
                self.push(TokenKind::Comment, start, end);
                continue;
            }
            if let Some(body) = rest.strip_prefix("/*") {
                let close = body
                    .find("*/")
                    .ok_or(LexError::UnterminatedComment(start))?;
                self.push(TokenKind::Comment, start, start + 2 + close + 2);
                continue;
            }
            match ch {
                '"' => self.string(start)?,
                '\'' => self.quoted_sheet(start)?,
                '0'..='9' => self.number(start),
                '.' if self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) => self.number(start),
                '#' => self.hash(start)?,
                '$' => {
                    if let Some(end) = self.cell_address_end(start) {
                        self.push(TokenKind::CellRef, start, end);
                    } else {
                        return Err(LexError::IllegalChar { ch, offset: start });
                    }
                }
                '<' | '>' => {
                    let two = &rest[..rest.len().min(2)];
                    if two == "<=" || two == ">=" || two == "<>" {
                        self.push(TokenKind::Operator, start, start + 2);
                    } else {
                        self.push(TokenKind::Operator, start, start + 1);
                    }
                }
                '+' | '-' | '*' | '/' | '^' | '&' | '=' | '%' => {
                    self.push(TokenKind::Operator, start, start + 1)
                }
                '(' | ')' | '{' | '}' | ',' | ';' | ':' | '[' | ']' => {
                    self.push(TokenKind::Punct, start, start + 1)
                }
                c if is_ident_start(c) => self.word(start)?,
                _ => return Err(LexError::IllegalChar { ch, offset: start }),
            }
        }
        Ok(self.tokens)
    }

    fn string(&mut self, start: usize) -> Result<(), LexError> {
        let bytes = self.src.as_bytes();
        let mut i = start + 1;
        loop {
            match bytes.get(i) {
                None => return Err(LexError::UnterminatedString(start)),
                Some(b'"') if bytes.get(i + 1) == Some(&b'"') => i += 2,
                Some(b'"') => break,
                Some(_) => i += 1,
            }
        }
        self.push(TokenKind::Text, start, i + 1);
        Ok(())
    }

    fn number(&mut self, start: usize) {
        let bytes = self.src.as_bytes();
        let mut i = start;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        self.push(TokenKind::Number, start, i);
    }

    fn hash(&mut self, start: usize) -> Result<(), LexError> {
        let follows_cell = self
            .tokens
            .last()
            .is_some_and(|t| t.kind == TokenKind::CellRef && t.span.end == start);
        if follows_cell {
            self.push(TokenKind::Punct, start, start + 1);
            return Ok(());
        }
        let rest = self.rest();
        for code in ErrorCode::ALL {
            let lit = code.as_str();
            if rest.len() >= lit.len()
                && rest.is_char_boundary(lit.len())
                && rest[..lit.len()].eq_ignore_ascii_case(lit)
            {
                self.push(TokenKind::ErrorLiteral, start, start + lit.len());
                return Ok(());
            }
        }
        Err(LexError::IllegalChar {
            ch: '#',
            offset: start,
        })
    }

    /// Matches `$?letters$?digits` at `at`, returning the end offset when the
    /// match is a valid address not followed by an identifier character or `(`.
    fn cell_address_end(&self, at: usize) -> Option<usize> {
        let bytes = self.src.as_bytes();
        let mut i = at;
        if bytes.get(i) == Some(&b'$') {
            i += 1;
        }
        let col_start = i;
        while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
            i += 1;
        }
        column_index(&self.src[col_start..i])?;
        if bytes.get(i) == Some(&b'$') {
            i += 1;
        }
        let row_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let row: u64 = self.src[row_start..i].parse().ok()?;
        if row == 0 || row > u64::from(MAX_ROWS) {
            return None;
        }
        match self.src[i..].chars().next() {
            Some(c) if is_ident_continue(c) || matches!(c, '(' | '$' | '!' | '[') => None,
            _ => Some(i),
        }
    }

    fn quoted_sheet(&mut self, start: usize) -> Result<(), LexError> {
        let bytes = self.src.as_bytes();
        let mut i = start + 1;
        loop {
            match bytes.get(i) {
                None => return Err(LexError::UnterminatedString(start)),
                Some(b'\'') if bytes.get(i + 1) == Some(&b'\'') => i += 2,
                Some(b'\'') => break,
                Some(_) => i += 1,
            }
        }
        if bytes.get(i + 1) != Some(&b'!') {
            return Err(LexError::IllegalChar {
                ch: '\'',
                offset: start,
            });
        }
        let addr_end = self
            .cell_address_end(i + 2)
            .ok_or(LexError::IllegalChar {
                ch: '!',
                offset: i + 1,
            })?;
        self.push(TokenKind::CellRef, start, addr_end);
        Ok(())
    }

    fn word(&mut self, start: usize) -> Result<(), LexError> {
        if let Some(end) = self.cell_address_end(start) {
            self.push(TokenKind::CellRef, start, end);
            return Ok(());
        }
        let mut end = start;
        for (i, c) in self.src[start..].char_indices() {
            if i == 0 || is_ident_continue(c) {
                end = start + i + c.len_utf8();
            } else {
                break;
            }
        }
        let word = &self.src[start..end];
        match self.src[end..].chars().next() {
            Some('!') => {
                let addr_end = self
                    .cell_address_end(end + 1)
                    .ok_or(LexError::IllegalChar {
                        ch: '!',
                        offset: end,
                    })?;
                self.push(TokenKind::CellRef, start, addr_end);
            }
            Some('[') => {
                self.push(TokenKind::TableName, start, end);
                self.table_columns()?;
            }
            next => {
                let is_bool = word.eq_ignore_ascii_case("TRUE") || word.eq_ignore_ascii_case("FALSE");
                if is_bool && next != Some('(') {
                    self.push(TokenKind::Bool, start, end);
                } else {
                    self.push(TokenKind::Ident, start, end);
                }
            }
        }
        Ok(())
    }

    /// Lexes `[Col]` or `[[A]:[B]]` right after a table name.
    fn table_columns(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        if self.rest().starts_with("[[") {
            self.push(TokenKind::Punct, start, start + 1);
            loop {
                self.skip_spaces();
                match self.peek() {
                    Some('[') => self.column(self.pos)?,
                    Some(':') => self.push(TokenKind::Punct, self.pos, self.pos + 1),
                    Some(',') => self.push(TokenKind::Punct, self.pos, self.pos + 1),
                    Some(']') => {
                        self.push(TokenKind::Punct, self.pos, self.pos + 1);
                        return Ok(());
                    }
                    _ => return Err(LexError::UnterminatedTableRef(start)),
                }
            }
        } else {
            self.column(start)
        }
    }

    fn skip_spaces(&mut self) {
        while let Some(c) = self.peek() {
            if c == ' ' {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn column(&mut self, start: usize) -> Result<(), LexError> {
        let mut chars = self.src[start + 1..].char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '\'' => {
                    chars.next();
                }
                '[' => return Err(LexError::UnterminatedTableRef(start)),
                ']' => {
                    let end = start + 1 + i + 1;
                    self.push(TokenKind::TableColumn, start, end);
                    return Ok(());
                }
                _ => {}
            }
        }
        Err(LexError::UnterminatedTableRef(start))
    }
}
