use super::ast::*;

/// Renders an expression as canonical formula text (no leading `=`).
///
/// Parentheses are emitted only where precedence requires them, so
/// re-parsing the output yields a structurally equal tree. Two shapes have
/// no textual form and are not produced by the parser: negative number
/// literals (they parse as unary minus) and a call whose only argument is
/// omitted (`f()` is a zero-argument call).
pub fn format(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr);
    out
}

/// Canonical rendering of a cell reference, including any sheet prefix.
pub fn format_cell(cell: &CellRef) -> String {
    let mut out = String::new();
    write_cell(&mut out, cell, true);
    out
}

fn write_expr(out: &mut String, expr: &Expr) {
    match &expr.kind {
        ExprKind::Number(n) => out.push_str(&format_number_literal(*n)),
        ExprKind::Text(s) => {
            out.push('"');
            out.push_str(&s.replace('"', "\"\""));
            out.push('"');
        }
        ExprKind::Bool(b) => out.push_str(if *b { "TRUE" } else { "FALSE" }),
        ExprKind::Error(code) => out.push_str(code.as_str()),
        ExprKind::Array(rows) => {
            out.push('{');
            for (r, row) in rows.iter().enumerate() {
                if r > 0 {
                    out.push(';');
                }
                for (c, item) in row.iter().enumerate() {
                    if c > 0 {
                        out.push(',');
                    }
                    write_expr(out, item);
                }
            }
            out.push('}');
        }
        ExprKind::Cell(c) => write_cell(out, c, true),
        ExprKind::Range(a, b) => {
            write_cell(out, a, true);
            out.push(':');
            write_cell(out, b, false);
        }
        ExprKind::Spill(c) => {
            write_cell(out, c, true);
            out.push('#');
        }
        ExprKind::Name(n) => out.push_str(n),
        ExprKind::Structured(s) => {
            out.push_str(&s.table);
            match &s.last {
                None => write_column(out, &s.first),
                Some(last) => {
                    out.push('[');
                    write_column(out, &s.first);
                    out.push(':');
                    write_column(out, last);
                    out.push(']');
                }
            }
        }
        ExprKind::Call { name, args } => {
            out.push_str(name);
            write_args(out, args);
        }
        ExprKind::Invoke { callee, args } => {
            let bare = matches!(
                callee.kind,
                ExprKind::Lambda(_) | ExprKind::Let(_) | ExprKind::Call { .. } | ExprKind::Invoke { .. }
            );
            if bare {
                write_expr(out, callee);
            } else {
                out.push('(');
                write_expr(out, callee);
                out.push(')');
            }
            write_args(out, args);
        }
        ExprKind::Binary { op, left, right } => {
            let prec = op.precedence();
            write_operand(out, left, binary_prec(left).is_some_and(|p| p < prec));
            out.push_str(op.symbol());
            write_operand(out, right, binary_prec(right).is_some_and(|p| p <= prec));
        }
        ExprKind::Unary { op, operand } => match op {
            UnOp::Neg | UnOp::Plus => {
                out.push_str(if *op == UnOp::Neg { "-" } else { "+" });
                write_operand(out, operand, binary_prec(operand).is_some());
            }
            UnOp::Percent => {
                let wrap = matches!(
                    operand.kind,
                    ExprKind::Binary { .. } | ExprKind::Unary { op: UnOp::Neg | UnOp::Plus, .. }
                );
                write_operand(out, operand, wrap);
                out.push('%');
            }
        },
        ExprKind::Let(l) => {
            out.push_str("LET(");
            for (name, value) in &l.bindings {
                out.push_str(&name.name);
                out.push(',');
                write_expr(out, value);
                out.push(',');
            }
            write_expr(out, &l.body);
            out.push(')');
        }
        ExprKind::Lambda(l) => {
            out.push_str("LAMBDA(");
            for p in &l.params {
                if p.optional {
                    out.push('[');
                    out.push_str(&p.name);
                    out.push(']');
                } else {
                    out.push_str(&p.name);
                }
                out.push(',');
            }
            write_expr(out, &l.body);
            out.push(')');
        }
    }
}

fn binary_prec(expr: &Expr) -> Option<u8> {
    match &expr.kind {
        ExprKind::Binary { op, .. } => Some(op.precedence()),
        _ => None,
    }
}

fn write_operand(out: &mut String, expr: &Expr, wrap: bool) {
    if wrap {
        out.push('(');
    }
    write_expr(out, expr);
    if wrap {
        out.push(')');
    }
}

fn write_args(out: &mut String, args: &[Arg]) {
    out.push('(');
    for (i, arg) in args.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        if let Arg::Value(e) = arg {
            write_expr(out, e);
        }
    }
    out.push(')');
}

fn write_column(out: &mut String, name: &str) {
    out.push('[');
    for ch in name.chars() {
        if matches!(ch, '[' | ']' | '#' | '\'') {
            out.push('\'');
        }
        out.push(ch);
    }
    out.push(']');
}

fn write_cell(out: &mut String, cell: &CellRef, with_sheet: bool) {
    if let (true, Some(sheet)) = (with_sheet, &cell.sheet) {
        if sheet_needs_quotes(sheet) {
            out.push('\'');
            out.push_str(&sheet.replace('\'', "''"));
            out.push('\'');
        } else {
            out.push_str(sheet);
        }
        out.push('!');
    }
    if cell.col_abs {
        out.push('$');
    }
    out.push_str(&column_letters(cell.col));
    if cell.row_abs {
        out.push('$');
    }
    out.push_str(&(cell.row + 1).to_string());
}

fn sheet_needs_quotes(sheet: &str) -> bool {
    let mut chars = sheet.chars();
    let plain_start = chars.next().is_some_and(|c| c.is_alphabetic() || c == '_');
    let plain_rest = chars.all(|c| c.is_alphanumeric() || c == '_');
    !(plain_start && plain_rest) || super::parser::parse_address(sheet).is_some()
}

/// Shortest text that parses back to exactly `n`.
fn format_number_literal(n: f64) -> String {
    let s = format!("{n}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_formula;

    fn round(src: &str) -> String {
        format(&parse_formula(src).unwrap())
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(round("=1 + 2"), "1+2");
        assert_eq!(round("LET( x , 1 , x )"), "LET(x,1,x)");
        assert_eq!(round("(1+2)*3"), "(1+2)*3");
        assert_eq!(round("1-(2-3)"), "1-(2-3)");
        assert_eq!(round("(1-2)-3"), "1-2-3");
        assert_eq!(round("2^(3^2)"), "2^(3^2)");
        assert_eq!(round("-(1+2)"), "-(1+2)");
        assert_eq!(round("(-5)%"), "(-5)%");
        assert_eq!(round("LAMBDA(a, [b], a)(1,,3)"), "LAMBDA(a,[b],a)(1,,3)");
        assert_eq!(round("'My Sheet'!A1:B2"), "'My Sheet'!A1:B2");
        assert_eq!(round("'AB1'!C3"), "'AB1'!C3");
        assert_eq!(round("Sheet1!$A$1#"), "Sheet1!$A$1#");
        assert_eq!(round("tblBI[[ID]:[Expense Description]]"), "tblBI[[ID]:[Expense Description]]");
        assert_eq!(round("\"say \"\"hi\"\"\""), "\"say \"\"hi\"\"\"");
        assert_eq!(round("{1,2;3,4.5}"), "{1,2;3,4.5}");
        assert_eq!(round("#value!"), "#VALUE!");
    }

    #[test]
    fn invoke_of_non_call_callee_is_parenthesized() {
        let e = Expr::bare(ExprKind::Invoke {
            callee: Box::new(Expr::bare(ExprKind::Name("f".into()))),
            args: vec![Arg::Value(Expr::bare(ExprKind::Number(1.0)))],
        });
        let text = format(&e);
        assert_eq!(text, "(f)(1)");
        assert_eq!(parse_formula(&text).unwrap(), e);
    }

    #[test]
    fn numbers_round_trip_exactly() {
        for n in [0.0, 1.0, 0.1, 1e-7, 123456789.125, 1e21, f64::MAX] {
            let e = parse_formula(&format_number_literal(n)).unwrap();
            assert_eq!(e.kind, ExprKind::Number(n));
        }
    }
}
