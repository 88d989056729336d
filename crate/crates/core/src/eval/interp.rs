use std::cell::Cell;
use std::sync::Arc;

use crate::lang::{fold_name, Arg, CellRef, ErrorCode, Expr, ExprKind, StructuredRef};

use super::builtins;
use super::coerce::{to_bool, to_int};
use super::env::{Binding, Env};
use super::ops::{apply_binary, apply_unary, map_n};
use super::value::{Array, Closure, Scalar, Value};

pub const DEFAULT_RECURSION_LIMIT: usize = 1024;

/// Grid and name resolution supplied by the surrounding workbook.
pub trait Host {
    fn cell(&self, cell: &CellRef) -> Value;
    fn range(&self, first: &CellRef, last: &CellRef) -> Value;
    fn spill(&self, anchor: &CellRef) -> Value;
    fn structured(&self, reference: &StructuredRef) -> Value;
    /// Value of a workbook-level name, looked up by its folded key.
    fn name(&self, key: &str) -> Option<Value>;
    fn recursion_limit(&self) -> usize {
        DEFAULT_RECURSION_LIMIT
    }
}

/// A host with no grid: every reference is `#REF!` and no names exist.
pub struct NoGrid;

impl Host for NoGrid {
    fn cell(&self, _: &CellRef) -> Value {
        Value::error(ErrorCode::Ref)
    }
    fn range(&self, _: &CellRef, _: &CellRef) -> Value {
        Value::error(ErrorCode::Ref)
    }
    fn spill(&self, _: &CellRef) -> Value {
        Value::error(ErrorCode::Ref)
    }
    fn structured(&self, _: &StructuredRef) -> Value {
        Value::error(ErrorCode::Ref)
    }
    fn name(&self, _: &str) -> Option<Value> {
        None
    }
}

/// Non-local exit from an evaluation. Exceeding the recursion limit unwinds
/// the whole formula instead of producing an error value at each level, so
/// a runaway recursion costs one descent rather than an exponential tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Abort {
    RecursionLimit,
}

pub type EvalResult = Result<Value, Abort>;

pub struct Interp<'h> {
    host: &'h dyn Host,
    depth: Cell<usize>,
    limit: usize,
}

/// Evaluates an expression to a value. Recursion beyond the host's limit
/// yields `#NUM!`.
pub fn evaluate(expr: &Expr, env: &Env, host: &dyn Host) -> Value {
    Interp::new(host).eval_top(expr, env)
}

/// Invokes a closure on arguments (`None` marks an omitted argument).
pub fn invoke_closure(closure: &Closure, args: Vec<Option<Value>>, host: &dyn Host) -> Value {
    let interp = Interp::new(host);
    interp.invoke(closure, args).unwrap_or(Value::error(ErrorCode::Num))
}

impl<'h> Interp<'h> {
    pub fn new(host: &'h dyn Host) -> Self {
        Interp {
            host,
            depth: Cell::new(0),
            limit: host.recursion_limit(),
        }
    }

    pub fn host(&self) -> &dyn Host {
        self.host
    }

    pub fn eval_top(&self, expr: &Expr, env: &Env) -> Value {
        self.eval(expr, env).unwrap_or(Value::error(ErrorCode::Num))
    }

    pub fn eval(&self, expr: &Expr, env: &Env) -> EvalResult {
        stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || self.eval_inner(expr, env))
    }

    fn eval_inner(&self, expr: &Expr, env: &Env) -> EvalResult {
        Ok(match &expr.kind {
            ExprKind::Number(n) => Value::num(*n),
            ExprKind::Text(s) => Value::text(s.as_str()),
            ExprKind::Bool(b) => Value::bool(*b),
            ExprKind::Error(e) => Value::error(*e),
            ExprKind::Array(rows) => {
                let cols = rows[0].len();
                let mut cells = Vec::with_capacity(rows.len() * cols);
                for item in rows.iter().flatten() {
                    cells.push(match self.eval(item, env)? {
                        Value::Scalar(s) => s,
                        _ => Scalar::Error(ErrorCode::Value),
                    });
                }
                Value::from_array(Array::new(rows.len(), cols, cells))
            }
            ExprKind::Cell(c) => self.host.cell(c),
            ExprKind::Range(a, b) => self.host.range(a, b),
            ExprKind::Spill(c) => self.host.spill(c),
            ExprKind::Structured(s) => self.host.structured(s),
            ExprKind::Name(name) => match self.lookup(name, env) {
                Some(Binding::Value(v)) => v,
                Some(Binding::Omitted) => Value::BLANK,
                None => Value::error(ErrorCode::Name),
            },
            ExprKind::Call { name, args } => return self.call(name, args, env),
            ExprKind::Invoke { callee, args } => {
                let callee = self.eval(callee, env)?;
                return self.apply(&callee, args, env);
            }
            ExprKind::Binary { op, left, right } => {
                let l = self.eval(left, env)?;
                let r = self.eval(right, env)?;
                apply_binary(*op, &l, &r)
            }
            ExprKind::Unary { op, operand } => apply_unary(*op, &self.eval(operand, env)?),
            ExprKind::Let(l) => {
                let mut scope = env.clone();
                for (name, value) in &l.bindings {
                    let v = self.eval(value, &scope)?;
                    scope = scope.bind_value(&name.name, v);
                }
                return self.eval(&l.body, &scope);
            }
            ExprKind::Lambda(l) => Value::Closure(Arc::new(Closure {
                params: l.params.clone(),
                body: l.body.clone(),
                env: env.clone(),
                name: None,
            })),
        })
    }

    /// Locals, then sibling components, then workbook names.
    fn lookup(&self, name: &str, env: &Env) -> Option<Binding> {
        let key = fold_name(name);
        if let Some(b) = env.local(&key) {
            return Some(b.clone());
        }
        if let Some(v) = env.sibling(name) {
            return Some(Binding::Value(v));
        }
        self.host.name(&key).map(Binding::Value)
    }

    /// Evaluates call arguments; an omitted argument, or a bare name bound
    /// to an omitted parameter, becomes `None`.
    pub fn eval_args(&self, args: &[Arg], env: &Env) -> Result<Vec<Option<Value>>, Abort> {
        args.iter()
            .map(|arg| match arg {
                Arg::Omitted => Ok(None),
                Arg::Value(e) => {
                    if let ExprKind::Name(n) = &e.kind {
                        if let Some(Binding::Omitted) = env.local(&fold_name(n)) {
                            return Ok(None);
                        }
                    }
                    self.eval(e, env).map(Some)
                }
            })
            .collect()
    }

    fn apply(&self, callee: &Value, args: &[Arg], env: &Env) -> EvalResult {
        match callee {
            Value::Closure(c) => {
                let values = self.eval_args(args, env)?;
                self.invoke(c, values)
            }
            Value::Scalar(Scalar::Error(e)) => Ok(Value::error(*e)),
            _ => Ok(Value::error(ErrorCode::Calc)),
        }
    }

    fn call(&self, name: &str, args: &[Arg], env: &Env) -> EvalResult {
        match self.lookup(name, env) {
            Some(Binding::Value(callee)) => return self.apply(&callee, args, env),
            Some(Binding::Omitted) => return Ok(Value::error(ErrorCode::Calc)),
            None => {}
        }
        let key = fold_name(name);
        match key.as_str() {
            "if" => self.special_if(args, env),
            "iferror" => self.special_iferror(args, env),
            "choose" => self.special_choose(args, env),
            "isomitted" => Ok(self.special_isomitted(args, env)),
            _ => {
                let Some(f) = builtins::lookup(&key) else {
                    return Ok(Value::error(ErrorCode::Name));
                };
                let values = self.eval_args(args, env)?;
                f(self, &builtins::Args::new(values))
            }
        }
    }

    pub fn invoke(&self, closure: &Closure, args: Vec<Option<Value>>) -> EvalResult {
        if args.len() > closure.params.len() {
            return Ok(Value::error(ErrorCode::Value));
        }
        let mut env = closure.env.clone();
        let supplied = args.len();
        let mut args = args.into_iter();
        for (i, param) in closure.params.iter().enumerate() {
            let binding = match args.next().flatten() {
                Some(v) => Binding::Value(v),
                None if i < supplied || param.optional => Binding::Omitted,
                None => return Ok(Value::error(ErrorCode::Value)),
            };
            env = env.bind(&param.name, binding);
        }
        let depth = self.depth.get() + 1;
        if depth > self.limit {
            return Err(Abort::RecursionLimit);
        }
        self.depth.set(depth);
        let result = self.eval(&closure.body, &env);
        self.depth.set(depth - 1);
        result
    }

    fn special_if(&self, args: &[Arg], env: &Env) -> EvalResult {
        if !(2..=3).contains(&args.len()) {
            return Ok(Value::error(ErrorCode::Value));
        }
        let cond = match &args[0] {
            Arg::Omitted => Value::bool(false),
            Arg::Value(e) => self.eval(e, env)?,
        };
        let branch = |i: usize| -> EvalResult {
            match args.get(i) {
                None => Ok(Value::bool(false)),
                Some(Arg::Omitted) => Ok(Value::num(0.0)),
                Some(Arg::Value(e)) => {
                    let v = self.eval(e, env)?;
                    Ok(match v {
                        Value::Scalar(Scalar::Blank) => Value::num(0.0),
                        other => other,
                    })
                }
            }
        };
        match cond {
            Value::Scalar(s) => match to_bool(&s) {
                Ok(true) => branch(1),
                Ok(false) => branch(2),
                Err(e) => Ok(Value::error(e)),
            },
            Value::Closure(_) => Ok(Value::error(ErrorCode::Calc)),
            cond @ Value::Array(_) => {
                let yes = branch(1)?;
                let no = branch(2)?;
                Ok(map_n(&[&cond, &yes, &no], |s| match to_bool(&s[0]) {
                    Ok(true) => s[1].clone(),
                    Ok(false) => s[2].clone(),
                    Err(e) => Scalar::Error(e),
                }))
            }
        }
    }

    fn special_iferror(&self, args: &[Arg], env: &Env) -> EvalResult {
        if args.len() != 2 {
            return Ok(Value::error(ErrorCode::Value));
        }
        let alt = |this: &Self| -> EvalResult {
            match &args[1] {
                Arg::Omitted => Ok(Value::num(0.0)),
                Arg::Value(e) => this.eval(e, env),
            }
        };
        let value = match &args[0] {
            Arg::Omitted => Value::num(0.0),
            Arg::Value(e) => self.eval(e, env)?,
        };
        match &value {
            Value::Scalar(Scalar::Error(_)) => alt(self),
            Value::Array(a) if a.cells().iter().any(Scalar::is_error) => {
                let alt = alt(self)?;
                Ok(map_n(&[&value, &alt], |s| {
                    if s[0].is_error() {
                        s[1].clone()
                    } else {
                        s[0].clone()
                    }
                }))
            }
            _ => Ok(value),
        }
    }

    fn special_choose(&self, args: &[Arg], env: &Env) -> EvalResult {
        if args.len() < 2 {
            return Ok(Value::error(ErrorCode::Value));
        }
        let index = match &args[0] {
            Arg::Omitted => return Ok(Value::error(ErrorCode::Value)),
            Arg::Value(e) => self.eval(e, env)?,
        };
        let choices = &args[1..];
        let pick = |this: &Self, i: i64| -> EvalResult {
            if i < 1 || i as usize > choices.len() {
                return Ok(Value::error(ErrorCode::Value));
            }
            match &choices[i as usize - 1] {
                Arg::Omitted => Ok(Value::num(0.0)),
                Arg::Value(e) => this.eval(e, env),
            }
        };
        match &index {
            Value::Scalar(s) => match to_int(s) {
                Ok(i) => pick(self, i),
                Err(e) => Ok(Value::error(e)),
            },
            Value::Closure(_) => Ok(Value::error(ErrorCode::Calc)),
            Value::Array(_) => {
                let mut values = vec![index.clone()];
                for i in 1..=choices.len() as i64 {
                    values.push(pick(self, i)?);
                }
                let refs: Vec<&Value> = values.iter().collect();
                Ok(map_n(&refs, |s| match to_int(&s[0]) {
                    Ok(i) if i >= 1 && (i as usize) < s.len() => s[i as usize].clone(),
                    Ok(_) => Scalar::Error(ErrorCode::Value),
                    Err(e) => Scalar::Error(e),
                }))
            }
        }
    }

    fn special_isomitted(&self, args: &[Arg], env: &Env) -> Value {
        match args {
            [Arg::Value(e)] => match &e.kind {
                ExprKind::Name(n) => {
                    Value::bool(matches!(env.local(&fold_name(n)), Some(Binding::Omitted)))
                }
                _ => Value::bool(false),
            },
            _ => Value::error(ErrorCode::Value),
        }
    }
}
