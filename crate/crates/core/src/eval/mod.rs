//! Formula evaluation: values, coercion, broadcasting and the interpreter.

pub mod builtins;
pub mod coerce;
pub mod date;
mod env;
mod interp;
pub mod ops;
mod textfmt;
mod value;

pub use builtins::{is_builtin, Args};
pub use env::{Binding, Env, ModuleScope};
pub use interp::{
    evaluate, invoke_closure, Abort, EvalResult, Host, Interp, NoGrid, DEFAULT_RECURSION_LIMIT,
};
pub use textfmt::format_text;
pub use value::{format_general, Array, Closure, Scalar, Value};
