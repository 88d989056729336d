use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::lang::{fold_name, LambdaExpr};

use super::value::{Closure, Value};

#[derive(Debug, Clone)]
pub enum Binding {
    Value(Value),
    /// An optional parameter that received no argument.
    Omitted,
}

struct Frame {
    key: String,
    binding: Binding,
    parent: Option<Arc<Frame>>,
}

/// The definitions of one module, shared by every closure created from it so
/// components can call their siblings by unprefixed name.
#[derive(Debug)]
pub struct ModuleScope {
    pub prefix: String,
    defs: Vec<(String, LambdaExpr)>,
    index: HashMap<String, usize>,
}

impl ModuleScope {
    pub fn new(prefix: &str, defs: impl IntoIterator<Item = (String, LambdaExpr)>) -> Arc<ModuleScope> {
        let defs: Vec<(String, LambdaExpr)> = defs.into_iter().collect();
        let index = defs
            .iter()
            .enumerate()
            .map(|(i, (name, _))| (fold_name(name), i))
            .collect();
        Arc::new(ModuleScope {
            prefix: prefix.to_string(),
            defs,
            index,
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.iter().map(|(n, _)| n.as_str())
    }

    /// A closure for the definition named `name` (case-insensitive), bound to
    /// this scope and nothing else.
    pub fn closure(self: &Arc<Self>, name: &str) -> Option<Value> {
        let &i = self.index.get(&fold_name(name))?;
        let (def_name, lambda) = &self.defs[i];
        Some(Value::Closure(Arc::new(Closure {
            params: lambda.params.clone(),
            body: lambda.body.clone(),
            env: Env::module(self.clone()),
            name: Some(format!("{}.{}", self.prefix, def_name)),
        })))
    }
}

/// Lexical environment: a persistent chain of local bindings plus the module
/// scope of the component being evaluated, if any.
#[derive(Clone, Default)]
pub struct Env {
    locals: Option<Arc<Frame>>,
    module: Option<Arc<ModuleScope>>,
}

impl fmt::Debug for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names = Vec::new();
        let mut cur = self.locals.as_ref();
        while let Some(frame) = cur {
            names.push(frame.key.as_str());
            cur = frame.parent.as_ref();
        }
        f.debug_struct("Env")
            .field("locals", &names)
            .field("module", &self.module.as_ref().map(|m| &m.prefix))
            .finish()
    }
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn module(scope: Arc<ModuleScope>) -> Env {
        Env {
            locals: None,
            module: Some(scope),
        }
    }

    pub fn bind(&self, name: &str, binding: Binding) -> Env {
        Env {
            locals: Some(Arc::new(Frame {
                key: fold_name(name),
                binding,
                parent: self.locals.clone(),
            })),
            module: self.module.clone(),
        }
    }

    pub fn bind_value(&self, name: &str, value: Value) -> Env {
        self.bind(name, Binding::Value(value))
    }

    /// Innermost local binding for an already folded name.
    pub fn local(&self, key: &str) -> Option<&Binding> {
        let mut cur = self.locals.as_ref();
        while let Some(frame) = cur {
            if frame.key == key {
                return Some(&frame.binding);
            }
            cur = frame.parent.as_ref();
        }
        None
    }

    pub fn sibling(&self, name: &str) -> Option<Value> {
        self.module.as_ref()?.closure(name)
    }

    pub fn module_scope(&self) -> Option<&Arc<ModuleScope>> {
        self.module.as_ref()
    }
}
