//! Dependency-ordered recalculation with spilling.
//!
//! Formula cells are ordered by their static references (cells, ranges,
//! spill anchors, and anything reachable through defined names). Reference
//! cycles are reported on every member and evaluate to `#REF!`. A reference
//! that lands in a region another formula spills into cannot be seen
//! statically, so such reads are recorded; if any of them reads differently
//! once the pass is complete, the pass is repeated using the previous pass's
//! results for cells not yet recomputed.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use crate::eval::{evaluate, Array, Env, Host, Scalar, Value};
use crate::lang::{fold_name, CellRef, ErrorCode, Expr, ExprKind, StructuredRef, MAX_COLUMNS, MAX_ROWS};

use super::model::{CellKey, Content, Model, NameEntry, Rect};

const MAX_PASSES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub anchor: CellKey,
    pub address: String,
    pub value: Value,
    pub spill: Option<Rect>,
    pub error: Option<ErrorCode>,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Default, Clone)]
pub(crate) struct State {
    /// Placed anchor values: the full array when spilled, `#SPILL!` when
    /// blocked.
    values: HashMap<CellKey, Value>,
    /// Spilled cell to its anchor (the anchor itself is not included).
    owner: HashMap<CellKey, CellKey>,
}

impl State {
    fn settled_read(&self, model: &Model, key: CellKey) -> Scalar {
        if let Some(v) = self.values.get(&key) {
            return top_left(v);
        }
        if let Some(anchor) = self.owner.get(&key) {
            return spilled_element(&self.values[anchor], *anchor, key);
        }
        match model.content(key) {
            Some(Content::Literal(s)) => s.clone(),
            Some(Content::Formula(_)) => Scalar::Blank,
            None => model.table_cell(key).unwrap_or(Scalar::Blank),
        }
    }

    fn settled_spill(&self, model: &Model, key: CellKey) -> Value {
        match self.values.get(&key) {
            Some(Value::Scalar(Scalar::Error(ErrorCode::Spill))) => Value::error(ErrorCode::Ref),
            Some(v) => v.clone(),
            None => match model.content(key) {
                Some(Content::Formula(_)) => Value::error(ErrorCode::Ref),
                _ => Value::error(ErrorCode::Ref),
            },
        }
    }
}

fn top_left(v: &Value) -> Scalar {
    match v {
        Value::Closure(_) => Scalar::Error(ErrorCode::Calc),
        other => other.first(),
    }
}

fn spilled_element(v: &Value, anchor: CellKey, key: CellKey) -> Scalar {
    match v {
        Value::Array(a) => a.get((key.row - anchor.row) as usize, (key.col - anchor.col) as usize).clone(),
        other => top_left(other),
    }
}

/// The outcome of a recalculation.
#[derive(Debug, Default)]
pub struct Computed {
    pub results: BTreeMap<CellKey, CellResult>,
    pub(crate) state: State,
    pub passes: usize,
}

impl Computed {
    /// State for evaluating against a workbook without recalculating.
    pub fn empty() -> Computed {
        Computed::default()
    }

    pub fn value_at(&self, model: &Model, key: CellKey) -> Scalar {
        self.state.settled_read(model, key)
    }

    /// The used region of a sheet (cells, tables and spills) as an array,
    /// together with its top-left key. `None` for an empty sheet.
    pub fn sheet_grid(&self, model: &Model, sheet: usize) -> Option<(CellKey, Value)> {
        let mut keys: Vec<CellKey> = model.sheets[sheet]
            .cells
            .keys()
            .map(|&(r, c)| CellKey::new(sheet, r, c))
            .collect();
        keys.extend(self.state.owner.keys().filter(|k| k.sheet == sheet).copied());
        for t in model.tables.iter().filter(|t| t.sheet == sheet) {
            let region = t.region();
            keys.push(CellKey::new(sheet, region.row, region.col));
            keys.push(CellKey::new(sheet, region.row + region.rows - 1, region.col + region.cols - 1));
        }
        let r0 = keys.iter().map(|k| k.row).min()?;
        let c0 = keys.iter().map(|k| k.col).min()?;
        let r1 = keys.iter().map(|k| k.row).max()?;
        let c1 = keys.iter().map(|k| k.col).max()?;
        let rows = (r1 - r0 + 1) as usize;
        let cols = (c1 - c0 + 1) as usize;
        let array = Array::from_fn(rows, cols, |r, c| {
            self.value_at(model, CellKey::new(sheet, r0 + r as u32, c0 + c as u32))
        });
        Some((CellKey::new(sheet, r0, c0), Value::from_array(array)))
    }

    /// Every cell, spilled or not, whose computed value is an error.
    pub fn error_cells(&self) -> Vec<(CellKey, ErrorCode)> {
        let mut out = Vec::new();
        for (key, result) in &self.results {
            let origin = *key;
            match &result.value {
                Value::Array(a) => {
                    for r in 0..a.rows() {
                        for c in 0..a.cols() {
                            if let Scalar::Error(e) = a.get(r, c) {
                                out.push((CellKey::new(key.sheet, origin.row + r as u32, origin.col + c as u32), *e));
                            }
                        }
                    }
                }
                v => {
                    if let Some(e) = v.scalar_error() {
                        out.push((origin, e));
                    }
                }
            }
        }
        out
    }
}

/// One recorded read whose answer may change once later cells are placed.
struct Probe {
    key: CellKey,
    spill: bool,
    seen: Value,
}

/// The grid as seen by one evaluation.
pub(crate) struct View<'a> {
    model: &'a Model,
    state: &'a State,
    /// Results of the previous pass, read for cells not yet placed.
    prev: Option<&'a State>,
    /// True while a pass is in progress; unplaced reads are then uncertain.
    live: bool,
    sheet: usize,
    probes: RefCell<Vec<Probe>>,
    active_names: RefCell<Vec<String>>,
}

impl<'a> View<'a> {
    pub(crate) fn settled(model: &'a Model, computed: &'a Computed, sheet: usize) -> View<'a> {
        View {
            model,
            state: &computed.state,
            prev: None,
            live: false,
            sheet,
            probes: RefCell::new(Vec::new()),
            active_names: RefCell::new(Vec::new()),
        }
    }

    fn key(&self, cell: &CellRef) -> Option<CellKey> {
        let sheet = match &cell.sheet {
            Some(name) => self.model.sheet_id(name)?,
            None => self.sheet,
        };
        Some(CellKey::new(sheet, cell.row, cell.col))
    }

    fn placed(&self, key: CellKey) -> bool {
        self.state.values.contains_key(&key) || self.state.owner.contains_key(&key)
    }

    fn read(&self, key: CellKey) -> Scalar {
        if !self.live || self.placed(key) {
            return self.state.settled_read(self.model, key);
        }
        match self.model.content(key) {
            Some(Content::Literal(s)) => return s.clone(),
            None => {
                if let Some(s) = self.model.table_cell(key) {
                    return s;
                }
            }
            Some(Content::Formula(_)) => {}
        }
        let seen = match self.prev {
            Some(prev) => prev.settled_read(self.model, key),
            None => Scalar::Blank,
        };
        self.probes.borrow_mut().push(Probe {
            key,
            spill: false,
            seen: Value::Scalar(seen.clone()),
        });
        seen
    }

    fn eval_name(&self, key: &str, entry: &NameEntry) -> Value {
        match entry {
            NameEntry::Component { scope, definition, .. } => {
                scope.closure(definition).unwrap_or(Value::error(ErrorCode::Name))
            }
            NameEntry::Formula { formula, .. } => {
                let Ok(expr) = &formula.expr else {
                    return Value::error(ErrorCode::Name);
                };
                if self.active_names.borrow().iter().any(|n| n == key) {
                    return Value::error(ErrorCode::Ref);
                }
                self.active_names.borrow_mut().push(key.to_string());
                let v = evaluate(expr, &Env::new(), self);
                self.active_names.borrow_mut().pop();
                v
            }
        }
    }

    fn table_name_value(&self, key: &str) -> Option<Value> {
        let table = self.model.table(key)?;
        if table.rows.is_empty() {
            return Some(Value::error(ErrorCode::Calc));
        }
        Some(Value::from_rows(
            table
                .rows
                .iter()
                .map(|r| (0..table.columns.len()).map(|c| r.get(c).cloned().unwrap_or(Scalar::Blank)).collect())
                .collect(),
        ))
    }
}

impl Host for View<'_> {
    fn cell(&self, cell: &CellRef) -> Value {
        match self.key(cell) {
            Some(k) => Value::Scalar(self.read(k)),
            None => Value::error(ErrorCode::Ref),
        }
    }

    fn range(&self, first: &CellRef, last: &CellRef) -> Value {
        let (Some(a), Some(b)) = (self.key(first), self.key(&CellRef { sheet: first.sheet.clone(), ..last.clone() })) else {
            return Value::error(ErrorCode::Ref);
        };
        let (r0, r1) = (a.row.min(b.row), a.row.max(b.row));
        let (c0, c1) = (a.col.min(b.col), a.col.max(b.col));
        let rows = (r1 - r0 + 1) as usize;
        let cols = (c1 - c0 + 1) as usize;
        if rows.saturating_mul(cols) > 4_000_000 {
            return Value::error(ErrorCode::Num);
        }
        Value::from_array(Array::from_fn(rows, cols, |r, c| {
            self.read(CellKey::new(a.sheet, r0 + r as u32, c0 + c as u32))
        }))
    }

    fn spill(&self, anchor: &CellRef) -> Value {
        let Some(key) = self.key(anchor) else {
            return Value::error(ErrorCode::Ref);
        };
        if !self.live || self.state.values.contains_key(&key) {
            return self.state.settled_spill(self.model, key);
        }
        let seen = match self.prev {
            Some(prev) => prev.settled_spill(self.model, key),
            None => Value::error(ErrorCode::Ref),
        };
        self.probes.borrow_mut().push(Probe {
            key,
            spill: true,
            seen: seen.clone(),
        });
        seen
    }

    fn structured(&self, reference: &StructuredRef) -> Value {
        let Some(table) = self.model.table(&reference.table) else {
            return Value::error(ErrorCode::Name);
        };
        let Some(first) = table.column(&reference.first) else {
            return Value::error(ErrorCode::Name);
        };
        let last = match &reference.last {
            Some(name) => match table.column(name) {
                Some(c) => c,
                None => return Value::error(ErrorCode::Name),
            },
            None => first,
        };
        let (c0, c1) = (first.min(last), first.max(last));
        if table.rows.is_empty() {
            return Value::error(ErrorCode::Calc);
        }
        Value::from_rows(
            table
                .rows
                .iter()
                .map(|row| (c0..=c1).map(|c| row.get(c).cloned().unwrap_or(Scalar::Blank)).collect())
                .collect(),
        )
    }

    fn name(&self, key: &str) -> Option<Value> {
        match self.model.names.get(key) {
            Some(entry) => Some(self.eval_name(key, entry)),
            None => self.table_name_value(key),
        }
    }

    fn recursion_limit(&self) -> usize {
        self.model.limit
    }
}

/// Static dependencies of a formula: the formula cells it may read.
fn dependencies(model: &Model, sheet: usize, expr: &Expr) -> Vec<CellKey> {
    let mut out = HashSet::new();
    let mut seen_names = HashSet::new();
    let mut locals = Vec::new();
    collect(model, sheet, expr, &mut locals, &mut seen_names, &mut out);
    let mut deps: Vec<CellKey> = out.into_iter().collect();
    deps.sort();
    deps
}

fn collect(
    model: &Model,
    sheet: usize,
    expr: &Expr,
    locals: &mut Vec<String>,
    seen_names: &mut HashSet<String>,
    out: &mut HashSet<CellKey>,
) {
    let key_of = |c: &CellRef| -> Option<CellKey> {
        let s = match &c.sheet {
            Some(n) => model.sheet_id(n)?,
            None => sheet,
        };
        Some(CellKey::new(s, c.row, c.col))
    };
    let is_formula = |k: CellKey| matches!(model.content(k), Some(Content::Formula(_)));
    let follow_name = |name: &str, locals: &Vec<String>, seen: &mut HashSet<String>, out: &mut HashSet<CellKey>| {
        let key = fold_name(name);
        if locals.contains(&key) || !seen.insert(key.clone()) {
            return;
        }
        if let Some(NameEntry::Formula { formula: f, .. }) = model.names.get(&key) {
            if let Ok(e) = &f.expr {
                let mut inner = Vec::new();
                collect(model, sheet, e, &mut inner, seen, out);
            }
        }
    };
    match &expr.kind {
        ExprKind::Cell(c) | ExprKind::Spill(c) => {
            if let Some(k) = key_of(c) {
                if is_formula(k) {
                    out.insert(k);
                }
            }
        }
        ExprKind::Range(a, b) => {
            if let (Some(ka), Some(kb)) = (key_of(a), key_of(&CellRef { sheet: a.sheet.clone(), ..b.clone() })) {
                let rect = Rect {
                    sheet: ka.sheet,
                    row: ka.row.min(kb.row),
                    col: ka.col.min(kb.col),
                    rows: ka.row.abs_diff(kb.row) + 1,
                    cols: ka.col.abs_diff(kb.col) + 1,
                };
                for (&(r, c), content) in &model.sheets[ka.sheet].cells {
                    let k = CellKey::new(ka.sheet, r, c);
                    if matches!(content, Content::Formula(_)) && rect.contains(k) {
                        out.insert(k);
                    }
                }
            }
        }
        ExprKind::Name(n) => follow_name(n, locals, seen_names, out),
        ExprKind::Call { name, .. } => {
            follow_name(name, locals, seen_names, out);
            for child in expr.children() {
                collect(model, sheet, child, locals, seen_names, out);
            }
        }
        ExprKind::Let(l) => {
            let mark = locals.len();
            for (name, value) in &l.bindings {
                collect(model, sheet, value, locals, seen_names, out);
                locals.push(fold_name(&name.name));
            }
            collect(model, sheet, &l.body, locals, seen_names, out);
            locals.truncate(mark);
        }
        ExprKind::Lambda(l) => {
            let mark = locals.len();
            locals.extend(l.params.iter().map(|p| fold_name(&p.name)));
            collect(model, sheet, &l.body, locals, seen_names, out);
            locals.truncate(mark);
        }
        _ => {
            for child in expr.children() {
                collect(model, sheet, child, locals, seen_names, out);
            }
        }
    }
}

/// Tarjan's algorithm. Components come out dependencies-first.
struct Tarjan<'g> {
    graph: &'g HashMap<CellKey, Vec<CellKey>>,
    index: HashMap<CellKey, usize>,
    low: HashMap<CellKey, usize>,
    stack: Vec<CellKey>,
    on_stack: HashSet<CellKey>,
    next: usize,
    components: Vec<Vec<CellKey>>,
}

impl Tarjan<'_> {
    fn visit(&mut self, v: CellKey) {
        stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || {
            self.index.insert(v, self.next);
            self.low.insert(v, self.next);
            self.next += 1;
            self.stack.push(v);
            self.on_stack.insert(v);
            for &w in &self.graph[&v] {
                if !self.index.contains_key(&w) {
                    self.visit(w);
                    let lw = self.low[&w];
                    let lv = self.low.get_mut(&v).expect("visited");
                    *lv = (*lv).min(lw);
                } else if self.on_stack.contains(&w) {
                    let iw = self.index[&w];
                    let lv = self.low.get_mut(&v).expect("visited");
                    *lv = (*lv).min(iw);
                }
            }
            if self.low[&v] == self.index[&v] {
                let mut component = Vec::new();
                loop {
                    let w = self.stack.pop().expect("component member");
                    self.on_stack.remove(&w);
                    component.push(w);
                    if w == v {
                        break;
                    }
                }
                component.sort();
                self.components.push(component);
            }
        })
    }
}

/// Places an anchor's value, spilling arrays when the target region is free.
fn place(model: &Model, state: &mut State, anchor: CellKey, value: Value) -> (Value, Option<Rect>) {
    let value = match value {
        Value::Closure(_) => Value::error(ErrorCode::Calc),
        v => v,
    };
    let Value::Array(a) = &value else {
        state.values.insert(anchor, value.clone());
        return (value, None);
    };
    let rect = Rect {
        sheet: anchor.sheet,
        row: anchor.row,
        col: anchor.col,
        rows: a.rows() as u32,
        cols: a.cols() as u32,
    };
    let in_bounds = (rect.row as u64 + rect.rows as u64) <= MAX_ROWS as u64
        && (rect.col as u64 + rect.cols as u64) <= MAX_COLUMNS as u64;
    let blocked = !in_bounds
        || rect.keys().any(|k| {
            k != anchor
                && (model.content(k).is_some()
                    || state.owner.contains_key(&k)
                    || state.values.contains_key(&k)
                    || model.table_cell(k).is_some())
        });
    if blocked {
        let v = Value::error(ErrorCode::Spill);
        state.values.insert(anchor, v.clone());
        return (v, None);
    }
    for k in rect.keys() {
        if k != anchor {
            state.owner.insert(k, anchor);
        }
    }
    state.values.insert(anchor, value.clone());
    (value, Some(rect))
}

/// Recalculates every formula in the workbook.
pub fn recalculate(model: &Model) -> Computed {
    let formulas = model.formula_cells();
    let mut graph: HashMap<CellKey, Vec<CellKey>> = HashMap::new();
    let mut exprs: HashMap<CellKey, Result<Arc<Expr>, String>> = HashMap::new();
    for &key in &formulas {
        let Some(Content::Formula(f)) = model.content(key) else {
            unreachable!("formula_cells yields formulas");
        };
        let deps = match &f.expr {
            Ok(e) => {
                exprs.insert(key, Ok(e.clone()));
                dependencies(model, key.sheet, e)
            }
            Err(err) => {
                exprs.insert(key, Err(err.to_string()));
                Vec::new()
            }
        };
        graph.insert(key, deps);
    }

    let mut tarjan = Tarjan {
        graph: &graph,
        index: HashMap::new(),
        low: HashMap::new(),
        stack: Vec::new(),
        on_stack: HashSet::new(),
        next: 0,
        components: Vec::new(),
    };
    for &key in &formulas {
        if !tarjan.index.contains_key(&key) {
            tarjan.visit(key);
        }
    }
    let components = tarjan.components;

    let mut order = Vec::new();
    let mut cyclic: BTreeMap<CellKey, String> = BTreeMap::new();
    for component in &components {
        let self_loop = component.len() == 1 && graph[&component[0]].contains(&component[0]);
        if component.len() > 1 || self_loop {
            let members: Vec<String> = component.iter().map(|k| model.address(*k)).collect();
            let note = format!("circular reference: {}", members.join(", "));
            for &k in component {
                cyclic.insert(k, note.clone());
            }
        } else {
            order.push(component[0]);
        }
    }

    let mut prev: Option<State> = None;
    let mut passes = 0;
    loop {
        passes += 1;
        let mut state = State::default();
        let mut results = BTreeMap::new();
        let mut probes: Vec<Probe> = Vec::new();
        for (&key, note) in &cyclic {
            let (value, _) = place(model, &mut state, key, Value::error(ErrorCode::Ref));
            results.insert(key, CellResult {
                anchor: key,
                address: model.address(key),
                value,
                spill: None,
                error: Some(ErrorCode::Ref),
                diagnostic: Some(note.clone()),
            });
        }
        for &key in &order {
            let (raw, diagnostic) = match &exprs[&key] {
                Ok(expr) => {
                    let view = View {
                        model,
                        state: &state,
                        prev: prev.as_ref(),
                        live: true,
                        sheet: key.sheet,
                        probes: RefCell::new(Vec::new()),
                        active_names: RefCell::new(Vec::new()),
                    };
                    let v = evaluate(expr, &Env::new(), &view);
                    probes.extend(view.probes.into_inner());
                    (v, None)
                }
                Err(msg) => (Value::error(ErrorCode::Value), Some(format!("parse error: {msg}"))),
            };
            let (value, spill) = place(model, &mut state, key, raw);
            let error = value.scalar_error();
            let diagnostic = diagnostic.or_else(|| {
                (error == Some(ErrorCode::Spill)).then(|| "spill range is not empty".to_string())
            });
            results.insert(key, CellResult {
                anchor: key,
                address: model.address(key),
                value,
                spill,
                error,
                diagnostic,
            });
        }
        let settled = probes.iter().all(|p| {
            let now = if p.spill {
                state.settled_spill(model, p.key)
            } else {
                Value::Scalar(state.settled_read(model, p.key))
            };
            now == p.seen
        });
        if settled || passes >= MAX_PASSES {
            return Computed { results, state, passes };
        }
        prev = Some(state);
    }
}
