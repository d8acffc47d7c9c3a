//! Runtime data model: values, the store, the program database, and thread
//! pools, plus expression evaluation and parameter substitution.
//!
//! The store starts empty and is only ever written by assignment statements;
//! an update replaces any previous binding for the same location. All types
//! here are value-semantic: the engine clones them freely and the explorer
//! forks them per schedule branch.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::syntax::{Expr, LValue, Statement};

/// A runtime value: a 64-bit integer or an interned symbol such as `tom`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    Sym(String),
}

impl Value {
    pub fn symbol(name: impl Into<String>) -> Self {
        Value::Sym(name.into())
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            Value::Sym(_) => None,
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Value::Int(n) => json!(n),
            Value::Sym(s) => json!(s),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Sym(s) => f.write_str(s),
        }
    }
}

/// A store location: a plain variable or an array element with a concrete
/// integer index. Indices are resolved to integers before any store access.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Location {
    Var(String),
    Elem(String, i64),
}

impl Location {
    pub fn var(name: impl Into<String>) -> Self {
        Location::Var(name.into())
    }

    pub fn elem(base: impl Into<String>, index: i64) -> Self {
        Location::Elem(base.into(), index)
    }

    pub fn name(&self) -> &str {
        match self {
            Location::Var(name) | Location::Elem(name, _) => name,
        }
    }

    fn index(&self) -> Option<i64> {
        match self {
            Location::Var(_) => None,
            Location::Elem(_, i) => Some(*i),
        }
    }
}

// Canonical order: by name, plain variables before array elements of the
// same name, elements by numeric index. The store's text and JSON forms
// inherit this order.
impl Ord for Location {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name()
            .cmp(other.name())
            .then(self.index().cmp(&other.index()))
    }
}

impl PartialOrd for Location {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Var(name) => f.write_str(name),
            Location::Elem(base, index) => write!(f, "{base}[{index}]"),
        }
    }
}

/// The machine state θ: a finite map from locations to values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Store {
    bindings: BTreeMap<Location, Value>,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    pub fn get(&self, loc: &Location) -> Option<&Value> {
        self.bindings.get(loc)
    }

    /// Bind `loc` to `value`, replacing any previous binding. Returns the
    /// replaced value, if any.
    pub fn insert(&mut self, loc: Location, value: Value) -> Option<Value> {
        self.bindings.insert(loc, value)
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Location, &Value)> {
        self.bindings.iter()
    }

    /// JSON form: an object mapping `"x"` / `"list[2]"` to a number or
    /// string, in canonical location order.
    pub fn to_json(&self) -> Json {
        let mut map = serde_json::Map::new();
        for (loc, value) in &self.bindings {
            map.insert(loc.to_string(), value.to_json());
        }
        Json::Object(map)
    }
}

impl FromIterator<(Location, Value)> for Store {
    fn from_iter<T: IntoIterator<Item = (Location, Value)>>(iter: T) -> Self {
        Store {
            bindings: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for Store {
    /// Canonical text form: `{x=1, list[2]=tom}` with locations sorted.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (loc, value)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{loc}={value}")?;
        }
        f.write_str("}")
    }
}

/// A procedure definition (D-formula): `proc name(params) = body`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Definition {
    pub name: String,
    pub params: Vec<String>,
    pub body: Statement,
}

impl fmt::Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "proc {}(", self.name)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(p)?;
        }
        write!(f, ") = {}", self.body)
    }
}

/// The program database: the (immutable) definitions plus the mutable store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramDB {
    defs: Arc<Vec<Definition>>,
    pub store: Store,
}

impl ProgramDB {
    /// A database with the given definitions and an empty store.
    pub fn new(definitions: Vec<Definition>) -> Self {
        ProgramDB {
            defs: Arc::new(definitions),
            store: Store::new(),
        }
    }

    pub fn with_store(definitions: Vec<Definition>, store: Store) -> Self {
        ProgramDB {
            defs: Arc::new(definitions),
            store,
        }
    }

    pub fn definitions(&self) -> &[Definition] {
        &self.defs
    }
}

/// Identifies a thread; assigned by position in `main` and stable for the
/// whole run (a call's body replaces the call in place, it never spawns).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThreadId(pub usize);

impl fmt::Display for ThreadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One thread: its id and the statements it still has to run, front first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thread {
    pub id: ThreadId,
    continuation: Vec<Statement>,
}

impl Thread {
    pub fn new(id: ThreadId, continuation: Vec<Statement>) -> Self {
        Thread { id, continuation }
    }

    pub fn is_complete(&self) -> bool {
        self.continuation.is_empty()
    }

    /// The statement the thread would run next.
    pub fn next_statement(&self) -> Option<&Statement> {
        self.continuation.first()
    }

    pub fn continuation(&self) -> &[Statement] {
        &self.continuation
    }

    pub(crate) fn pop_next(&mut self) -> Option<Statement> {
        if self.continuation.is_empty() {
            None
        } else {
            Some(self.continuation.remove(0))
        }
    }

    pub(crate) fn push_next(&mut self, stmt: Statement) {
        self.continuation.insert(0, stmt);
    }
}

/// The ordered pool of live threads. Order matters: it is the positional
/// context the scheduler chooses from, and completed threads are removed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ThreadPool {
    threads: Vec<Thread>,
}

impl ThreadPool {
    pub fn new(threads: Vec<Thread>) -> Self {
        ThreadPool { threads }
    }

    /// Build the initial pool: one thread per statement of `main`, ids
    /// assigned by position.
    pub fn from_main(main: &[Statement]) -> Self {
        ThreadPool {
            threads: main
                .iter()
                .enumerate()
                .map(|(i, stmt)| Thread::new(ThreadId(i), vec![stmt.clone()]))
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.threads.is_empty()
    }

    pub fn len(&self) -> usize {
        self.threads.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Thread> {
        self.threads.iter()
    }

    pub fn get(&self, id: ThreadId) -> Option<&Thread> {
        self.threads.iter().find(|t| t.id == id)
    }

    pub(crate) fn get_mut(&mut self, id: ThreadId) -> Option<&mut Thread> {
        self.threads.iter_mut().find(|t| t.id == id)
    }

    pub(crate) fn remove(&mut self, id: ThreadId) {
        self.threads.retain(|t| t.id != id);
    }
}

/// Errors raised by evaluation and call resolution. Any of these aborts the
/// run that triggered them.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("unbound location `{0}`")]
    UnboundLocation(Location),
    #[error("type error: {0}")]
    Type(String),
    #[error("arithmetic overflow")]
    Overflow,
    #[error("arity mismatch calling `{name}`: expected {expected} argument(s), got {got}")]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("no matching definition for `{name}/{arity}`")]
    NoMatchingDefinition { name: String, arity: usize },
}

fn int_operand(value: Value, op: BinOpKindForMsg) -> Result<i64, ModelError> {
    match value {
        Value::Int(n) => Ok(n),
        Value::Sym(s) => Err(ModelError::Type(format!(
            "cannot apply `{}` to symbol `{s}`",
            op.0
        ))),
    }
}

struct BinOpKindForMsg(char);

/// Evaluate an expression against a store. Evaluation never modifies the
/// store.
///
/// Name lookup: a bound name yields its value; an unbound name starting
/// with a lowercase letter denotes a symbol constant; any other unbound
/// name is an error. Array-element reads always require a binding.
pub fn eval_expr(store: &Store, expr: &Expr) -> Result<Value, ModelError> {
    match expr {
        Expr::Lit(v) => Ok(v.clone()),
        Expr::Ident(name) => {
            let loc = Location::var(name.clone());
            match store.get(&loc) {
                Some(v) => Ok(v.clone()),
                None if name.chars().next().is_some_and(|c| c.is_ascii_lowercase()) => {
                    Ok(Value::symbol(name.clone()))
                }
                None => Err(ModelError::UnboundLocation(loc)),
            }
        }
        Expr::Elem { base, index } => {
            let loc = resolve_elem(store, base, index)?;
            store
                .get(&loc)
                .cloned()
                .ok_or(ModelError::UnboundLocation(loc))
        }
        Expr::Binary { op, lhs, rhs } => {
            let symbol = match op {
                crate::syntax::BinOp::Add => '+',
                crate::syntax::BinOp::Sub => '-',
                crate::syntax::BinOp::Mul => '*',
            };
            let l = int_operand(eval_expr(store, lhs)?, BinOpKindForMsg(symbol))?;
            let r = int_operand(eval_expr(store, rhs)?, BinOpKindForMsg(symbol))?;
            let result = match op {
                crate::syntax::BinOp::Add => l.checked_add(r),
                crate::syntax::BinOp::Sub => l.checked_sub(r),
                crate::syntax::BinOp::Mul => l.checked_mul(r),
            };
            result.map(Value::Int).ok_or(ModelError::Overflow)
        }
    }
}

fn resolve_elem(store: &Store, base: &str, index: &Expr) -> Result<Location, ModelError> {
    let idx = eval_expr(store, index)?;
    match idx {
        Value::Int(i) => Ok(Location::elem(base, i)),
        Value::Sym(s) => Err(ModelError::Type(format!(
            "array index `{base}[{s}]` is not an integer"
        ))),
    }
}

/// Resolve an assignment target to a concrete location.
pub fn resolve_lvalue(store: &Store, target: &LValue) -> Result<Location, ModelError> {
    match target {
        LValue::Var(name) => Ok(Location::var(name.clone())),
        LValue::Elem { base, index } => resolve_elem(store, base, index),
    }
}

/// Instantiate a definition body with argument values: every parameter
/// occurrence in expression position (including lvalue indices and call
/// arguments) becomes a literal. Procedure names, assignment-target names,
/// and array base names are never rewritten.
pub fn substitute(def: &Definition, args: &[Value]) -> Result<Statement, ModelError> {
    if def.params.len() != args.len() {
        return Err(ModelError::ArityMismatch {
            name: def.name.clone(),
            expected: def.params.len(),
            got: args.len(),
        });
    }
    let bindings: Vec<(&str, &Value)> = def
        .params
        .iter()
        .map(String::as_str)
        .zip(args.iter())
        .collect();
    Ok(subst_stmt(&def.body, &bindings))
}

fn subst_stmt(stmt: &Statement, bindings: &[(&str, &Value)]) -> Statement {
    match stmt {
        Statement::True => Statement::True,
        Statement::Call { name, args } => Statement::Call {
            name: name.clone(),
            args: args.iter().map(|a| subst_expr(a, bindings)).collect(),
        },
        Statement::Assign { target, value } => Statement::Assign {
            target: subst_lvalue(target, bindings),
            value: subst_expr(value, bindings),
        },
        Statement::Seq(items) => {
            Statement::Seq(items.iter().map(|g| subst_stmt(g, bindings)).collect())
        }
        Statement::Block(items) => {
            Statement::Block(items.iter().map(|g| subst_stmt(g, bindings)).collect())
        }
        Statement::Repeat(body) => Statement::Repeat(Box::new(subst_stmt(body, bindings))),
    }
}

fn subst_lvalue(target: &LValue, bindings: &[(&str, &Value)]) -> LValue {
    match target {
        LValue::Var(name) => LValue::Var(name.clone()),
        LValue::Elem { base, index } => LValue::Elem {
            base: base.clone(),
            index: subst_expr(index, bindings),
        },
    }
}

fn subst_expr(expr: &Expr, bindings: &[(&str, &Value)]) -> Expr {
    match expr {
        Expr::Lit(v) => Expr::Lit(v.clone()),
        Expr::Ident(name) => match bindings.iter().find(|(p, _)| p == name) {
            Some((_, value)) => Expr::Lit((*value).clone()),
            None => Expr::Ident(name.clone()),
        },
        Expr::Elem { base, index } => Expr::Elem {
            base: base.clone(),
            index: Box::new(subst_expr(index, bindings)),
        },
        Expr::Binary { op, lhs, rhs } => Expr::Binary {
            op: *op,
            lhs: Box::new(subst_expr(lhs, bindings)),
            rhs: Box::new(subst_expr(rhs, bindings)),
        },
    }
}

/// Find the first definition (in textual order) matching the call's name
/// and arity and return its instantiated body. No backtracking: the first
/// match is the only one tried.
pub fn resolve_definition(
    db: &ProgramDB,
    name: &str,
    args: &[Value],
) -> Result<Statement, ModelError> {
    db.definitions()
        .iter()
        .find(|d| d.name == name && d.params.len() == args.len())
        .map(|d| substitute(d, args))
        .unwrap_or(Err(ModelError::NoMatchingDefinition {
            name: name.to_string(),
            arity: args.len(),
        }))
}
