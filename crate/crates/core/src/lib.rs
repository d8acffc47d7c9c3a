//! Core library for C||, a tiny concurrent imperative language built around a
//! *block sequential* statement `#(G1,...,Gn)` that runs its body atomically.
//!
//! The pieces:
//!
//! - [`syntax`] — lexer, recursive descent parser, and pretty printer for
//!   `.cpar` source files (both the prefix `;(..)`/`#(..)` notation and the
//!   infix `(G1 ; G2)`/`(G1 # G2)` sugar).
//! - [`model`] — runtime data model: values, the store, procedure
//!   definitions, thread pools, expression evaluation, and parameter
//!   substitution.
//! - [`engine`] — the two-mode interpreter: a concurrent scheduling loop over
//!   the thread pool plus a sequential mode for atomic blocks, with full
//!   trace recording and pluggable schedule policies (round-robin, seeded
//!   random, scripted replay).
//! - [`explorer`] — exhaustive enumeration of schedules at scheduling-unit
//!   granularity, terminal-store collection with witness scripts, and
//!   atomicity checking over every explored trace.
//! - [`predicate`] — the small `loc=value` / `defined(loc)` assertion
//!   language used to check explored stores from CI.

pub mod engine;
pub mod explorer;
pub mod model;
pub mod predicate;
pub mod syntax;

pub use engine::{
    enabled_choices, run, run_from, EngineConfig, EngineError, Granularity, Mode, RuleTag,
    RunOutcome, RunStatus, SchedulePolicy, TraceEvent,
};
pub use explorer::{
    check_all_schedules, check_atomicity, explore, explore_from, schedule_count_oracle,
    AtomicityReport, ExplorationResult, ExploreBounds,
};
pub use model::{
    eval_expr, resolve_definition, substitute, Definition, Location, ModelError, ProgramDB, Store,
    Thread, ThreadId, ThreadPool, Value,
};
pub use predicate::StorePredicate;
pub use syntax::{parse_program, parse_statement, BinOp, Expr, LValue, ParseError, SourceProgram, Statement};
