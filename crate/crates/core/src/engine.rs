//! The two-mode interpreter: a concurrent scheduling loop over the thread
//! pool, and a sequential mode used for atomic blocks and for compounds
//! executed whole.
//!
//! One call to [`step`] consumes exactly one *scheduling unit* of the chosen
//! thread: one assignment, one `true`, one call unfolding, one `;`/`repeat`
//! decomposition, or one entire `#` block. A `#` block switches the
//! interpreter to sequential mode and runs its whole body with no
//! interleaving point anywhere inside; so does each element of a `;`
//! composition under [`Granularity::Literal`].
//!
//! Every unit appends events to the trace. Sequential-mode events from one
//! unit are contiguous by construction, which is exactly the atomicity
//! property the explorer checks over all schedules.

use std::fmt;

use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::model::{
    eval_expr, resolve_definition, resolve_lvalue, Location, ModelError, ProgramDB, Store,
    ThreadId, ThreadPool, Value,
};
use crate::syntax::{SourceProgram, Statement};

/// How much of a `;` composition or `repeat` body executes per scheduling
/// unit.
///
/// `Literal` runs the first element of a chosen compound to completion in
/// sequential mode, one element per unit. `Fine` (the default) only
/// decomposes the compound, so the scheduler can switch between threads at
/// every assignment. `#` blocks are atomic under both.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Granularity {
    Literal,
    #[default]
    Fine,
}

/// How the scheduler picks the next thread among the runnable ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchedulePolicy {
    /// Rotate through runnable thread ids in ascending cyclic order.
    RoundRobin,
    /// Seeded pseudo-random choice. Equal seeds yield equal schedules on
    /// every platform: the generator is a fixed SplitMix64 and the choice is
    /// the generated value modulo the number of runnable threads.
    Random(u64),
    /// Replay an explicit list of thread choices (a witness script).
    Script(Vec<ThreadId>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineConfig {
    pub granularity: Granularity,
    /// Bound on scheduling units per run, and independently on the events of
    /// each sequential-mode execution (so `repeat` inside `#` stays bounded).
    pub max_steps: usize,
    pub policy: SchedulePolicy,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            granularity: Granularity::Fine,
            max_steps: 10_000,
            policy: SchedulePolicy::RoundRobin,
        }
    }
}

/// Which interpreter phase emitted a trace event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Concurrent,
    Sequential,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Concurrent => "C",
            Mode::Sequential => "S",
        })
    }
}

/// The reduction rule an event records.
///
/// `R1`–`R11` are the interpreter's defining rules: `R1`–`R3` the call
/// resolution steps (dispatch, one argument binding per parameter, body
/// splice), `R4` success of a sole `true` thread, `R5` the empty pool,
/// `R6` assignment, `R7`/`R8` empty and non-empty `;`, `R9` `repeat`,
/// `R10`/`R11` empty and non-empty `#`. `TrueElim` is the completion of a
/// `true` head in a wider pool context, and `SeqDecompose` is the
/// fine-granularity rewrite of `;(G1,...,Gn)` into `G1` followed by
/// `;(G2,...,Gn)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleTag {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
    R9,
    R10,
    R11,
    TrueElim,
    SeqDecompose,
}

impl fmt::Display for RuleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleTag::R1 => "R1",
            RuleTag::R2 => "R2",
            RuleTag::R3 => "R3",
            RuleTag::R4 => "R4",
            RuleTag::R5 => "R5",
            RuleTag::R6 => "R6",
            RuleTag::R7 => "R7",
            RuleTag::R8 => "R8",
            RuleTag::R9 => "R9",
            RuleTag::R10 => "R10",
            RuleTag::R11 => "R11",
            RuleTag::TrueElim => "TrueElim",
            RuleTag::SeqDecompose => "SeqDecompose",
        })
    }
}

/// One trace entry. `step` is the event's index in the trace; `thread` is
/// `None` only for the final `R5` event of a successful run; `delta` is
/// present exactly for `R6` (assignment) events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub step: usize,
    pub thread: Option<ThreadId>,
    pub rule: RuleTag,
    pub mode: Mode,
    pub stmt: String,
    pub delta: Option<(Location, Value)>,
}

impl TraceEvent {
    pub fn to_json(&self) -> Json {
        json!({
            "step": self.step,
            "thread": self.thread.map(|t| t.0),
            "rule": self.rule.to_string(),
            "mode": self.mode.to_string(),
            "stmt": self.stmt,
            "delta": self.delta.as_ref().map(|(loc, value)| json!({
                "loc": loc.to_string(),
                "value": value.to_json(),
            })),
        })
    }
}

impl fmt::Display for TraceEvent {
    /// One line per event: `step=<n> thread=<id> rule=<tag> mode=<C|S>
    /// stmt=<rendered> [delta=<loc>=<val>]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step={} thread=", self.step)?;
        match self.thread {
            Some(t) => write!(f, "{t}")?,
            None => f.write_str("-")?,
        }
        write!(f, " rule={} mode={} stmt={}", self.rule, self.mode, self.stmt)?;
        if let Some((loc, value)) = &self.delta {
            write!(f, " delta={loc}={value}")?;
        }
        Ok(())
    }
}

/// Errors of the schedule script policy.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ScriptError {
    #[error("script chose thread {0}, which is not runnable")]
    NotRunnable(ThreadId),
    #[error("script exhausted with {remaining} thread(s) still runnable")]
    Exhausted { remaining: usize },
}

/// Why a run failed. An execution failure names the thread and the
/// innermost statement that raised it.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("thread {thread} failed at `{stmt}`: {source}")]
    Exec {
        thread: ThreadId,
        stmt: String,
        source: ModelError,
    },
    #[error("schedule script error: {0}")]
    Script(#[from] ScriptError),
}

/// Why execution stopped early: a failure, or the step bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Halt {
    Failure(EngineError),
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    /// The pool emptied: every thread ran to completion.
    Success,
    Failure(EngineError),
    StepLimit,
}

impl RunStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, RunStatus::Success)
    }
}

/// The result of a run: how it halted, the store at the halt (including any
/// partial effects of a failed run), and the full event trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub final_store: Store,
    pub trace: Vec<TraceEvent>,
}

impl RunOutcome {
    /// The trace in text form, one line per event.
    pub fn trace_text(&self) -> String {
        let mut out = String::new();
        for event in &self.trace {
            out.push_str(&event.to_string());
            out.push('\n');
        }
        out
    }

    pub fn trace_json(&self) -> Json {
        Json::Array(self.trace.iter().map(TraceEvent::to_json).collect())
    }

    pub fn to_json(&self, include_trace: bool) -> Json {
        let (status, error) = match &self.status {
            RunStatus::Success => ("success", None),
            RunStatus::Failure(e) => ("failure", Some(e.to_string())),
            RunStatus::StepLimit => ("step-limit", None),
        };
        json!({
            "status": status,
            "error": error,
            "store": self.final_store.to_json(),
            "trace": if include_trace { Some(self.trace_json()) } else { None },
        })
    }
}

/// Ids of all runnable (non-complete) threads, in pool order.
pub fn enabled_choices(pool: &ThreadPool) -> Vec<ThreadId> {
    pool.iter()
        .filter(|t| !t.is_complete())
        .map(|t| t.id)
        .collect()
}

fn push_event(
    trace: &mut Vec<TraceEvent>,
    mode: Mode,
    thread: Option<ThreadId>,
    rule: RuleTag,
    stmt: String,
    delta: Option<(Location, Value)>,
) {
    trace.push(TraceEvent {
        step: trace.len(),
        thread,
        rule,
        mode,
        stmt,
        delta,
    });
}

fn exec_failure(thread: ThreadId, stmt: &str, source: ModelError) -> Halt {
    Halt::Failure(EngineError::Exec {
        thread,
        stmt: stmt.to_string(),
        source,
    })
}

/// Sequential-mode executor. Each event it emits counts against `budget`;
/// exhausting the budget halts the run with a step limit, which is what
/// bounds `repeat` inside an atomic block.
struct SeqCtx<'a> {
    db: &'a mut ProgramDB,
    trace: &'a mut Vec<TraceEvent>,
    thread: ThreadId,
    budget: usize,
}

impl SeqCtx<'_> {
    fn emit(
        &mut self,
        rule: RuleTag,
        stmt: String,
        delta: Option<(Location, Value)>,
    ) -> Result<(), Halt> {
        if self.budget == 0 {
            return Err(Halt::StepLimit);
        }
        self.budget -= 1;
        push_event(self.trace, Mode::Sequential, Some(self.thread), rule, stmt, delta);
        Ok(())
    }

    fn exec(&mut self, stmt: &Statement) -> Result<(), Halt> {
        match stmt {
            Statement::True => self.emit(RuleTag::R4, stmt.to_string(), None),
            Statement::Assign { target, value } => {
                let text = stmt.to_string();
                let loc = resolve_lvalue(&self.db.store, target)
                    .map_err(|e| exec_failure(self.thread, &text, e))?;
                let v = eval_expr(&self.db.store, value)
                    .map_err(|e| exec_failure(self.thread, &text, e))?;
                self.db.store.insert(loc.clone(), v.clone());
                self.emit(RuleTag::R6, text, Some((loc, v)))
            }
            Statement::Call { name, args } => {
                let text = stmt.to_string();
                self.emit(RuleTag::R3, text.clone(), None)?;
                let mut values = Vec::with_capacity(args.len());
                for arg in args {
                    values.push(
                        eval_expr(&self.db.store, arg)
                            .map_err(|e| exec_failure(self.thread, &text, e))?,
                    );
                }
                let body = resolve_definition(self.db, name, &values)
                    .map_err(|e| exec_failure(self.thread, &text, e))?;
                for _ in &values {
                    self.emit(RuleTag::R2, text.clone(), None)?;
                }
                self.emit(RuleTag::R1, body.to_string(), None)?;
                self.exec(&body)
            }
            Statement::Seq(items) if items.is_empty() => {
                self.emit(RuleTag::R7, stmt.to_string(), None)
            }
            Statement::Seq(items) => {
                self.emit(RuleTag::R8, stmt.to_string(), None)?;
                for item in items {
                    self.exec(item)?;
                }
                Ok(())
            }
            Statement::Repeat(body) => loop {
                self.emit(RuleTag::R9, stmt.to_string(), None)?;
                self.exec(body)?;
            },
            Statement::Block(items) if items.is_empty() => {
                self.emit(RuleTag::R10, stmt.to_string(), None)
            }
            Statement::Block(items) => {
                self.emit(RuleTag::R11, stmt.to_string(), None)?;
                for item in items {
                    self.exec(item)?;
                }
                Ok(())
            }
        }
    }
}

/// Execute one statement to completion in sequential mode, as if it were the
/// only thread. Emits Sequential-mode events; `max_steps` bounds them.
pub fn run_sequential(
    db: &mut ProgramDB,
    thread: ThreadId,
    stmt: &Statement,
    max_steps: usize,
    trace: &mut Vec<TraceEvent>,
) -> Result<(), Halt> {
    SeqCtx {
        db,
        trace,
        thread,
        budget: max_steps,
    }
    .exec(stmt)
}

/// Execute the body of a `#` block: every element in order, entirely in
/// sequential mode, under one shared event budget. Emits no event of its
/// own — an empty body is an immediate success with no events.
pub fn run_atomic_block(
    db: &mut ProgramDB,
    thread: ThreadId,
    body: &[Statement],
    max_steps: usize,
    trace: &mut Vec<TraceEvent>,
) -> Result<(), Halt> {
    let mut ctx = SeqCtx {
        db,
        trace,
        thread,
        budget: max_steps,
    };
    for item in body {
        ctx.exec(item)?;
    }
    Ok(())
}

/// Consume one scheduling unit of the chosen thread.
///
/// The chosen thread must be runnable (see [`enabled_choices`]). Dispatch is
/// on the thread's head statement; the granularity decides whether compound
/// heads execute their first element now (Literal) or merely decompose
/// (Fine). `#` blocks run whole under both. A thread whose continuation
/// empties is removed from the pool.
pub fn step(
    granularity: Granularity,
    max_steps: usize,
    db: &mut ProgramDB,
    pool: &mut ThreadPool,
    chosen: ThreadId,
    trace: &mut Vec<TraceEvent>,
) -> Result<(), Halt> {
    let pool_len = pool.len();
    let thread = match pool.get_mut(chosen) {
        Some(t) if !t.is_complete() => t,
        _ => return Err(Halt::Failure(ScriptError::NotRunnable(chosen).into())),
    };
    let head = thread.pop_next().expect("runnable thread has a head");
    let text = head.to_string();
    match head {
        Statement::True => {
            // The paper's rule for `true` covers only the sole thread of a
            // singleton pool; completion in any wider context is the
            // TrueElim generalization.
            let rule = if pool_len == 1 && thread.is_complete() {
                RuleTag::R4
            } else {
                RuleTag::TrueElim
            };
            push_event(trace, Mode::Concurrent, Some(chosen), rule, text, None);
        }
        Statement::Assign { target, value } => {
            // Evaluation and store write are one indivisible unit.
            let loc = resolve_lvalue(&db.store, &target)
                .map_err(|e| exec_failure(chosen, &text, e))?;
            let v =
                eval_expr(&db.store, &value).map_err(|e| exec_failure(chosen, &text, e))?;
            db.store.insert(loc.clone(), v.clone());
            push_event(
                trace,
                Mode::Concurrent,
                Some(chosen),
                RuleTag::R6,
                text,
                Some((loc, v)),
            );
        }
        Statement::Call { name, args } => {
            push_event(
                trace,
                Mode::Concurrent,
                Some(chosen),
                RuleTag::R3,
                text.clone(),
                None,
            );
            let mut values = Vec::with_capacity(args.len());
            for arg in &args {
                values.push(
                    eval_expr(&db.store, arg).map_err(|e| exec_failure(chosen, &text, e))?,
                );
            }
            let body = resolve_definition(db, &name, &values)
                .map_err(|e| exec_failure(chosen, &text, e))?;
            for _ in &values {
                push_event(
                    trace,
                    Mode::Concurrent,
                    Some(chosen),
                    RuleTag::R2,
                    text.clone(),
                    None,
                );
            }
            push_event(
                trace,
                Mode::Concurrent,
                Some(chosen),
                RuleTag::R1,
                body.to_string(),
                None,
            );
            // The instantiated body replaces the call in place; the pool
            // never grows and the thread keeps its id.
            thread.push_next(body);
        }
        Statement::Seq(items) if items.is_empty() => {
            push_event(trace, Mode::Concurrent, Some(chosen), RuleTag::R7, text, None);
        }
        Statement::Seq(mut items) => {
            let first = items.remove(0);
            match granularity {
                Granularity::Fine => {
                    push_event(
                        trace,
                        Mode::Concurrent,
                        Some(chosen),
                        RuleTag::SeqDecompose,
                        text,
                        None,
                    );
                    thread.push_next(Statement::Seq(items));
                    thread.push_next(first);
                }
                Granularity::Literal => {
                    push_event(trace, Mode::Concurrent, Some(chosen), RuleTag::R8, text, None);
                    run_sequential(&mut *db, chosen, &first, max_steps, &mut *trace)?;
                    thread.push_next(Statement::Seq(items));
                }
            }
        }
        Statement::Repeat(body) => {
            push_event(trace, Mode::Concurrent, Some(chosen), RuleTag::R9, text, None);
            match granularity {
                Granularity::Fine => {
                    thread.push_next(Statement::Repeat(body.clone()));
                    thread.push_next(*body);
                }
                Granularity::Literal => {
                    run_sequential(&mut *db, chosen, &body, max_steps, &mut *trace)?;
                    thread.push_next(Statement::Repeat(body));
                }
            }
        }
        Statement::Block(items) if items.is_empty() => {
            push_event(trace, Mode::Concurrent, Some(chosen), RuleTag::R10, text, None);
        }
        Statement::Block(items) => {
            // Unconditionally atomic: the whole body runs now, in
            // sequential mode, regardless of granularity.
            push_event(trace, Mode::Concurrent, Some(chosen), RuleTag::R11, text, None);
            run_atomic_block(&mut *db, chosen, &items, max_steps, &mut *trace)?;
        }
    }
    if pool.get(chosen).is_some_and(|t| t.is_complete()) {
        pool.remove(chosen);
    }
    Ok(())
}

/// SplitMix64 state transition. Fixed here (rather than taken from a crate)
/// so that a seed replays the same schedule on every platform and build.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

enum PolicyState {
    RoundRobin { last: Option<usize> },
    Random { state: u64 },
    Script { script: Vec<ThreadId>, next: usize },
}

impl PolicyState {
    fn new(policy: &SchedulePolicy) -> Self {
        match policy {
            SchedulePolicy::RoundRobin => PolicyState::RoundRobin { last: None },
            SchedulePolicy::Random(seed) => PolicyState::Random { state: *seed },
            SchedulePolicy::Script(script) => PolicyState::Script {
                script: script.clone(),
                next: 0,
            },
        }
    }

    fn choose(&mut self, enabled: &[ThreadId]) -> Result<ThreadId, ScriptError> {
        debug_assert!(!enabled.is_empty());
        match self {
            PolicyState::RoundRobin { last } => {
                let chosen = match *last {
                    Some(prev) => enabled
                        .iter()
                        .copied()
                        .find(|t| t.0 > prev)
                        .unwrap_or(enabled[0]),
                    None => enabled[0],
                };
                *last = Some(chosen.0);
                Ok(chosen)
            }
            PolicyState::Random { state } => {
                let z = splitmix64(state);
                Ok(enabled[(z % enabled.len() as u64) as usize])
            }
            PolicyState::Script { script, next } => {
                if *next >= script.len() {
                    return Err(ScriptError::Exhausted {
                        remaining: enabled.len(),
                    });
                }
                let chosen = script[*next];
                *next += 1;
                if enabled.contains(&chosen) {
                    Ok(chosen)
                } else {
                    Err(ScriptError::NotRunnable(chosen))
                }
            }
        }
    }
}

/// Run a prepared database and pool to completion under the given config.
pub fn run_from(config: &EngineConfig, mut db: ProgramDB, mut pool: ThreadPool) -> RunOutcome {
    let mut policy = PolicyState::new(&config.policy);
    let mut trace = Vec::new();
    let mut steps = 0usize;
    let status = loop {
        if pool.is_empty() {
            push_event(
                &mut trace,
                Mode::Concurrent,
                None,
                RuleTag::R5,
                "||()".to_string(),
                None,
            );
            break RunStatus::Success;
        }
        if steps >= config.max_steps {
            break RunStatus::StepLimit;
        }
        let enabled = enabled_choices(&pool);
        let chosen = match policy.choose(&enabled) {
            Ok(t) => t,
            Err(e) => break RunStatus::Failure(e.into()),
        };
        match step(
            config.granularity,
            config.max_steps,
            &mut db,
            &mut pool,
            chosen,
            &mut trace,
        ) {
            Ok(()) => steps += 1,
            Err(Halt::Failure(e)) => break RunStatus::Failure(e),
            Err(Halt::StepLimit) => break RunStatus::StepLimit,
        }
    };
    RunOutcome {
        status,
        final_store: db.store,
        trace,
    }
}

/// Run a parsed program: empty initial store, one thread per `main` entry.
pub fn run(config: &EngineConfig, prog: &SourceProgram) -> RunOutcome {
    run_from(
        config,
        ProgramDB::new(prog.definitions.clone()),
        ThreadPool::from_main(&prog.main),
    )
}
