//! Exhaustive schedule exploration.
//!
//! The interpreter's only source of nondeterminism is which runnable thread
//! the scheduler picks at each scheduling unit. The explorer enumerates
//! every such choice sequence depth-first (lowest thread id first), collects
//! the set of reachable terminal stores with one witness script per distinct
//! store, and records failing schedules as data. Replaying a witness with
//! [`SchedulePolicy::Script`](crate::engine::SchedulePolicy) reproduces its
//! store exactly.
//!
//! Exploration is bounded (schedule length, schedule count, distinct-store
//! count) so programs with `repeat` stay explorable; tripping any bound sets
//! `truncated` and withdraws the completeness claim. The walk is
//! deterministic: same inputs, same result, witnesses included.

use std::collections::{HashMap, HashSet};

use serde_json::{json, Value as Json};

use crate::engine::{
    enabled_choices, step, EngineError, Granularity, Halt, Mode, RuleTag, TraceEvent,
};
use crate::model::{ProgramDB, Store, ThreadId, ThreadPool};
use crate::syntax::SourceProgram;

/// Bounds that keep exploration finite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExploreBounds {
    /// Longest schedule (in scheduling units) followed down any branch; also
    /// the event budget of each sequential-mode execution.
    pub max_steps_per_run: usize,
    /// Most complete (successful) schedules counted before giving up.
    pub max_schedules: usize,
    /// Most distinct terminal stores collected before giving up.
    pub max_states: usize,
}

impl Default for ExploreBounds {
    fn default() -> Self {
        ExploreBounds {
            max_steps_per_run: 10_000,
            max_schedules: 1_000_000,
            max_states: 100_000,
        }
    }
}

/// A reachable terminal store, the first schedule that reached it, and how
/// many schedules reach it in total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminalStore {
    pub store: Store,
    pub witness: Vec<ThreadId>,
    pub count: usize,
}

/// A schedule that failed, with the first witness producing this error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureWitness {
    pub error: EngineError,
    pub witness: Vec<ThreadId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplorationResult {
    /// Distinct terminal stores in discovery order.
    pub terminal_stores: Vec<TerminalStore>,
    /// Number of complete (successful) schedules explored. When not
    /// truncated, the store multiplicities sum to exactly this.
    pub schedules_explored: usize,
    pub truncated: bool,
    /// Distinct failures (deduplicated by message) with one witness each.
    pub failures: Vec<FailureWitness>,
}

impl ExplorationResult {
    pub fn to_json(&self) -> Json {
        json!({
            "schedules": self.schedules_explored,
            "truncated": self.truncated,
            "stores": self.terminal_stores.iter().map(|t| json!({
                "store": t.store.to_json(),
                "witness": t.witness.iter().map(|id| id.0).collect::<Vec<_>>(),
                "count": t.count,
            })).collect::<Vec<_>>(),
            "failures": self.failures.iter().map(|f| json!({
                "error": f.error.to_string(),
                "witness": f.witness.iter().map(|id| id.0).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// How one explored path ended.
enum PathEnd<'a> {
    Success(&'a Store),
    Failure(&'a EngineError),
    Truncated,
}

/// Depth-first walk over every schedule. The visitor sees the choice script,
/// the full trace of the path, and how it ended; returning `false` aborts
/// the whole walk.
fn walk<F>(
    granularity: Granularity,
    db: &ProgramDB,
    pool: &ThreadPool,
    bounds: &ExploreBounds,
    visit: &mut F,
) where
    F: FnMut(&[ThreadId], &[TraceEvent], PathEnd) -> bool,
{
    let mut script = Vec::new();
    let mut trace = Vec::new();
    walk_rec(granularity, db, pool, bounds, &mut script, &mut trace, visit);
}

fn walk_rec<F>(
    granularity: Granularity,
    db: &ProgramDB,
    pool: &ThreadPool,
    bounds: &ExploreBounds,
    script: &mut Vec<ThreadId>,
    trace: &mut Vec<TraceEvent>,
    visit: &mut F,
) -> bool
where
    F: FnMut(&[ThreadId], &[TraceEvent], PathEnd) -> bool,
{
    if pool.is_empty() {
        let mark = trace.len();
        trace.push(TraceEvent {
            step: mark,
            thread: None,
            rule: RuleTag::R5,
            mode: Mode::Concurrent,
            stmt: "||()".to_string(),
            delta: None,
        });
        let keep_going = visit(script, trace, PathEnd::Success(&db.store));
        trace.truncate(mark);
        return keep_going;
    }
    if script.len() >= bounds.max_steps_per_run {
        return visit(script, trace, PathEnd::Truncated);
    }
    for id in enabled_choices(pool) {
        let mut next_db = db.clone();
        let mut next_pool = pool.clone();
        let mark = trace.len();
        script.push(id);
        let keep_going = match step(
            granularity,
            bounds.max_steps_per_run,
            &mut next_db,
            &mut next_pool,
            id,
            trace,
        ) {
            Ok(()) => walk_rec(granularity, &next_db, &next_pool, bounds, script, trace, visit),
            Err(Halt::Failure(error)) => visit(script, trace, PathEnd::Failure(&error)),
            Err(Halt::StepLimit) => visit(script, trace, PathEnd::Truncated),
        };
        script.pop();
        trace.truncate(mark);
        if !keep_going {
            return false;
        }
    }
    true
}

/// Explore every schedule of a prepared database and pool.
pub fn explore_from(
    granularity: Granularity,
    db: ProgramDB,
    pool: ThreadPool,
    bounds: &ExploreBounds,
) -> ExplorationResult {
    let mut result = ExplorationResult {
        terminal_stores: Vec::new(),
        schedules_explored: 0,
        truncated: false,
        failures: Vec::new(),
    };
    let mut store_index: HashMap<String, usize> = HashMap::new();
    let mut failures_seen: HashSet<String> = HashSet::new();
    walk(granularity, &db, &pool, bounds, &mut |script, _trace, end| {
        match end {
            PathEnd::Success(store) => {
                if result.schedules_explored >= bounds.max_schedules {
                    result.truncated = true;
                    return false;
                }
                result.schedules_explored += 1;
                let key = store.to_string();
                match store_index.get(&key) {
                    Some(&idx) => result.terminal_stores[idx].count += 1,
                    None => {
                        if result.terminal_stores.len() >= bounds.max_states {
                            result.truncated = true;
                            return false;
                        }
                        store_index.insert(key, result.terminal_stores.len());
                        result.terminal_stores.push(TerminalStore {
                            store: store.clone(),
                            witness: script.to_vec(),
                            count: 1,
                        });
                    }
                }
            }
            PathEnd::Failure(error) => {
                if failures_seen.insert(error.to_string()) {
                    result.failures.push(FailureWitness {
                        error: error.clone(),
                        witness: script.to_vec(),
                    });
                }
            }
            PathEnd::Truncated => result.truncated = true,
        }
        true
    });
    result
}

/// Explore every schedule of a parsed program (empty initial store).
pub fn explore(
    granularity: Granularity,
    prog: &SourceProgram,
    bounds: &ExploreBounds,
) -> ExplorationResult {
    explore_from(
        granularity,
        ProgramDB::new(prog.definitions.clone()),
        ThreadPool::from_main(&prog.main),
        bounds,
    )
}

/// True iff every maximal run of consecutive Sequential-mode events in the
/// trace belongs to a single thread — i.e. no other thread's work appears
/// inside an atomic section. Vacuously true for the empty trace.
pub fn check_atomicity(trace: &[TraceEvent]) -> bool {
    let mut current: Option<Option<ThreadId>> = None;
    for event in trace {
        if event.mode == Mode::Sequential {
            match current {
                None => current = Some(event.thread),
                Some(owner) if owner == event.thread => {}
                Some(_) => return false,
            }
        } else {
            current = None;
        }
    }
    true
}

/// Result of checking atomicity across every explored schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomicityReport {
    /// Paths checked: complete schedules, failing schedules, and truncated
    /// prefixes all count.
    pub schedules_checked: usize,
    /// Witness scripts of violating paths. Empty means every explored trace
    /// kept its sequential runs contiguous.
    pub violations: Vec<Vec<ThreadId>>,
    pub truncated: bool,
}

impl AtomicityReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> Json {
        json!({
            "schedules": self.schedules_checked,
            "truncated": self.truncated,
            "violations": self.violations.iter()
                .map(|w| w.iter().map(|id| id.0).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}

/// Run [`check_atomicity`] over the trace of every explored schedule.
pub fn check_all_schedules(
    granularity: Granularity,
    prog: &SourceProgram,
    bounds: &ExploreBounds,
) -> AtomicityReport {
    let db = ProgramDB::new(prog.definitions.clone());
    let pool = ThreadPool::from_main(&prog.main);
    let mut report = AtomicityReport {
        schedules_checked: 0,
        violations: Vec::new(),
        truncated: false,
    };
    walk(granularity, &db, &pool, bounds, &mut |script, trace, end| {
        if matches!(end, PathEnd::Truncated) {
            report.truncated = true;
        }
        report.schedules_checked += 1;
        if !check_atomicity(trace) {
            report.violations.push(script.to_vec());
        }
        true
    });
    report
}

/// Number of interleavings of straight-line threads with the given
/// scheduling-unit counts: the multinomial coefficient
/// `(Σkᵢ)! / Π(kᵢ!)`. Independent combinatorial oracle for explorer
/// completeness — it never looks at the engine.
pub fn schedule_count_oracle(step_counts: &[usize]) -> u64 {
    let mut total: u128 = 0;
    let mut acc: u128 = 1;
    for &k in step_counts {
        total += k as u128;
        acc = acc
            .checked_mul(binomial(total, k as u128))
            .expect("interleaving count overflows u128");
    }
    u64::try_from(acc).expect("interleaving count exceeds u64")
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        // Exact at every step: result * (n - i) is divisible by i + 1.
        result = result * (n - i) / (i + 1);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_from, EngineConfig, RunStatus, SchedulePolicy};
    use crate::model::{Location, Value};
    use crate::syntax::parse_program;

    fn fine() -> Granularity {
        Granularity::Fine
    }

    #[test]
    fn singleton_program_has_one_schedule() {
        let prog = parse_program("main ||(x = 1)").unwrap();
        let result = explore(fine(), &prog, &ExploreBounds::default());
        assert_eq!(result.schedules_explored, 1);
        assert!(!result.truncated);
        assert_eq!(result.terminal_stores.len(), 1);
        assert_eq!(result.terminal_stores[0].store.to_string(), "{x=1}");
        assert_eq!(result.terminal_stores[0].witness, vec![ThreadId(0)]);
        assert_eq!(result.terminal_stores[0].count, 1);
        assert!(result.failures.is_empty());
    }

    #[test]
    fn empty_pool_has_the_empty_schedule() {
        let prog = parse_program("main ||()").unwrap();
        let result = explore(fine(), &prog, &ExploreBounds::default());
        assert_eq!(result.schedules_explored, 1);
        assert_eq!(result.terminal_stores.len(), 1);
        assert!(result.terminal_stores[0].store.is_empty());
        assert!(result.terminal_stores[0].witness.is_empty());
    }

    /// The signup pool over a store with the counter already bound: the only
    /// free choices are which call unfolds first and which block runs first,
    /// so there are C(4,2) = 6 schedules and exactly two outcomes.
    #[test]
    fn signup_pool_reaches_exactly_two_stores() {
        let prog = parse_program(
            "proc signup(person) = (N = N + 1 # list[N] = person)\n\
             main ||(signup(tom), signup(bill))",
        )
        .unwrap();
        let store: Store = [(Location::var("N"), Value::Int(0))].into_iter().collect();
        let db = ProgramDB::with_store(prog.definitions.clone(), store);
        let pool = ThreadPool::from_main(&prog.main);
        let result = explore_from(fine(), db.clone(), pool.clone(), &ExploreBounds::default());

        assert!(!result.truncated);
        assert_eq!(result.schedules_explored, 6);
        assert!(result.failures.is_empty());
        let stores: Vec<String> = result
            .terminal_stores
            .iter()
            .map(|t| t.store.to_string())
            .collect();
        assert_eq!(
            stores,
            vec![
                "{N=2, list[1]=tom, list[2]=bill}",
                "{N=2, list[1]=bill, list[2]=tom}",
            ]
        );
        assert_eq!(
            result.terminal_stores.iter().map(|t| t.count).sum::<usize>(),
            result.schedules_explored
        );

        // Soundness: every witness replays to exactly its store.
        for terminal in &result.terminal_stores {
            let outcome = run_from(
                &EngineConfig {
                    policy: SchedulePolicy::Script(terminal.witness.clone()),
                    ..EngineConfig::default()
                },
                db.clone(),
                pool.clone(),
            );
            assert_eq!(outcome.status, RunStatus::Success);
            assert_eq!(outcome.final_store, terminal.store);
        }
    }

    #[test]
    fn always_failing_program_yields_failures_not_stores() {
        let prog = parse_program("proc p() = X = X + 1\nmain ||(p())").unwrap();
        let result = explore(fine(), &prog, &ExploreBounds::default());
        assert_eq!(result.schedules_explored, 0);
        assert!(result.terminal_stores.is_empty());
        assert_eq!(result.failures.len(), 1);
        assert_eq!(result.failures[0].witness, vec![ThreadId(0), ThreadId(0)]);

        // Replaying a failure witness reproduces the failure.
        let outcome = crate::engine::run(
            &EngineConfig {
                policy: SchedulePolicy::Script(result.failures[0].witness.clone()),
                ..EngineConfig::default()
            },
            &prog,
        );
        assert_eq!(
            outcome.status,
            RunStatus::Failure(result.failures[0].error.clone())
        );
    }

    #[test]
    fn completeness_matches_the_oracle_on_straight_line_threads() {
        // Three one-unit threads.
        let prog = parse_program("main ||(a = 1, b = 2, c = 3)").unwrap();
        let result = explore(fine(), &prog, &ExploreBounds::default());
        assert_eq!(result.schedules_explored as u64, schedule_count_oracle(&[1, 1, 1]));

        // A three-unit thread (decompose, assign, empty-seq) next to a
        // one-unit thread.
        let prog = parse_program("main ||(;(a = 1), b = 2)").unwrap();
        let result = explore(fine(), &prog, &ExploreBounds::default());
        assert_eq!(result.schedules_explored as u64, schedule_count_oracle(&[3, 1]));
    }

    #[test]
    fn schedule_cap_truncates() {
        let prog = parse_program("main ||(a = 1, b = 2, c = 3)").unwrap();
        let bounds = ExploreBounds {
            max_schedules: 2,
            ..ExploreBounds::default()
        };
        let result = explore(fine(), &prog, &bounds);
        assert!(result.truncated);
        assert_eq!(result.schedules_explored, 2);
    }

    #[test]
    fn step_bound_truncates_repeat_programs() {
        let prog = parse_program("main ||(repeat(x = 1))").unwrap();
        let bounds = ExploreBounds {
            max_steps_per_run: 20,
            ..ExploreBounds::default()
        };
        let result = explore(fine(), &prog, &bounds);
        assert!(result.truncated);
        assert!(result.terminal_stores.is_empty());
        assert_eq!(result.schedules_explored, 0);
    }

    #[test]
    fn exploration_is_deterministic() {
        let prog = parse_program(
            "proc signup(person) = (N = N + 1 # list[N] = person)\n\
             main ||(N = 0, signup(tom), signup(bill))",
        )
        .unwrap();
        let a = explore(fine(), &prog, &ExploreBounds::default());
        let b = explore(fine(), &prog, &ExploreBounds::default());
        assert_eq!(a, b);
    }

    #[test]
    fn atomicity_holds_on_real_traces() {
        let prog = parse_program(
            "proc signup(person) = (N = N + 1 # list[N] = person)\n\
             main ||(N = 0, signup(tom), signup(bill))",
        )
        .unwrap();
        let report = check_all_schedules(fine(), &prog, &ExploreBounds::default());
        assert!(report.ok());
        assert!(!report.truncated);
        assert!(report.schedules_checked > 0);
    }

    #[test]
    fn forged_interleaved_sequential_events_violate_atomicity() {
        let ev = |step, thread, mode| TraceEvent {
            step,
            thread: Some(ThreadId(thread)),
            rule: RuleTag::R6,
            mode,
            stmt: "x = 1".to_string(),
            delta: None,
        };
        // Thread 1's sequential event lands inside thread 0's block.
        let forged = vec![
            ev(0, 0, Mode::Sequential),
            ev(1, 1, Mode::Sequential),
            ev(2, 0, Mode::Sequential),
        ];
        assert!(!check_atomicity(&forged));

        // Separated by a concurrent event, the same events are fine.
        let ok = vec![
            ev(0, 0, Mode::Sequential),
            ev(1, 1, Mode::Concurrent),
            ev(2, 0, Mode::Sequential),
        ];
        assert!(check_atomicity(&ok));

        assert!(check_atomicity(&[]));
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(schedule_count_oracle(&[2, 2]), 6);
        assert_eq!(schedule_count_oracle(&[1, 1, 1]), 6);
        assert_eq!(schedule_count_oracle(&[5, 0]), 1);
        assert_eq!(schedule_count_oracle(&[0, 7]), 1);
        assert_eq!(schedule_count_oracle(&[]), 1);
        assert_eq!(schedule_count_oracle(&[3, 1]), 4);
    }

    mod property_tests {
        use super::*;
        use proptest::prelude::*;

        // Independent route: literally enumerate the interleavings.
        fn enumerate_interleavings(counts: &mut Vec<usize>) -> u64 {
            if counts.iter().all(|&c| c == 0) {
                return 1;
            }
            let mut total = 0;
            for i in 0..counts.len() {
                if counts[i] > 0 {
                    counts[i] -= 1;
                    total += enumerate_interleavings(counts);
                    counts[i] += 1;
                }
            }
            total
        }

        proptest! {
            #[test]
            fn oracle_matches_brute_force(counts in prop::collection::vec(0usize..5, 0..4)) {
                let mut scratch = counts.clone();
                prop_assert_eq!(
                    schedule_count_oracle(&counts),
                    enumerate_interleavings(&mut scratch)
                );
            }

            #[test]
            fn oracle_is_permutation_invariant(mut counts in prop::collection::vec(0usize..6, 1..5)) {
                let original = schedule_count_oracle(&counts);
                counts.reverse();
                prop_assert_eq!(original, schedule_count_oracle(&counts));
            }
        }
    }
}
