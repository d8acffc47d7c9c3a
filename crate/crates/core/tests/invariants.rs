//! Cross-module properties checked over the whole fixture corpus.

mod common;

use std::collections::BTreeSet;

use common::{corpus, corpus_with_prefix, fixture};
use cpar_core::engine::{
    run, run_from, EngineConfig, Granularity, RuleTag, RunStatus, SchedulePolicy,
};
use cpar_core::explorer::{explore, explore_from, ExploreBounds};
use cpar_core::model::{ProgramDB, ThreadPool};
use cpar_core::syntax::parse_program;

fn bounds(max_steps_per_run: usize) -> ExploreBounds {
    ExploreBounds {
        max_steps_per_run,
        ..ExploreBounds::default()
    }
}

/// Rendering is canonical: parse(render(ast)) == ast for the whole corpus.
#[test]
fn corpus_round_trips_through_the_printer() {
    let corpus = corpus();
    assert!(!corpus.is_empty());
    for (name, src) in corpus {
        let ast = parse_program(&src).unwrap_or_else(|e| panic!("parsing {name}: {e}"));
        let reparsed = parse_program(&ast.to_string())
            .unwrap_or_else(|e| panic!("reparsing rendered {name}: {e}"));
        assert_eq!(ast, reparsed, "{name} does not round-trip");
    }
}

/// Every (store, witness) pair the explorer reports replays to exactly that
/// store, and every failure witness replays to exactly that failure.
#[test]
fn exploration_is_sound() {
    for file in [
        "signup.cpar",
        "signup_racy.cpar",
        "oracle_pair.cpar",
        "flat_conflict.cpar",
        "divergence.cpar",
    ] {
        let prog = fixture(file);
        for granularity in [Granularity::Fine, Granularity::Literal] {
            let db = ProgramDB::new(prog.definitions.clone());
            let pool = ThreadPool::from_main(&prog.main);
            let result = explore_from(granularity, db.clone(), pool.clone(), &bounds(100));
            assert!(!result.truncated, "{file}");
            for terminal in &result.terminal_stores {
                let outcome = run_from(
                    &EngineConfig {
                        granularity,
                        max_steps: 10_000,
                        policy: SchedulePolicy::Script(terminal.witness.clone()),
                    },
                    db.clone(),
                    pool.clone(),
                );
                assert_eq!(outcome.status, RunStatus::Success, "{file}");
                assert_eq!(outcome.final_store, terminal.store, "{file}");
            }
            for failure in &result.failures {
                let outcome = run_from(
                    &EngineConfig {
                        granularity,
                        max_steps: 10_000,
                        policy: SchedulePolicy::Script(failure.witness.clone()),
                    },
                    db.clone(),
                    pool.clone(),
                );
                assert_eq!(
                    outcome.status,
                    RunStatus::Failure(failure.error.clone()),
                    "{file}"
                );
            }
        }
    }
}

#[test]
fn exploration_is_deterministic_including_witnesses() {
    let prog = fixture("flat_conflict.cpar");
    let a = explore(Granularity::Fine, &prog, &bounds(100));
    let b = explore(Granularity::Fine, &prog, &bounds(100));
    assert_eq!(a, b);
}

/// Traces are well-formed however a run halts: event indices count up from
/// zero, exactly the assignment events carry a store delta, and only the
/// terminal success event lacks a thread.
#[test]
fn traces_are_well_formed_across_the_corpus() {
    for (name, src) in corpus() {
        let prog = parse_program(&src).unwrap();
        for granularity in [Granularity::Fine, Granularity::Literal] {
            for policy in [SchedulePolicy::RoundRobin, SchedulePolicy::Random(3)] {
                let outcome = run(
                    &EngineConfig {
                        granularity,
                        max_steps: 60,
                        policy,
                    },
                    &prog,
                );
                for (i, event) in outcome.trace.iter().enumerate() {
                    assert_eq!(event.step, i, "{name}: non-contiguous steps");
                    assert_eq!(
                        event.delta.is_some(),
                        event.rule == RuleTag::R6,
                        "{name}: delta iff assignment"
                    );
                    assert_eq!(
                        event.thread.is_none(),
                        event.rule == RuleTag::R5,
                        "{name}: thread present iff not the terminal event"
                    );
                }
                if outcome.status == RunStatus::Success {
                    assert_eq!(outcome.trace.last().map(|e| e.rule), Some(RuleTag::R5));
                }
            }
        }
    }
}

/// For threads built only from assignments, `true`, and shallow `#` blocks
/// under a single `;`, each scheduling unit is indivisible under both
/// granularities, so the reachable terminal stores agree exactly.
#[test]
fn flat_programs_reach_the_same_stores_under_both_granularities() {
    for (name, prog) in corpus_with_prefix("flat_") {
        let fine: BTreeSet<String> = explore(Granularity::Fine, &prog, &bounds(100))
            .terminal_stores
            .iter()
            .map(|t| t.store.to_string())
            .collect();
        let literal: BTreeSet<String> = explore(Granularity::Literal, &prog, &bounds(100))
            .terminal_stores
            .iter()
            .map(|t| t.store.to_string())
            .collect();
        assert_eq!(fine, literal, "{name}");
    }
}

/// The corpus exercises every reduction rule somewhere.
#[test]
fn corpus_covers_every_rule_tag() {
    let mut seen = BTreeSet::new();
    for (_, src) in corpus() {
        let prog = parse_program(&src).unwrap();
        for granularity in [Granularity::Fine, Granularity::Literal] {
            let outcome = run(
                &EngineConfig {
                    granularity,
                    max_steps: 60,
                    policy: SchedulePolicy::RoundRobin,
                },
                &prog,
            );
            seen.extend(outcome.trace.iter().map(|e| format!("{}", e.rule)));
        }
    }
    for tag in [
        "R1", "R2", "R3", "R4", "R5", "R6", "R7", "R8", "R9", "R10", "R11", "TrueElim",
        "SeqDecompose",
    ] {
        assert!(seen.contains(tag), "no fixture exercises {tag}");
    }
}
