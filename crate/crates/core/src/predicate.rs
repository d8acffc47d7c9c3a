//! Store assertions: a comma-separated conjunction of `loc=value`,
//! `defined(loc)`, and `undefined(loc)` clauses, checked against terminal
//! stores. Locations are `name` or `name[index]`; values are integers or
//! symbol names. This is what the CLI's `--assert` flag parses.

use std::fmt;

use thiserror::Error;

use crate::model::{Location, Store, Value};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("bad assertion clause `{clause}`: {reason}")]
pub struct PredicateError {
    pub clause: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Clause {
    Equals(Location, Value),
    Defined(Location),
    Undefined(Location),
}

/// A conjunction of store clauses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StorePredicate {
    clauses: Vec<Clause>,
}

impl StorePredicate {
    /// Parse e.g. `N=2, defined(list[1]), undefined(list[3])`.
    pub fn parse(text: &str) -> Result<Self, PredicateError> {
        let mut clauses = Vec::new();
        for raw in text.split(',') {
            let clause = raw.trim();
            if clause.is_empty() {
                continue;
            }
            clauses.push(parse_clause(clause)?);
        }
        Ok(StorePredicate { clauses })
    }

    /// True iff every clause holds in the store.
    pub fn holds(&self, store: &Store) -> bool {
        self.clauses.iter().all(|clause| match clause {
            Clause::Equals(loc, value) => store.get(loc) == Some(value),
            Clause::Defined(loc) => store.get(loc).is_some(),
            Clause::Undefined(loc) => store.get(loc).is_none(),
        })
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }
}

impl fmt::Display for StorePredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, clause) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match clause {
                Clause::Equals(loc, value) => write!(f, "{loc}={value}")?,
                Clause::Defined(loc) => write!(f, "defined({loc})")?,
                Clause::Undefined(loc) => write!(f, "undefined({loc})")?,
            }
        }
        Ok(())
    }
}

fn err(clause: &str, reason: impl Into<String>) -> PredicateError {
    PredicateError {
        clause: clause.to_string(),
        reason: reason.into(),
    }
}

fn parse_clause(clause: &str) -> Result<Clause, PredicateError> {
    for (keyword, defined) in [("defined", true), ("undefined", false)] {
        if let Some(rest) = clause.strip_prefix(keyword) {
            let rest = rest.trim();
            let inner = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| err(clause, format!("expected `{keyword}(location)`")))?;
            let loc = parse_location(clause, inner.trim())?;
            return Ok(if defined {
                Clause::Defined(loc)
            } else {
                Clause::Undefined(loc)
            });
        }
    }
    match clause.split_once('=') {
        Some((loc, value)) => Ok(Clause::Equals(
            parse_location(clause, loc.trim())?,
            parse_value(clause, value.trim())?,
        )),
        None => Err(err(
            clause,
            "expected `loc=value`, `defined(loc)`, or `undefined(loc)`",
        )),
    }
}

fn parse_location(clause: &str, text: &str) -> Result<Location, PredicateError> {
    if let Some((base, rest)) = text.split_once('[') {
        let index_text = rest
            .strip_suffix(']')
            .ok_or_else(|| err(clause, "missing `]` in location"))?;
        let base = parse_name(clause, base.trim())?;
        let index: i64 = index_text
            .trim()
            .parse()
            .map_err(|_| err(clause, format!("bad array index `{index_text}`")))?;
        Ok(Location::Elem(base, index))
    } else {
        Ok(Location::Var(parse_name(clause, text)?))
    }
}

fn parse_name(clause: &str, text: &str) -> Result<String, PredicateError> {
    let ok = !text.is_empty()
        && text.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && text.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(text.to_string())
    } else {
        Err(err(clause, format!("bad name `{text}`")))
    }
}

fn parse_value(clause: &str, text: &str) -> Result<Value, PredicateError> {
    if text.is_empty() {
        return Err(err(clause, "missing value"));
    }
    if text.starts_with('-') || text.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        let n: i64 = text
            .parse()
            .map_err(|_| err(clause, format!("bad integer `{text}`")))?;
        Ok(Value::Int(n))
    } else {
        Ok(Value::Sym(parse_name(clause, text)?))
    }
}
