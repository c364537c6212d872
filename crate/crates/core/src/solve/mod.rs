//! Solving meta-programs.
//!
//! The internal backend grounds the program, evaluates everything that does not depend
//! on a choice exactly, and then enumerates the exactly-one choice blocks depth first,
//! evaluating the stratified remainder level by level so that violated constraints
//! prune whole subtrees. The external backend pipes the program text to a solver.

pub mod builtins;
mod engine;
pub mod external;
mod ground;

use std::fmt;
use std::sync::Arc;

pub use engine::{count_answer_sets, enumerate, enumerate_answer_sets, stratified_model, Enumeration, ModelReport};
pub use external::{external_solve, SolverConfig};
pub use ground::{ground, ground_with, AtomId, GroundOptions, GroundProgram};

use crate::lang::{Atom, Term};

/// A ground term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    /// `#inf`, below every other term.
    Inf,
    Int(i64),
    Sym(Arc<str>),
    /// `#sup`, above every other term.
    Sup,
}

impl Value {
    pub fn sym(s: &str) -> Value {
        Value::Sym(Arc::from(s))
    }

    pub fn to_term(&self) -> Term {
        match self {
            Value::Inf => Term::Sym("#inf".into()),
            Value::Int(i) => Term::Int(*i),
            Value::Sym(s) => Term::Sym(s.to_string()),
            Value::Sup => Term::Sym("#sup".into()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Inf => f.write_str("#inf"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => f.write_str(s),
            Value::Sup => f.write_str("#sup"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: Arc<str>,
    pub args: Vec<Value>,
}

impl GroundAtom {
    pub fn new(predicate: &str, args: Vec<Value>) -> Self {
        GroundAtom { predicate: Arc::from(predicate), args }
    }

    pub fn to_atom(&self) -> Atom {
        Atom::new(self.predicate.to_string(), self.args.iter().map(Value::to_term).collect())
    }

    /// `None` if the atom has variables or arithmetic.
    pub fn from_atom(atom: &Atom) -> Option<GroundAtom> {
        let args = atom
            .args
            .iter()
            .map(|t| match t {
                Term::Int(i) => Some(Value::Int(*i)),
                Term::Sym(s) if s == "#inf" => Some(Value::Inf),
                Term::Sym(s) if s == "#sup" => Some(Value::Sup),
                Term::Sym(s) => Some(Value::sym(s)),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(GroundAtom { predicate: Arc::from(atom.predicate.as_str()), args })
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// A set of ground atoms, kept sorted.
pub type Interpretation = std::collections::BTreeSet<GroundAtom>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("unsafe variable(s) {vars} in `{rule}`")]
    Unsafe { rule: String, vars: String },
    #[error("the program is not stratified: {0}")]
    NotStratified(String),
    #[error("integer overflow evaluating {0}")]
    Overflow(String),
    #[error("not supported by the internal backend: {0}")]
    BackendLimitation(String),
    #[error("search space too large: {0}")]
    TooLarge(String),
    #[error("solver command `{0}` could not be started: {1}")]
    SolverNotFound(String, String),
    #[error("solver failed ({status}): {message}")]
    SolverFailed { status: String, message: String },
    #[error("solver timed out after {0} s")]
    Timeout(u64),
    #[error("unparseable model line `{0}`")]
    UnparseableModel(String),
    #[error("i/o error talking to the solver: {0}")]
    Io(String),
}
