use std::fmt;

use super::ast::{AggFn, ArithOp, Atom, CmpOp, PredSig, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SketchKind {
    Predicate,
    Comparison,
    Arithmetic,
    Negation,
    Aggregate,
}

impl SketchKind {
    pub fn name(self) -> &'static str {
        match self {
            SketchKind::Predicate => "predicate",
            SketchKind::Comparison => "comparison",
            SketchKind::Arithmetic => "arithmetic",
            SketchKind::Negation => "negation",
            SketchKind::Aggregate => "aggregate",
        }
    }

    /// Operator token used in auto-generated ids, e.g. `?=` in `?=@1.0`.
    pub fn token(self) -> &'static str {
        match self {
            SketchKind::Predicate => "?",
            SketchKind::Comparison => "?=",
            SketchKind::Arithmetic => "?+",
            SketchKind::Negation => "?not",
            SketchKind::Aggregate => "?#",
        }
    }

    /// Fixed candidate domain of an operator kind; `None` for predicates.
    pub fn operator_domain(self) -> Option<Vec<Candidate>> {
        match self {
            SketchKind::Predicate => None,
            SketchKind::Comparison => {
                let mut d: Vec<Candidate> = CmpOp::ALL.iter().map(|&op| Candidate::Cmp(op)).collect();
                d.push(Candidate::Top);
                Some(d)
            }
            SketchKind::Arithmetic => Some(ArithOp::ALL.iter().map(|&op| Candidate::Arith(op)).collect()),
            SketchKind::Negation => Some(vec![Candidate::Pos, Candidate::Neg]),
            SketchKind::Aggregate => Some(AggFn::ALL.iter().map(|&f| Candidate::Agg(f)).collect()),
        }
    }
}

/// One value a sketched variable can take.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Candidate {
    Pred(String),
    Cmp(CmpOp),
    /// The always-true comparison.
    Top,
    Arith(ArithOp),
    Pos,
    Neg,
    Agg(AggFn),
}

impl Candidate {
    /// Constant naming this candidate inside a meta-program.
    pub fn constant(&self) -> String {
        match self {
            Candidate::Pred(p) => format!("c_{p}"),
            Candidate::Cmp(op) => op.constant().to_string(),
            Candidate::Top => "top".to_string(),
            Candidate::Arith(op) => op.constant().to_string(),
            Candidate::Pos => "pos".to_string(),
            Candidate::Neg => "neg".to_string(),
            Candidate::Agg(f) => f.name().to_string(),
        }
    }

    /// Human-facing spelling (`node`, `!=`, `dist`, `neg`, `sum`).
    pub fn display_name(&self) -> String {
        match self {
            Candidate::Pred(p) => p.clone(),
            Candidate::Cmp(op) => op.symbol().to_string(),
            Candidate::Top => "top".to_string(),
            Candidate::Arith(op) => op.symbol().to_string(),
            Candidate::Pos => "pos".to_string(),
            Candidate::Neg => "neg".to_string(),
            Candidate::Agg(f) => f.name().to_string(),
        }
    }

    /// Accepts either the display spelling or the meta constant.
    pub fn matches_name(&self, name: &str) -> bool {
        let name = name.trim();
        self.display_name() == name
            || self.constant() == name
            || (matches!(self, Candidate::Cmp(CmpOp::Ne)) && name == "<>")
            || (matches!(self, Candidate::Cmp(CmpOp::Eq)) && name == "==")
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_name())
    }
}

/// A decision point of the sketch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchVar {
    /// `?p` for declared predicates, `?=@1.0` style for operator occurrences.
    pub id: String,
    pub kind: SketchKind,
    /// Arity of the candidates (predicate kind only).
    pub arity: Option<usize>,
    pub domain: Vec<Candidate>,
    /// Preference per domain entry, aligned with `domain`.
    pub preference: Vec<i64>,
}

impl SketchVar {
    pub fn position(&self, candidate: &Candidate) -> Option<usize> {
        self.domain.iter().position(|c| c == candidate)
    }
}

/// `?p/N : cand1, cand2` from the `[SKETCHEDVAR]` section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub arity: usize,
    pub candidates: Vec<String>,
    pub line: usize,
}

/// One `[PREFERENCES]` line: target var (or operator token for all occurrences) and values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceEntry {
    pub target: String,
    pub values: Vec<(String, i64)>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Example {
    pub atoms: Vec<Atom>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExampleSet {
    pub positives: Vec<Example>,
    pub negatives: Vec<Example>,
}

impl ExampleSet {
    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Examples with their global index: positives first, then negatives.
    pub fn indexed(&self) -> impl Iterator<Item = (usize, bool, &Example)> {
        let offset = self.positives.len();
        self.positives
            .iter()
            .enumerate()
            .map(|(i, e)| (i, true, e))
            .chain(self.negatives.iter().enumerate().map(move |(i, e)| (offset + i, false, e)))
    }

    /// Predicates occurring in any example.
    pub fn predicates(&self) -> std::collections::BTreeSet<PredSig> {
        self.positives
            .iter()
            .chain(&self.negatives)
            .flat_map(|e| e.atoms.iter().map(Atom::sig))
            .collect()
    }

    /// Keep only the examples at the given global indices (labels preserved).
    pub fn select(&self, indices: &[usize]) -> ExampleSet {
        let mut out = ExampleSet::default();
        let offset = self.positives.len();
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for i in sorted {
            if i < offset {
                out.positives.push(self.positives[i].clone());
            } else if let Some(e) = self.negatives.get(i - offset) {
                out.negatives.push(e.clone());
            }
        }
        out
    }
}

/// A parsed sketch.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SketchProgram {
    pub rules: Vec<Rule>,
    pub declarations: Vec<PredicateDecl>,
    pub facts: Vec<Atom>,
    pub examples: ExampleSet,
    pub preferences: Vec<PreferenceEntry>,
}

impl SketchProgram {
    pub fn declaration(&self, name: &str) -> Option<&PredicateDecl> {
        self.declarations.iter().find(|d| d.name == name)
    }

    pub fn with_examples(&self, examples: ExampleSet) -> SketchProgram {
        SketchProgram { examples, ..self.clone() }
    }

    /// Copy with rule source lines zeroed, for structural comparison.
    pub fn without_locations(&self) -> SketchProgram {
        let mut p = self.clone();
        p.rules.iter_mut().for_each(|r| r.line = 0);
        p.declarations.iter_mut().for_each(|d| d.line = 0);
        p.preferences.iter_mut().for_each(|e| e.line = 0);
        for e in p.examples.positives.iter_mut().chain(p.examples.negatives.iter_mut()) {
            e.line = 0;
        }
        p
    }
}
