//! Preference profiles and Pareto filtering.

use crate::lang::{Candidate, CmpOp, PreferenceEntry, SketchKind, SketchVar};

use super::Substitution;

/// Per variable, one integer per domain entry. Larger is preferred.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PreferenceProfile {
    pub values: Vec<Vec<i64>>,
}

impl PreferenceProfile {
    /// The values stored on the variables themselves (the sketch's own `[PREFERENCES]`).
    pub fn from_vars(vars: &[SketchVar]) -> Self {
        PreferenceProfile { values: vars.iter().map(|v| v.preference.clone()).collect() }
    }

    /// Zero everywhere, then the given entries.
    pub fn from_entries(vars: &[SketchVar], entries: &[PreferenceEntry]) -> Self {
        overlay(vars, |v| vec![0; v.domain.len()], entries)
    }

    pub fn vector(&self, s: &Substitution) -> Vec<i64> {
        s.choices.iter().zip(&self.values).map(|(&c, v)| v[c]).collect()
    }
}

fn overlay(vars: &[SketchVar], base: impl Fn(&SketchVar) -> Vec<i64>, entries: &[PreferenceEntry]) -> PreferenceProfile {
    let values = vars
        .iter()
        .map(|v| {
            let mut var = v.clone();
            var.preference = base(v);
            crate::lang::apply_preferences(&mut var, entries);
            var.preference
        })
        .collect();
    PreferenceProfile { values }
}

/// `=` and `≠` get 1, every other candidate of every kind 0.
pub fn default_preferences(vars: &[SketchVar]) -> PreferenceProfile {
    PreferenceProfile { values: vars.iter().map(default_for).collect() }
}

fn default_for(v: &SketchVar) -> Vec<i64> {
    v.domain
        .iter()
        .map(|c| match (v.kind, c) {
            (SketchKind::Comparison, Candidate::Cmp(CmpOp::Eq | CmpOp::Ne)) => 1,
            _ => 0,
        })
        .collect()
}

/// Default profile with the sketch's explicit `[PREFERENCES]` entries on top.
pub fn default_with_overrides(vars: &[SketchVar], entries: &[PreferenceEntry]) -> PreferenceProfile {
    overlay(vars, default_for, entries)
}

/// Pointwise `>=` with at least one strict coordinate.
pub fn dominates(a: &[i64], b: &[i64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        strict |= x > y;
    }
    strict
}

/// The members not dominated by any other member, in input order.
pub fn pareto_filter(solutions: &[Substitution], profile: &PreferenceProfile) -> Vec<Substitution> {
    let vectors: Vec<Vec<i64>> = solutions.iter().map(|s| profile.vector(s)).collect();
    pareto_indices(&vectors).into_iter().map(|i| solutions[i].clone()).collect()
}

/// Indices of the non-dominated vectors.
pub fn pareto_indices(vectors: &[Vec<i64>]) -> Vec<usize> {
    (0..vectors.len()).filter(|&i| !vectors.iter().any(|w| dominates(w, &vectors[i]))).collect()
}
