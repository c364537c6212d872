//! Synthesis: rewrite, solve, extract substitutions and keep the preferred ones.

mod apply;
mod naive;
mod prefs;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

pub use apply::{apply_substitution, instantiate};
pub use naive::{consistent, naive_synthesize, nth_substitution, product_size, violates, DEFAULT_NAIVE_CAP};
pub use prefs::{default_preferences, default_with_overrides, dominates, pareto_filter, pareto_indices, PreferenceProfile};

use crate::lang::{enumerate_sketch_vars, PreferenceEntry, SketchProgram, SketchVar};
use crate::rewrite::{rewrite, MetaProgram, RewriteError};
use crate::solve::{enumerate, external_solve, ground, Interpretation, SolveError, SolverConfig};

/// One candidate index per sketched variable, in [`enumerate_sketch_vars`] order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Substitution {
    pub choices: Vec<usize>,
}

impl Substitution {
    /// `(id, candidate)` pairs for display.
    pub fn describe(&self, vars: &[SketchVar]) -> Vec<(String, String)> {
        vars.iter().zip(&self.choices).map(|(v, &c)| (v.id.clone(), v.domain[c].display_name())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("substitution is not total: {0}")]
    NotTotal(String),
    #[error("answer set has no decision for every sketched variable")]
    MissingDecision,
    #[error("{count} substitutions exceed the limit of {cap}")]
    TooManySubstitutions { count: u128, cap: u128 },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Internal,
    External(SolverConfig),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum PreferenceMode {
    /// Keep every consistent substitution.
    #[default]
    None,
    /// `=` and `≠` preferred, with the sketch's own `[PREFERENCES]` on top.
    Default,
    /// Only the given entries; everything unlisted is 0.
    Custom(Vec<PreferenceEntry>),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SynthOptions {
    pub backend: Backend,
    pub preferences: PreferenceMode,
    /// Truncates the reported lists; statistics still count everything.
    pub max_solutions: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SynthStats {
    /// Partial assignments visited by the internal search (0 for the external backend).
    pub explored: u64,
    pub answer_sets: usize,
    pub consistent: usize,
    pub preferred: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisResult {
    pub vars: Vec<SketchVar>,
    pub all: Vec<Substitution>,
    pub preferred: Vec<Substitution>,
    pub profile: Option<PreferenceProfile>,
    /// Completed program text for each member of `preferred`.
    pub programs: Vec<String>,
    pub stats: SynthStats,
}

impl SynthesisResult {
    pub fn vector(&self, s: &Substitution) -> Option<Vec<i64>> {
        self.profile.as_ref().map(|p| p.vector(s))
    }
}

/// Project answer sets onto their decision atoms; sorted and deduplicated.
pub fn extract_substitutions(meta: &MetaProgram, answer_sets: &[Interpretation]) -> Result<Vec<Substitution>, SynthError> {
    let mut out = BTreeSet::new();
    for m in answer_sets {
        let atoms: Vec<_> = m.iter().map(|a| a.to_atom()).collect();
        let choices = meta.decode(&atoms).ok_or(SynthError::MissingDecision)?;
        out.insert(Substitution { choices });
    }
    Ok(out.into_iter().collect())
}

/// Consistent substitutions via the rewritten meta-program, plus the number of search nodes.
pub fn solve_meta(meta: &MetaProgram, backend: &Backend) -> Result<(Vec<Substitution>, usize, u64), SynthError> {
    match backend {
        Backend::Internal => {
            let g = ground(&meta.program())?;
            let en = enumerate(&g, None)?;
            let mut out = BTreeSet::new();
            for a in &en.assignments {
                let atoms: Vec<_> = a.iter().zip(g.blocks()).map(|(&k, b)| g.atom(b[k]).to_atom()).collect();
                out.insert(Substitution { choices: meta.decode(&atoms).ok_or(SynthError::MissingDecision)? });
            }
            Ok((out.into_iter().collect(), en.assignments.len(), en.nodes))
        }
        Backend::External(cfg) => {
            let models = external_solve(&meta.to_text(), cfg)?;
            let n = models.len();
            Ok((extract_substitutions(meta, &models)?, n, 0))
        }
    }
}

pub fn profile_for(program: &SketchProgram, vars: &[SketchVar], mode: &PreferenceMode) -> Option<PreferenceProfile> {
    match mode {
        PreferenceMode::None => None,
        PreferenceMode::Default => Some(default_with_overrides(vars, &program.preferences)),
        PreferenceMode::Custom(entries) => Some(PreferenceProfile::from_entries(vars, entries)),
    }
}

pub fn synthesize(program: &SketchProgram, options: &SynthOptions) -> Result<SynthesisResult, SynthError> {
    let start = Instant::now();
    let vars = enumerate_sketch_vars(program);
    let meta = rewrite(program)?;
    let (all, answer_sets, explored) = solve_meta(&meta, &options.backend)?;
    let profile = profile_for(program, &vars, &options.preferences);
    let preferred = match &profile {
        Some(p) => pareto_filter(&all, p),
        None => all.clone(),
    };
    let stats = SynthStats {
        explored,
        answer_sets,
        consistent: all.len(),
        preferred: preferred.len(),
        elapsed: Duration::ZERO,
    };
    let cap = options.max_solutions.unwrap_or(usize::MAX);
    let all: Vec<Substitution> = all.into_iter().take(cap).collect();
    let preferred: Vec<Substitution> = preferred.into_iter().take(cap).collect();
    let programs = preferred.iter().map(|s| apply_substitution(program, &vars, s)).collect::<Result<_, _>>()?;
    let mut result = SynthesisResult { vars, all, preferred, profile, programs, stats };
    result.stats.elapsed = start.elapsed();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::load_sketch;

    const HAM: &str = include_str!("../../problems/hamiltonian/sketch.skasp");

    #[test]
    fn hamiltonian_unique() {
        let p = load_sketch(HAM).unwrap();
        let r = synthesize(&p, &SynthOptions::default()).unwrap();
        assert_eq!(r.all.len(), 1);
        let d = r.all[0].describe(&r.vars);
        let names: Vec<&str> = d.iter().map(|(_, c)| c.as_str()).collect();
        assert_eq!(names, ["node", "neg", "reached"]);
        assert!(r.programs[0].contains(":- node(Y), not reached(Y)."));
        assert_eq!(naive_synthesize(&p, DEFAULT_NAIVE_CAP).unwrap(), r.all);
    }
}
