//! Enumerate-and-test: instantiate every substitution and check each example directly.

use rayon::prelude::*;

use crate::lang::{enumerate_sketch_vars, Example, Rule, SketchProgram, SketchVar};
use crate::solve::{ground, stratified_model};

use super::{instantiate, Substitution, SynthError};

pub const DEFAULT_NAIVE_CAP: u128 = 1_000_000;

/// Number of substitutions, saturating.
pub fn product_size(vars: &[SketchVar]) -> u128 {
    vars.iter().fold(1u128, |acc, v| acc.saturating_mul(v.domain.len() as u128))
}

/// The `n`-th substitution in lexicographic order (last variable varies fastest).
pub fn nth_substitution(vars: &[SketchVar], mut n: u128) -> Substitution {
    let mut choices = vec![0; vars.len()];
    for (i, v) in vars.iter().enumerate().rev() {
        let k = v.domain.len() as u128;
        choices[i] = (n % k) as usize;
        n /= k;
    }
    Substitution { choices }
}

/// Whether the unique model of `rules ∪ facts ∪ example` violates some constraint.
pub fn violates(rules: &[Rule], facts: &[Rule], example: &Example) -> Result<bool, SynthError> {
    let mut program: Vec<Rule> = Vec::with_capacity(rules.len() + facts.len() + example.atoms.len());
    program.extend_from_slice(facts);
    program.extend(example.atoms.iter().cloned().map(Rule::fact));
    program.extend_from_slice(rules);
    let g = ground(&program)?;
    Ok(!stratified_model(&g, &[])?.violations.is_empty())
}

/// Whether `theta` accepts every positive and rejects every negative example.
pub fn consistent(program: &SketchProgram, vars: &[SketchVar], theta: &Substitution) -> Result<bool, SynthError> {
    let rules = instantiate(program, vars, theta)?;
    let facts: Vec<Rule> = program.facts.iter().cloned().map(Rule::fact).collect();
    for e in &program.examples.positives {
        if violates(&rules, &facts, e)? {
            return Ok(false);
        }
    }
    for e in &program.examples.negatives {
        if !violates(&rules, &facts, e)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every consistent substitution, sorted, refusing products larger than `cap`.
pub fn naive_synthesize(program: &SketchProgram, cap: u128) -> Result<Vec<Substitution>, SynthError> {
    let vars = enumerate_sketch_vars(program);
    let total = product_size(&vars);
    if total > cap {
        return Err(SynthError::TooManySubstitutions { count: total, cap });
    }
    let found: Vec<Result<Option<Substitution>, SynthError>> = (0..total as u64)
        .into_par_iter()
        .map(|n| {
            let theta = nth_substitution(&vars, n as u128);
            Ok(consistent(program, &vars, &theta)?.then_some(theta))
        })
        .collect();
    let mut out = Vec::new();
    for r in found {
        if let Some(s) = r? {
            out.push(s);
        }
    }
    out.sort();
    Ok(out)
}
