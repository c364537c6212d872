//! Bundled problems and the experiment harness: convergence, precision, model counting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::lang::{enumerate_sketch_vars, load_sketch, parse_program, PredSig, SketchProgram, SketchVar};
use crate::solve::{enumerate_answer_sets, external_solve, ground, GroundAtom, Interpretation, SolveError};
use crate::synth::{
    apply_substitution, product_size, synthesize, Backend, PreferenceMode, Substitution, SynthError, SynthOptions,
};

/// Upper bound on the models enumerated for one precision or counting run.
pub const DEFAULT_MODEL_CAP: usize = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("problem {problem}: {message}")]
    BadProblem { problem: String, message: String },
    #[error("problem {problem} has no generator `{generator}`")]
    MissingGenerator { problem: String, generator: String },
    #[error("k_max = {kmax} exceeds the example pool of {pool}")]
    PoolTooSmall { kmax: usize, pool: usize },
    #[error("more than {0} models")]
    TooManyModels(usize),
    #[error("cannot parse program: {0}")]
    Program(String),
    #[error("{} already exists (use --force to overwrite)", .0.display())]
    Exists(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Deserialize)]
struct Manifest {
    description: String,
    #[serde(default)]
    generators: BTreeMap<String, String>,
    intended: BTreeMap<String, String>,
}

struct Embedded {
    name: &'static str,
    sketch: &'static str,
    manifest: &'static str,
    files: &'static [(&'static str, &'static str)],
}

macro_rules! embedded {
    ($name:literal $(, $file:literal)*) => {
        Embedded {
            name: $name,
            sketch: include_str!(concat!("../problems/", $name, "/sketch.skasp")),
            manifest: include_str!(concat!("../problems/", $name, "/problem.toml")),
            files: &[$(($file, include_str!(concat!("../problems/", $name, "/", $file)))),*],
        }
    };
}

const CORPUS: &[Embedded] = &[
    embedded!("hamiltonian"),
    embedded!("latin_square", "generator.lp", "generator4.lp"),
    embedded!("sudoku", "generator.lp"),
    embedded!("nqueens", "generator.lp", "generator8.lp"),
    embedded!("bw_queens"),
    embedded!("graph_coloring"),
    embedded!("equal_subset_sum"),
    embedded!("celebrities"),
];

/// Names of the bundled problems, in registry order.
pub fn problem_names() -> Vec<&'static str> {
    CORPUS.iter().map(|e| e.name).collect()
}

/// A bundled problem: sketch, example pool, intended answer and generators.
#[derive(Debug, Clone)]
pub struct BenchProblem {
    pub name: String,
    pub description: String,
    pub sketch_text: String,
    pub program: SketchProgram,
    /// `(variable id, candidate name)` for every sketched variable.
    pub intended: Vec<(String, String)>,
    /// Generator name to program text; `default` is the one used for precision.
    pub generators: BTreeMap<String, String>,
}

pub fn problem(name: &str) -> Result<BenchProblem, BenchError> {
    let e = CORPUS.iter().find(|e| e.name == name).ok_or_else(|| BenchError::UnknownProblem(name.to_string()))?;
    load_embedded(e)
}

pub fn problems() -> Result<Vec<BenchProblem>, BenchError> {
    CORPUS.iter().map(load_embedded).collect()
}

fn load_embedded(e: &Embedded) -> Result<BenchProblem, BenchError> {
    let bad = |message: String| BenchError::BadProblem { problem: e.name.to_string(), message };
    let manifest: Manifest = toml::from_str(e.manifest).map_err(|err| bad(err.to_string()))?;
    let program = load_sketch(e.sketch).map_err(|err| bad(err.to_string()))?;
    let mut generators = BTreeMap::new();
    for (key, file) in &manifest.generators {
        let (_, text) =
            e.files.iter().find(|(f, _)| f == file).ok_or_else(|| bad(format!("generator file {file} is not bundled")))?;
        generators.insert(key.clone(), text.to_string());
    }
    let vars = enumerate_sketch_vars(&program);
    let mut intended = Vec::with_capacity(vars.len());
    for v in &vars {
        let c = manifest.intended.get(&v.id).ok_or_else(|| bad(format!("no intended value for {}", v.id)))?;
        intended.push((v.id.clone(), c.clone()));
    }
    if manifest.intended.len() != vars.len() {
        return Err(bad("intended names a variable the sketch does not have".into()));
    }
    Ok(BenchProblem {
        name: e.name.to_string(),
        description: manifest.description,
        sketch_text: e.sketch.to_string(),
        program,
        intended,
        generators,
    })
}

impl BenchProblem {
    pub fn vars(&self) -> Vec<SketchVar> {
        enumerate_sketch_vars(&self.program)
    }

    pub fn pool_size(&self) -> usize {
        self.program.examples.len()
    }

    pub fn intended_substitution(&self) -> Result<Substitution, BenchError> {
        let vars = self.vars();
        let mut choices = Vec::with_capacity(vars.len());
        for (v, (_, name)) in vars.iter().zip(&self.intended) {
            let i = v.domain.iter().position(|c| c.matches_name(name)).ok_or_else(|| BenchError::BadProblem {
                problem: self.name.clone(),
                message: format!("{name} is not a candidate of {}", v.id),
            })?;
            choices.push(i);
        }
        Ok(Substitution { choices })
    }

    /// The intended completed program.
    pub fn truth_program(&self) -> Result<String, BenchError> {
        Ok(apply_substitution(&self.program, &self.vars(), &self.intended_substitution()?)?)
    }

    /// The sketch restricted to the examples at the given pool indices.
    pub fn with_examples(&self, indices: &[usize]) -> SketchProgram {
        self.program.with_examples(self.program.examples.select(indices))
    }

    pub fn generator(&self, name: &str) -> Result<&str, BenchError> {
        self.generators.get(name).map(String::as_str).ok_or_else(|| BenchError::MissingGenerator {
            problem: self.name.clone(),
            generator: name.to_string(),
        })
    }

    /// Predicates the examples talk about; models are projected onto these.
    pub fn projection(&self) -> BTreeSet<PredSig> {
        self.program.examples.predicates()
    }

    /// Generator, sketch facts and `rules` as one program text.
    pub fn over_generator(&self, generator: &str, rules: &str) -> Result<String, BenchError> {
        let mut text = self.generator(generator)?.to_string();
        text.push('\n');
        for f in &self.program.facts {
            let _ = writeln!(text, "{f}.");
        }
        text.push_str(rules);
        Ok(text)
    }
}

/// Mean solution counts per number of examples.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub problem: String,
    /// Index `k` holds the mean count with `k` examples.
    pub none: Vec<f64>,
    pub default: Vec<f64>,
    /// Per trial and `k`: whether the intended substitution was among the preferred.
    pub intended_preferred: Vec<Vec<bool>>,
}

impl ConvergenceRecord {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,prefs,mean_solutions\n");
        for (k, (n, d)) in self.none.iter().zip(&self.default).enumerate() {
            let _ = writeln!(out, "{k},none,{n:.3}");
            let _ = writeln!(out, "{k},default,{d:.3}");
        }
        out
    }
}

/// Counts for one example order: `(consistent, preferred, intended preferred)` per prefix length.
pub type TrialCounts = Vec<(usize, usize, bool)>;

/// Solution counts for the nested prefixes `order[..k]`, `k = 0..=kmax`.
pub fn convergence_trial(problem: &BenchProblem, order: &[usize], kmax: usize, backend: &Backend) -> Result<TrialCounts, BenchError> {
    let intended = problem.intended_substitution()?;
    let mut out = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        let sketch = problem.with_examples(&order[..k]);
        let options = SynthOptions { backend: backend.clone(), preferences: PreferenceMode::Default, max_solutions: None };
        let r = synthesize(&sketch, &options)?;
        out.push((r.all.len(), r.preferred.len(), r.preferred.contains(&intended)));
    }
    Ok(out)
}

/// The seeded example order used by trial `trial`.
pub fn trial_order(pool: usize, seed: u64, trial: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let mut order: Vec<usize> = (0..pool).collect();
    order.shuffle(&mut rng);
    order
}

/// Mean counts over `trials` seeded example orders; each trial uses nested prefixes.
pub fn convergence_experiment(
    problem: &BenchProblem,
    kmax: usize,
    trials: usize,
    seed: u64,
    backend: &Backend,
) -> Result<ConvergenceRecord, BenchError> {
    let pool = problem.pool_size();
    if kmax > pool {
        return Err(BenchError::PoolTooSmall { kmax, pool });
    }
    let runs: Vec<TrialCounts> = (0..trials)
        .into_par_iter()
        .map(|t| convergence_trial(problem, &trial_order(pool, seed, t), kmax, backend))
        .collect::<Result<_, _>>()?;
    let mean = |f: &dyn Fn(&(usize, usize, bool)) -> usize| -> Vec<f64> {
        (0..=kmax)
            .map(|k| if runs.is_empty() { 0.0 } else { runs.iter().map(|r| f(&r[k]) as f64).sum::<f64>() / runs.len() as f64 })
            .collect()
    };
    Ok(ConvergenceRecord {
        problem: problem.name.clone(),
        none: mean(&|c| c.0),
        default: mean(&|c| c.1),
        intended_preferred: runs.iter().map(|r| r.iter().map(|c| c.2).collect()).collect(),
    })
}

/// Every answer set of a sketch-free program, refusing more than `cap`.
pub fn models(program: &str, backend: &Backend, cap: usize) -> Result<Vec<Interpretation>, BenchError> {
    let out = match backend {
        Backend::Internal => {
            let rules = parse_program(program).map_err(|e| BenchError::Program(e.to_string()))?;
            enumerate_answer_sets(&ground(&rules)?, Some(cap + 1))?
        }
        Backend::External(cfg) => external_solve(program, cfg)?,
    };
    if out.len() > cap {
        return Err(BenchError::TooManyModels(cap));
    }
    Ok(out)
}

pub fn count_models(program: &str, backend: &Backend) -> Result<usize, BenchError> {
    Ok(models(program, backend, DEFAULT_MODEL_CAP)?.len())
}

fn project(models: Vec<Interpretation>, preds: &BTreeSet<PredSig>) -> BTreeSet<Vec<GroundAtom>> {
    models
        .into_iter()
        .map(|m| m.into_iter().filter(|a| preds.contains(&PredSig::new(a.predicate.to_string(), a.args.len()))).collect())
        .collect()
}

/// `|sols(learned) ∩ sols(truth)| / |sols(learned)|` over the named generator.
pub fn precision_eval(learned: &str, problem: &BenchProblem, generator: &str, backend: &Backend) -> Result<f64, BenchError> {
    let preds = problem.projection();
    let learned = project(models(&problem.over_generator(generator, learned)?, backend, DEFAULT_MODEL_CAP)?, &preds);
    let truth = project(
        models(&problem.over_generator(generator, &problem.truth_program()?)?, backend, DEFAULT_MODEL_CAP)?,
        &preds,
    );
    Ok(precision(&learned, &truth))
}

/// Precision of one solution set against another, with the empty cases pinned down.
pub fn precision<T: Ord>(learned: &BTreeSet<T>, truth: &BTreeSet<T>) -> f64 {
    match (learned.is_empty(), truth.is_empty()) {
        (true, true) => 1.0,
        (true, false) => 0.0,
        _ => learned.intersection(truth).count() as f64 / learned.len() as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionRow {
    pub problem: String,
    pub n_sketched: usize,
    /// Mean over the preferred programs learned from the full pool.
    pub precision: f64,
}

/// Learn from the full pool with default preferences and score every preferred program.
pub fn precision_experiment(problem: &BenchProblem, backend: &Backend) -> Result<PrecisionRow, BenchError> {
    let options = SynthOptions { backend: Backend::Internal, preferences: PreferenceMode::Default, max_solutions: None };
    let r = synthesize(&problem.program, &options)?;
    let scores = r
        .programs
        .par_iter()
        .map(|p| precision_eval(p, problem, "default", backend))
        .collect::<Result<Vec<f64>, _>>()?;
    let precision = if scores.is_empty() { 0.0 } else { scores.iter().sum::<f64>() / scores.len() as f64 };
    Ok(PrecisionRow { problem: problem.name.clone(), n_sketched: r.vars.len(), precision })
}

pub fn precision_csv(rows: &[PrecisionRow]) -> String {
    let mut out = String::from("problem,n_sketched,precision\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:.4}", r.problem, r.n_sketched, r.precision);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralizationRow {
    pub solution: usize,
    pub models: usize,
    pub expected: usize,
}

/// Learn on the small instance, then count each preferred program's models on a larger generator.
pub fn generalization(problem: &BenchProblem, generator: &str, backend: &Backend) -> Result<Vec<GeneralizationRow>, BenchError> {
    let options = SynthOptions { backend: Backend::Internal, preferences: PreferenceMode::Default, max_solutions: None };
    let r = synthesize(&problem.program, &options)?;
    let expected = count_models(&problem.over_generator(generator, &problem.truth_program()?)?, backend)?;
    r.programs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            Ok(GeneralizationRow { solution: i + 1, models: count_models(&problem.over_generator(generator, p)?, backend)?, expected })
        })
        .collect()
}

pub fn generalization_csv(rows: &[GeneralizationRow]) -> String {
    let mut out = String::from("solution,models,expected\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.solution, r.models, r.expected);
    }
    out
}

/// Number of substitutions with no examples at all.
pub fn domain_size(problem: &BenchProblem) -> u128 {
    product_size(&problem.vars())
}

/// Write `contents` to `dir/name`, creating `dir`; an existing file needs `force`.
pub fn write_output(dir: &Path, name: &str, contents: &str, force: bool) -> Result<PathBuf, BenchError> {
    std::fs::create_dir_all(dir).map_err(|source| BenchError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    if path.exists() && !force {
        return Err(BenchError::Exists(path));
    }
    std::fs::write(&path, contents).map_err(|source| BenchError::Io { path: path.clone(), source })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_loads() {
        let all = problems().unwrap();
        assert_eq!(all.len(), 8);
        for p in &all {
            p.intended_substitution().unwrap();
        }
        assert!(matches!(problem("nope"), Err(BenchError::UnknownProblem(_))));
    }

    #[test]
    fn orders_are_seeded() {
        assert_eq!(trial_order(10, 7, 3), trial_order(10, 7, 3));
        assert_ne!(trial_order(10, 7, 0), trial_order(10, 7, 1));
        let mut o = trial_order(10, 7, 0);
        o.sort_unstable();
        assert_eq!(o, (0..10).collect::<Vec<_>>());
    }
}
