use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use skasp_core::bench::{self, BenchError, BenchProblem};
use skasp_core::dependency::{check_stratified, dependency_graph, example_dependent_predicates, StratificationResult};
use skasp_core::lang::{load_sketch, parse_preferences, SketchProgram};
use skasp_core::rewrite::{rewrite, RewriteError};
use skasp_core::solve::{SolveError, SolverConfig};
use skasp_core::synth::{synthesize, Backend, PreferenceMode, SynthError, SynthOptions, SynthesisResult};

const EXIT_NO_SOLUTION: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NOT_STRATIFIED: u8 = 3;
const EXIT_BACKEND: u8 = 4;

#[derive(Parser)]
#[command(name = "skasp", version, about = "Complete sketched ASP programs from examples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the preferred completions of a sketch.
    Synth(SynthArgs),
    /// Report stratification and the example-dependent predicates.
    Check { file: PathBuf },
    /// Print the rewritten meta-program.
    EmitMeta {
        file: PathBuf,
        /// Write to this file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the convergence, precision and generalization experiments.
    Bench(BenchArgs),
}

#[derive(clap::Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = BackendKind::Internal)]
    backend: BackendKind,
    /// Kill the external solver after this many seconds.
    #[arg(long, value_name = "SECONDS")]
    solver_timeout: Option<u64>,
}

#[derive(clap::Args)]
struct SynthArgs {
    file: PathBuf,
    /// `default`, `none` or a file of preference lines.
    #[arg(long, default_value = "default")]
    prefs: String,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_name = "N")]
    max_solutions: Option<usize>,
    #[arg(long)]
    json: bool,
    /// Also write the meta-program to this file.
    #[arg(long, value_name = "PATH")]
    emit_meta: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// A bundled problem name, or `all`.
    #[arg(long, default_value = "all")]
    problem: String,
    /// Largest number of examples; defaults to the whole pool.
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    /// Overwrite existing CSV files.
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Internal,
    External,
}

impl SolverArgs {
    fn backend(&self) -> Backend {
        match self.backend {
            BackendKind::Internal => Backend::Internal,
            BackendKind::External => {
                Backend::External(SolverConfig::from_env().with_timeout(self.solver_timeout.map(Duration::from_secs)))
            }
        }
    }
}

/// An error that carries its process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl std::error::Error for Failure {}

fn fail(code: u8, error: impl Into<anyhow::Error>) -> anyhow::Error {
    anyhow::Error::new(Failure { code, error: error.into() })
}

fn solve_code(e: &SolveError) -> u8 {
    match e {
        SolveError::NotStratified(_) => EXIT_NOT_STRATIFIED,
        SolveError::Unsafe { .. } => EXIT_INPUT,
        _ => EXIT_BACKEND,
    }
}

fn synth_failure(e: SynthError) -> anyhow::Error {
    let code = match &e {
        SynthError::Rewrite(RewriteError::NotStratified(_)) => EXIT_NOT_STRATIFIED,
        SynthError::Rewrite(_) => EXIT_INPUT,
        SynthError::Solve(s) => solve_code(s),
        _ => EXIT_BACKEND,
    };
    fail(code, e)
}

fn bench_failure(e: BenchError) -> anyhow::Error {
    let code = match &e {
        BenchError::UnknownProblem(_) | BenchError::PoolTooSmall { .. } | BenchError::Exists(_) => EXIT_INPUT,
        BenchError::Synth(SynthError::Rewrite(RewriteError::NotStratified(_))) => EXIT_NOT_STRATIFIED,
        BenchError::Synth(SynthError::Solve(s)) | BenchError::Solve(s) => solve_code(s),
        _ => EXIT_BACKEND,
    };
    fail(code, e)
}

fn load(path: &Path) -> Result<SketchProgram> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).map_err(|e| fail(EXIT_INPUT, e))?;
    load_sketch(&text).with_context(|| format!("in {}", path.display())).map_err(|e| fail(EXIT_INPUT, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = e.downcast_ref::<Failure>().map_or(EXIT_BACKEND, |f| f.code);
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Synth(args) => synth(args),
        Command::Check { file } => check(&file),
        Command::EmitMeta { file, out } => {
            let program = load(&file)?;
            let meta = rewrite(&program).map_err(|e| synth_failure(e.into()))?;
            write_or_print(out.as_deref(), &meta.to_text())?;
            Ok(0)
        }
        Command::Bench(args) => run_bench(args),
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())).map_err(|e| fail(EXIT_INPUT, e)),
        None => emit(text),
    }
}

/// Write to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn preference_mode(spec: &str) -> Result<PreferenceMode> {
    Ok(match spec {
        "none" => PreferenceMode::None,
        "default" => PreferenceMode::Default,
        path => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read preference file {path}"))
                .map_err(|e| fail(EXIT_INPUT, e))?;
            let entries = parse_preferences(&text).with_context(|| format!("in {path}")).map_err(|e| fail(EXIT_INPUT, e))?;
            PreferenceMode::Custom(entries)
        }
    })
}

fn synth(args: SynthArgs) -> Result<u8> {
    let program = load(&args.file)?;
    if let Some(path) = &args.emit_meta {
        let meta = rewrite(&program).map_err(|e| synth_failure(e.into()))?;
        write_or_print(Some(path), &meta.to_text())?;
    }
    let options = SynthOptions {
        backend: args.solver.backend(),
        preferences: preference_mode(&args.prefs)?,
        max_solutions: args.max_solutions,
    };
    let result = synthesize(&program, &options).map_err(synth_failure)?;
    if args.json {
        emit(&format!("{}\n", serde_json::to_string_pretty(&JsonReport::new(&result))?))?;
    } else {
        emit(&render_human(&result))?;
    }
    Ok(if result.stats.preferred == 0 { EXIT_NO_SOLUTION } else { 0 })
}

fn render_human(r: &SynthesisResult) -> String {
    let s = &r.stats;
    let mut out = format!("{} consistent, {} preferred ({} ms)\n", s.consistent, s.preferred, s.elapsed.as_millis());
    for (i, (sub, program)) in r.preferred.iter().zip(&r.programs).enumerate() {
        let assignment: Vec<String> = sub.describe(&r.vars).into_iter().map(|(id, c)| format!("{id} = {c}")).collect();
        out += &format!("\nsolution {}: {}", i + 1, assignment.join(", "));
        match r.vector(sub) {
            Some(v) => out += &format!("  {v:?}\n"),
            None => out.push('\n'),
        }
        for line in program.lines() {
            out += &format!("  {line}\n");
        }
    }
    if s.preferred > r.preferred.len() {
        out += &format!("\n({} more not shown)\n", s.preferred - r.preferred.len());
    }
    out
}

#[derive(Serialize)]
struct JsonChoice {
    var: String,
    value: String,
}

#[derive(Serialize)]
struct JsonSubstitution {
    assignment: Vec<JsonChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vector: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    program: Option<String>,
}

#[derive(Serialize)]
struct JsonVar {
    id: String,
    kind: &'static str,
    domain: Vec<String>,
}

#[derive(Serialize)]
struct JsonStats {
    explored: u64,
    answer_sets: usize,
    consistent: usize,
    preferred: usize,
    elapsed_ms: u128,
}

#[derive(Serialize)]
struct JsonReport {
    variables: Vec<JsonVar>,
    all: Vec<JsonSubstitution>,
    preferred: Vec<JsonSubstitution>,
    stats: JsonStats,
}

impl JsonReport {
    fn new(r: &SynthesisResult) -> Self {
        let entry = |s, program: Option<&String>| JsonSubstitution {
            assignment: skasp_core::synth::Substitution::describe(s, &r.vars)
                .into_iter()
                .map(|(var, value)| JsonChoice { var, value })
                .collect(),
            vector: r.vector(s),
            program: program.cloned(),
        };
        JsonReport {
            variables: r
                .vars
                .iter()
                .map(|v| JsonVar { id: v.id.clone(), kind: v.kind.name(), domain: v.domain.iter().map(|c| c.display_name()).collect() })
                .collect(),
            all: r.all.iter().map(|s| entry(s, None)).collect(),
            preferred: r.preferred.iter().zip(&r.programs).map(|(s, p)| entry(s, Some(p))).collect(),
            stats: JsonStats {
                explored: r.stats.explored,
                answer_sets: r.stats.answer_sets,
                consistent: r.stats.consistent,
                preferred: r.stats.preferred,
                elapsed_ms: r.stats.elapsed.as_millis(),
            },
        }
    }
}

fn check(file: &Path) -> Result<u8> {
    let program = load(file)?;
    let graph = dependency_graph(&program);
    let sp: Vec<String> = example_dependent_predicates(&program).iter().map(ToString::to_string).collect();
    match check_stratified(&graph) {
        StratificationResult::Stratified(strata) => {
            let depth = strata.values().max().map_or(0, |m| m + 1);
            let sp = if sp.is_empty() { "(none)".to_string() } else { sp.join(", ") };
            emit(&format!("stratified ({depth} strata)\nexample-dependent: {sp}\n"))?;
            Ok(0)
        }
        StratificationResult::NegativeCycle(cycle) => {
            let names: Vec<String> = cycle.iter().map(ToString::to_string).collect();
            emit(&format!("not stratified: negative cycle {}\n", names.join(" -> ")))?;
            Ok(EXIT_NOT_STRATIFIED)
        }
    }
}

fn run_bench(args: BenchArgs) -> Result<u8> {
    let selected: Vec<BenchProblem> = if args.problem == "all" {
        bench::problems().map_err(bench_failure)?
    } else {
        vec![bench::problem(&args.problem).map_err(bench_failure)?]
    };
    let backend = args.solver.backend();
    let write = |name: &str, csv: &str| -> Result<()> {
        let path = bench::write_output(&args.out, name, csv, args.force).map_err(bench_failure)?;
        eprintln!("wrote {}", path.display());
        Ok(())
    };

    for p in &selected {
        let kmax = args.kmax.unwrap_or_else(|| p.pool_size());
        let record = bench::convergence_experiment(p, kmax, args.trials, args.seed, &backend).map_err(bench_failure)?;
        write(&format!("convergence_{}.csv", p.name), &record.to_csv())?;
    }

    let with_generator: Vec<&BenchProblem> = selected.iter().filter(|p| p.generators.contains_key("default")).collect();
    if !with_generator.is_empty() {
        let rows = with_generator
            .iter()
            .map(|p| bench::precision_experiment(p, &backend))
            .collect::<Result<Vec<_>, _>>()
            .map_err(bench_failure)?;
        write("precision.csv", &bench::precision_csv(&rows))?;
    }

    if let Some(latin) = selected.iter().find(|p| p.generators.contains_key("4x4")) {
        let rows = bench::generalization(latin, "4x4", &backend).map_err(bench_failure)?;
        write("generalization.csv", &bench::generalization_csv(&rows))?;
    }
    Ok(0)
}
