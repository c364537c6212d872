//! One PASS/FAIL/SKIP line per acceptance criterion. Fails if any criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skasp_core::bench::{self, count_models, problem, problems};
use skasp_core::lang::{load_sketch, Candidate, CmpOp, Head, Literal, SketchKind};
use skasp_core::rewrite::{rewrite, Provenance};
use skasp_core::solve::SolverConfig;
use skasp_core::synth::{
    dominates, naive_synthesize, pareto_indices, synthesize, Backend, PreferenceMode, SynthOptions, DEFAULT_NAIVE_CAP,
};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn solver() -> Option<SolverConfig> {
    let cfg = SolverConfig::from_env();
    cfg.is_available().then_some(cfg)
}

fn options(backend: Backend, preferences: PreferenceMode) -> SynthOptions {
    SynthOptions { backend, preferences, max_solutions: None }
}

fn hamiltonian_uniqueness() -> Check {
    let start = Instant::now();
    let p = problem("hamiltonian").map_err(|e| e.to_string())?;
    let r = synthesize(&p.program, &options(Backend::Internal, PreferenceMode::None)).map_err(|e| e.to_string())?;
    ensure(r.all.len() == 1, format!("{} substitutions", r.all.len()))?;
    let names: Vec<String> = r.all[0].describe(&r.vars).into_iter().map(|(_, c)| c).collect();
    ensure(names == ["node", "neg", "reached"], format!("got {names:?}"))?;
    ensure(r.programs[0].contains(":- node(Y), not reached(Y)."), "completed program lacks the closing constraint")?;
    let naive = naive_synthesize(&p.program, DEFAULT_NAIVE_CAP).map_err(|e| e.to_string())?;
    ensure(naive == r.all, "naive baseline disagrees")?;
    ensure(bench::domain_size(&p) == 8, "expected 8 assignments")?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(1), format!("took {t:?}"))?;
    Ok(format!("1 substitution, matches naive over 8, {t:?}"))
}

fn theorem_one() -> Check {
    let start = Instant::now();
    let mut total = 0;
    for p in problems().map_err(|e| e.to_string())? {
        let r = synthesize(&p.program, &options(Backend::Internal, PreferenceMode::None)).map_err(|e| e.to_string())?;
        let naive = naive_synthesize(&p.program, DEFAULT_NAIVE_CAP).map_err(|e| e.to_string())?;
        ensure(naive == r.all, format!("{}: meta {} vs naive {}", p.name, r.all.len(), naive.len()))?;
        total += bench::domain_size(&p);
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(60), format!("took {t:?}"))?;
    Ok(format!("8 problems, {total} substitutions checked, {t:?}"))
}

fn backend_agreement(cfg: SolverConfig) -> Check {
    for p in problems().map_err(|e| e.to_string())? {
        let internal = synthesize(&p.program, &options(Backend::Internal, PreferenceMode::None)).map_err(|e| e.to_string())?;
        let external =
            synthesize(&p.program, &options(Backend::External(cfg.clone()), PreferenceMode::None)).map_err(|e| e.to_string())?;
        ensure(internal.all == external.all, format!("{}: backends disagree", p.name))?;
    }
    Ok(format!("8 problems agree with `{}`", cfg.command.join(" ")))
}

fn preference_semantics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let vectors: Vec<Vec<i64>> = (0..10_000).map(|_| (0..3).map(|_| rng.random_range(0..3)).collect()).collect();
    for v in &vectors {
        ensure(!dominates(v, v), "dominance is reflexive")?;
    }
    for w in vectors.windows(3) {
        let (a, b, c) = (&w[0], &w[1], &w[2]);
        ensure(!(dominates(a, b) && dominates(b, a)), "dominance is not asymmetric")?;
        if dominates(a, b) && dominates(b, c) {
            ensure(dominates(a, c), "dominance is not transitive")?;
        }
    }
    ensure(pareto_indices(&[vec![1, 2], vec![2, 1]]) == [0, 1], "incomparable pair was filtered")?;
    ensure(pareto_indices(&[vec![1, 2], vec![2, 1], vec![2, 2]]) == [2], "(2,2) does not dominate")?;
    Ok("10^4 random vectors, incomparability kept, (2,2) alone survives".into())
}

fn latin_convergence() -> Check {
    let p = problem("latin_square").map_err(|e| e.to_string())?;
    let full = synthesize(&p.program, &options(Backend::Internal, PreferenceMode::Default)).map_err(|e| e.to_string())?;
    for s in &full.preferred {
        for (v, &c) in full.vars.iter().zip(&s.choices) {
            let ok = v.kind == SketchKind::Comparison && matches!(v.domain[c], Candidate::Cmp(CmpOp::Eq | CmpOp::Ne));
            ensure(ok, format!("preferred member uses {}", v.domain[c]))?;
        }
    }
    let rec = bench::convergence_experiment(&p, p.pool_size(), 10, 7, &Backend::Internal).map_err(|e| e.to_string())?;
    for k in 0..rec.none.len() {
        ensure(rec.default[k] <= rec.none[k], format!("k={k}: default above none"))?;
    }
    ensure(rec.intended_preferred.iter().flatten().all(|&b| b), "intended program filtered out at some k")?;
    Ok(format!("{} preferred at full pool, all in {{=, !=}}", full.preferred.len()))
}

/// Grids whose rows are permutations of 1..=n and whose columns have no repeats.
fn latin_oracle(n: usize) -> usize {
    fn rec(n: usize, rows: &mut Vec<Vec<usize>>, perms: &[Vec<usize>]) -> usize {
        if rows.len() == n {
            return 1;
        }
        let mut total = 0;
        for p in perms {
            if rows.iter().all(|r| r.iter().zip(p).all(|(a, b)| a != b)) {
                rows.push(p.clone());
                total += rec(n, rows, perms);
                rows.pop();
            }
        }
        total
    }
    let mut perms: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for p in &perms {
            for x in (1..=n).filter(|x| !p.contains(x)) {
                let mut q = p.clone();
                q.push(x);
                next.push(q);
            }
        }
        perms = next;
    }
    rec(n, &mut Vec::new(), &perms)
}

fn queens_oracle(n: i64) -> usize {
    fn place(row: i64, n: i64, cols: &mut Vec<i64>) -> usize {
        if row == n {
            return 1;
        }
        let mut total = 0;
        for c in 0..n {
            if cols.iter().enumerate().all(|(r, &q)| q != c && (row - r as i64).abs() != (c - q).abs()) {
                cols.push(c);
                total += place(row + 1, n, cols);
                cols.pop();
            }
        }
        total
    }
    place(0, n, &mut Vec::new())
}

fn model_counts(cfg: Option<SolverConfig>) -> Check {
    let start = Instant::now();
    let latin = problem("latin_square").map_err(|e| e.to_string())?;
    let truth = latin.truth_program().map_err(|e| e.to_string())?;
    let count = |generator: &str, backend: &Backend| -> Result<usize, String> {
        count_models(&latin.over_generator(generator, &truth).map_err(|e| e.to_string())?, backend).map_err(|e| e.to_string())
    };
    let four = count("4x4", &Backend::Internal)?;
    let three = count("default", &Backend::Internal)?;
    ensure(four == latin_oracle(4) && four == 576, format!("4x4: {four}"))?;
    ensure(three == latin_oracle(3) && three == 12, format!("3x3: {three}"))?;
    let mut msg = format!("latin 4x4 = {four}, 3x3 = {three}");
    match cfg {
        Some(cfg) => {
            let q = problem("nqueens").map_err(|e| e.to_string())?;
            let text = q.over_generator("8x8", &q.truth_program().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let eight = count_models(&text, &Backend::External(cfg)).map_err(|e| e.to_string())?;
            ensure(eight == 92 && queens_oracle(8) == 92, format!("8-queens: {eight}"))?;
            msg.push_str(", 8-queens = 92 (external)");
        }
        None => msg.push_str(", 8-queens skipped (no solver)"),
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(30), format!("took {t:?}"))?;
    Ok(format!("{msg}, {t:?}"))
}

fn aggregates() -> Check {
    let mut parts = Vec::new();
    for name in ["equal_subset_sum", "celebrities"] {
        let p = problem(name).map_err(|e| e.to_string())?;
        let r = synthesize(&p.program, &options(Backend::Internal, PreferenceMode::Default)).map_err(|e| e.to_string())?;
        let intended = p.intended_substitution().map_err(|e| e.to_string())?;
        ensure(r.preferred.contains(&intended), format!("{name}: intended not preferred"))?;
        ensure(r.vars.iter().all(|v| v.domain.len() == 4), format!("{name}: aggregate domain is not 4"))?;
        let naive = naive_synthesize(&p.program, DEFAULT_NAIVE_CAP).map_err(|e| e.to_string())?;
        ensure(naive == r.all, format!("{name}: naive disagrees"))?;
        let picked: Vec<String> = intended.describe(&r.vars).into_iter().map(|(_, c)| c).collect();
        parts.push(format!("{name} {picked:?} among {}", r.preferred.len()));
    }
    Ok(parts.join("; "))
}

fn rewriting_shape() -> Check {
    let p = load_sketch(include_str!("../problems/hamiltonian/sketch.skasp")).map_err(|e| e.to_string())?;
    let meta = rewrite(&p).map_err(|e| e.to_string())?;
    // Choice blocks: one exactly-one block per sketched variable, over its candidates.
    let choices: Vec<_> = meta
        .rules
        .iter()
        .filter_map(|r| match &r.rule.head {
            Head::Choice(c) => Some(c),
            _ => None,
        })
        .collect();
    ensure(choices.len() == 3, format!("{} choice blocks", choices.len()))?;
    ensure(choices.iter().all(|c| c.lower == Some(1) && c.upper == Some(1) && c.elements.len() == 2), "blocks are not 1{..}1 over 2")?;
    let bridges: BTreeSet<&str> = meta
        .rules
        .iter()
        .filter(|r| matches!(r.origin, Provenance::Bridge(_)))
        .filter_map(|r| match &r.rule.head {
            Head::Atom(a) => Some(a.predicate.as_str()),
            _ => None,
        })
        .collect();
    ensure(bridges.len() == 3, format!("bridging families {bridges:?}"))?;
    let count = |f: fn(&Provenance) -> bool| meta.rules.iter().filter(|r| f(&r.origin)).count();
    ensure(count(|o| matches!(o, Provenance::PositiveConstraint(_))) == 1, "positive split missing")?;
    ensure(count(|o| matches!(o, Provenance::NegativeConstraint(_))) == 1, "negative split missing")?;
    let neg = meta.rules.iter().find(|r| matches!(r.origin, Provenance::NegativeConstraint(_))).unwrap();
    ensure(matches!(&neg.rule.head, Head::Atom(a) if a.predicate == "negsat"), "negative split does not derive negsat")?;
    let closing = meta.rules.iter().find(|r| r.origin == Provenance::Closing).ok_or("no closing rule")?;
    let closing_ok = closing.rule.is_constraint()
        && closing.rule.body.iter().any(|l| matches!(l, Literal::Atom(a) if a.atom.args().len() == 1) && l.to_string().starts_with("not negsat"));
    ensure(closing_ok, format!("closing rule is `{}`", closing.rule))?;
    let negated_bridge = meta
        .rules
        .iter()
        .any(|r| matches!(r.origin, Provenance::Bridge(_)) && r.rule.body.iter().any(|l| l.to_string().starts_with("not ")));
    ensure(negated_bridge, "no negated bridge for ?not")?;
    Ok("3 blocks, 3 bridged families, +/- constraint split, closing rule".into())
}

#[test]
fn acceptance() {
    let solver = solver();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let run = |c: Check| match c {
        Ok(m) => Outcome::Pass(m),
        Err(m) => Outcome::Fail(m),
    };
    results.push((1, "Hamiltonian uniqueness", run(hamiltonian_uniqueness())));
    results.push((2, "meta-program equals naive enumeration", run(theorem_one())));
    results.push((
        3,
        "backend agreement",
        match &solver {
            Some(cfg) => run(backend_agreement(cfg.clone())),
            None => Outcome::Skip("no external solver installed".into()),
        },
    ));
    results.push((4, "preference semantics", run(preference_semantics())));
    results.push((5, "default-preference convergence", run(latin_convergence())));
    results.push((6, "model counts", run(model_counts(solver.clone()))));
    results.push((7, "aggregates", run(aggregates())));
    results.push((8, "rewriting shape", run(rewriting_shape())));
    let substitutes_ok = results.iter().filter(|(n, ..)| (2..=5).contains(n)).all(|(_, _, o)| !matches!(o, Outcome::Fail(_)));
    results.push((
        9,
        "paper-scale averages substituted",
        if substitutes_ok {
            Outcome::Pass("21-problem averages and timings not reproduced; criteria 2-5 stand in".into())
        } else {
            Outcome::Fail("a substitute criterion failed".into())
        },
    ));

    let mut failed = 0;
    for (n, name, o) in &results {
        match o {
            Outcome::Pass(m) => println!("PASS {n} {name}: {m}"),
            Outcome::Skip(m) => println!("SKIP {n} {name}: {m}"),
            Outcome::Fail(m) => {
                failed += 1;
                println!("FAIL {n} {name}: {m}");
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
