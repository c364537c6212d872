use std::collections::BTreeSet;

use skasp_core::bench::{
    convergence_experiment, count_models, domain_size, precision, precision_eval, problem, problem_names, write_output, BenchError,
};
use skasp_core::synth::{apply_substitution, naive_synthesize, Backend, Substitution, DEFAULT_NAIVE_CAP};

const INTERNAL: Backend = Backend::Internal;

/// One queen per row on an n x n board; returns (all placements, non-attacking ones).
fn queens_placements(n: usize) -> (usize, usize) {
    let mut good = 0;
    let total = n.pow(n as u32);
    for mut k in 0..total {
        let mut cols = Vec::with_capacity(n);
        for _ in 0..n {
            cols.push((k % n) as i64);
            k /= n;
        }
        let ok = (0..n).all(|i| (i + 1..n).all(|j| cols[i] != cols[j] && (cols[i] - cols[j]).abs() != (j - i) as i64));
        good += ok as usize;
    }
    (total, good)
}

#[test]
fn hamiltonian_reaches_one_at_two_examples() {
    let p = problem("hamiltonian").unwrap();
    let rec = convergence_experiment(&p, 2, 1, 11, &INTERNAL).unwrap();
    // Oracle: the naive baseline on the same nested prefixes.
    let order = skasp_core::bench::trial_order(p.pool_size(), 11, 0);
    for k in 0..=2 {
        let naive = naive_synthesize(&p.with_examples(&order[..k]), DEFAULT_NAIVE_CAP).unwrap();
        assert_eq!(rec.none[k], naive.len() as f64, "k = {k}");
    }
    assert_eq!(rec.none[2], 1.0);
}

#[test]
fn no_examples_admit_every_substitution() {
    for name in ["hamiltonian", "latin_square", "sudoku", "bw_queens", "equal_subset_sum", "celebrities"] {
        let p = problem(name).unwrap();
        let rec = convergence_experiment(&p, 0, 1, 0, &INTERNAL).unwrap();
        assert_eq!(rec.none[0], domain_size(&p) as f64, "{name}");
    }
}

#[test]
fn convergence_invariants_hold_per_trial() {
    for name in ["latin_square", "sudoku", "graph_coloring", "celebrities"] {
        let p = problem(name).unwrap();
        let order = skasp_core::bench::trial_order(p.pool_size(), 3, 0);
        let counts = skasp_core::bench::convergence_trial(&p, &order, p.pool_size(), &INTERNAL).unwrap();
        for w in counts.windows(2) {
            assert!(w[1].0 <= w[0].0, "{name}: consistent count grew");
        }
        for &(all, preferred, intended) in &counts {
            assert!(preferred <= all && intended, "{name}");
        }
    }
}

#[test]
fn csv_is_byte_identical_for_a_seed() {
    let p = problem("latin_square").unwrap();
    let a = convergence_experiment(&p, 5, 6, 7, &INTERNAL).unwrap().to_csv();
    let b = convergence_experiment(&p, 5, 6, 7, &INTERNAL).unwrap().to_csv();
    assert_eq!(a, b);
    assert!(a.starts_with("k,prefs,mean_solutions\n0,none,2401.000\n0,default,16.000\n"));
    assert_eq!(a.lines().count(), 1 + 2 * 6);
}

#[test]
fn kmax_beyond_pool_is_rejected() {
    let p = problem("hamiltonian").unwrap();
    assert!(matches!(convergence_experiment(&p, 3, 1, 0, &INTERNAL), Err(BenchError::PoolTooSmall { kmax: 3, pool: 2 })));
}

#[test]
fn precision_of_four_queens_programs() {
    let p = problem("nqueens").unwrap();
    let (placements, solutions) = queens_placements(4);
    assert_eq!((placements, solutions), (256, 2));

    let truth = p.truth_program().unwrap();
    assert_eq!(precision_eval(&truth, &p, "default", &INTERNAL).unwrap(), 1.0);
    assert_eq!(count_models(&p.over_generator("default", &truth).unwrap(), &INTERNAL).unwrap(), solutions);

    // No constraints at all: every placement is accepted.
    let vacuous = precision_eval("", &p, "default", &INTERNAL).unwrap();
    assert_eq!(vacuous, solutions as f64 / placements as f64);

    // Every comparison resolved to the always-true candidate: the row constraint then fires on
    // every queen paired with itself, so no placement survives and precision is 0.
    let vars = p.vars();
    let all_top = Substitution {
        choices: vars.iter().map(|v| v.domain.iter().position(|c| c.display_name() == "top").unwrap_or(0)).collect(),
    };
    let learned = apply_substitution(&p.program, &vars, &all_top).unwrap();
    assert_eq!(count_models(&p.over_generator("default", &learned).unwrap(), &INTERNAL).unwrap(), 0);
    assert_eq!(precision_eval(&learned, &p, "default", &INTERNAL).unwrap(), 0.0);
}

#[test]
fn truth_has_full_precision_everywhere() {
    for name in problem_names() {
        let p = problem(name).unwrap();
        if !p.generators.contains_key("default") {
            continue;
        }
        let truth = p.truth_program().unwrap();
        assert_eq!(precision_eval(&truth, &p, "default", &INTERNAL).unwrap(), 1.0, "{name}");
    }
}

#[test]
fn precision_edge_cases() {
    let empty: BTreeSet<u8> = BTreeSet::new();
    let some: BTreeSet<u8> = [1, 2].into();
    assert_eq!(precision(&empty, &empty), 1.0);
    assert_eq!(precision(&empty, &some), 0.0);
    assert_eq!(precision(&some, &[2, 3].into()), 0.5);
}

#[test]
fn eight_queens_has_ninety_two_models() {
    let p = problem("nqueens").unwrap();
    let text = p.over_generator("8x8", &p.truth_program().unwrap()).unwrap();
    assert_eq!(count_models(&text, &INTERNAL).unwrap(), 92);
}

#[test]
fn generalization_to_four_by_four() {
    let p = problem("latin_square").unwrap();
    let rows = skasp_core::bench::generalization(&p, "4x4", &INTERNAL).unwrap();
    assert!(!rows.is_empty());
    for r in &rows {
        assert_eq!((r.models, r.expected), (576, 576));
    }
}

#[test]
fn outputs_need_force_to_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested");
    write_output(&out, "a.csv", "x\n", false).unwrap();
    assert!(matches!(write_output(&out, "a.csv", "y\n", false), Err(BenchError::Exists(_))));
    write_output(&out, "a.csv", "y\n", true).unwrap();
    assert_eq!(std::fs::read_to_string(out.join("a.csv")).unwrap(), "y\n");
}
