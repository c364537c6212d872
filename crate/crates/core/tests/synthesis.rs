use std::collections::BTreeSet;

use proptest::prelude::*;

use skasp_core::bench::problem;
use skasp_core::lang::{load_sketch, parse_preferences};
use skasp_core::synth::{
    apply_substitution, dominates, naive_synthesize, pareto_filter, synthesize, Backend, PreferenceMode, PreferenceProfile,
    Substitution, SynthError, SynthOptions, DEFAULT_NAIVE_CAP,
};

fn vector() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-2i64..3, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn dominance_is_a_strict_order(a in vector(), b in vector(), c in vector()) {
        prop_assert!(!dominates(&a, &a));
        prop_assert!(!(dominates(&a, &b) && dominates(&b, &a)));
        if dominates(&a, &b) && dominates(&b, &c) {
            prop_assert!(dominates(&a, &c));
        }
    }

    #[test]
    fn pareto_filter_keeps_exactly_the_undominated(rows in prop::collection::btree_set(prop::collection::vec(0usize..3, 3), 0..20),
                                                  weights in prop::collection::vec(prop::collection::vec(-1i64..3, 3), 3)) {
        let solutions: Vec<Substitution> = rows.into_iter().map(|choices| Substitution { choices }).collect();
        let profile = PreferenceProfile { values: weights };
        let kept = pareto_filter(&solutions, &profile);
        let vec_of = |s: &Substitution| profile.vector(s);
        for s in &solutions {
            let dominated = solutions.iter().any(|t| dominates(&vec_of(t), &vec_of(s)));
            prop_assert_eq!(kept.contains(s), !dominated);
        }
        if !solutions.is_empty() {
            prop_assert!(!kept.is_empty());
        }
        prop_assert_eq!(pareto_filter(&kept, &profile), kept.clone());
    }
}

fn consistent_set(name: &str, subset: &[usize]) -> BTreeSet<Substitution> {
    let p = problem(name).unwrap();
    let sketch = p.with_examples(subset);
    synthesize(&sketch, &SynthOptions::default()).unwrap().all.into_iter().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn more_examples_never_add_solutions(name in prop::sample::select(vec!["hamiltonian", "latin_square", "celebrities", "equal_subset_sum"]),
                                         mask in prop::collection::vec(0u8..3, 12)) {
        let pool = problem(name).unwrap().pool_size();
        let small: Vec<usize> = (0..pool).filter(|&i| mask[i] == 2).collect();
        let large: Vec<usize> = (0..pool).filter(|&i| mask[i] >= 1).collect();
        prop_assert!(consistent_set(name, &large).is_subset(&consistent_set(name, &small)));
    }

    #[test]
    fn meta_equals_naive_on_example_subsets(name in prop::sample::select(vec!["hamiltonian", "latin_square", "bw_queens", "celebrities"]),
                                            mask in prop::collection::vec(prop::bool::ANY, 12)) {
        let p = problem(name).unwrap();
        let subset: Vec<usize> = (0..p.pool_size()).filter(|&i| mask[i]).collect();
        let sketch = p.with_examples(&subset);
        let meta = synthesize(&sketch, &SynthOptions::default()).unwrap().all;
        prop_assert_eq!(meta, naive_synthesize(&sketch, DEFAULT_NAIVE_CAP).unwrap());
    }
}

#[test]
fn intended_is_consistent_for_every_problem() {
    for name in skasp_core::bench::problem_names() {
        let p = problem(name).unwrap();
        let intended = p.intended_substitution().unwrap();
        let r = synthesize(&p.program, &SynthOptions { preferences: PreferenceMode::Default, ..Default::default() }).unwrap();
        assert!(r.all.contains(&intended), "{name}: intended not consistent");
        assert!(r.preferred.contains(&intended), "{name}: intended not preferred");
    }
}

#[test]
fn rule_order_does_not_change_the_completions() {
    for name in ["latin_square", "sudoku", "hamiltonian", "bw_queens"] {
        let p = problem(name).unwrap();
        let completions = |program: &skasp_core::lang::SketchProgram| -> BTreeSet<BTreeSet<String>> {
            let r = synthesize(program, &SynthOptions::default()).unwrap();
            r.all
                .iter()
                .map(|s| apply_substitution(program, &r.vars, s).unwrap().lines().map(String::from).collect())
                .collect()
        };
        let mut reversed = p.program.clone();
        reversed.rules.reverse();
        // Re-parse so the occurrence ids follow the new rule positions.
        let reversed = load_sketch(&reversed.to_string()).unwrap();
        assert_eq!(completions(&p.program), completions(&reversed), "{name}");
    }
}

#[test]
fn top_removes_the_comparison() {
    let p = load_sketch("[SKETCH]\n:- e(X,Y), X ?= Y.\n[EXAMPLES]\npositive: e(1,2).\n").unwrap();
    let r = synthesize(&p, &SynthOptions::default()).unwrap();
    let vars = &r.vars;
    let top = vars[0].domain.iter().position(|c| c.display_name() == "top").unwrap();
    let text = apply_substitution(&p, vars, &Substitution { choices: vec![top] }).unwrap();
    assert_eq!(text.trim(), ":- e(X,Y).");
    assert!(!r.all.iter().any(|s| s.choices == [top]));
}

#[test]
fn custom_preferences_start_from_zero() {
    let p = problem("latin_square").unwrap();
    let entries = parse_preferences("?= : <=1").unwrap();
    let r = synthesize(&p.program, &SynthOptions { preferences: PreferenceMode::Custom(entries), ..Default::default() }).unwrap();
    let profile = r.profile.as_ref().unwrap();
    for v in &profile.values {
        assert_eq!(v.iter().sum::<i64>(), 1);
    }
    let default = synthesize(&p.program, &SynthOptions { preferences: PreferenceMode::Default, ..Default::default() }).unwrap();
    assert_ne!(r.preferred, default.preferred);
}

#[test]
fn naive_refuses_large_products() {
    let p = problem("nqueens").unwrap();
    let err = naive_synthesize(&p.program, 1000).unwrap_err();
    assert!(matches!(err, SynthError::TooManySubstitutions { count: 60025, cap: 1000 }), "{err:?}");
}

#[test]
fn missing_solver_is_a_backend_error() {
    let p = problem("hamiltonian").unwrap();
    let cfg = skasp_core::solve::SolverConfig { command: vec!["/nonexistent/clingo".into()], timeout: None };
    let err = synthesize(&p.program, &SynthOptions { backend: Backend::External(cfg), ..Default::default() }).unwrap_err();
    assert!(matches!(err, SynthError::Solve(skasp_core::solve::SolveError::SolverNotFound(..))), "{err:?}");
}
