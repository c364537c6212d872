use std::collections::BTreeSet;

use proptest::prelude::*;

use skasp_core::dependency::{check_stratified, dependency_graph, example_dependent_predicates, StratificationResult};
use skasp_core::lang::{parse_sketch, PredSig};

const PREDS: [&str; 5] = ["a", "b", "c", "d", "e"];

/// `(head, [(body predicate, negated)])`; head `None` is a constraint.
type RawRule = (Option<usize>, Vec<(usize, bool)>);

fn raw_program() -> impl Strategy<Value = (Vec<RawRule>, BTreeSet<usize>)> {
    let rule = (prop::option::weighted(0.8, 0..PREDS.len()), prop::collection::vec((0..PREDS.len(), prop::bool::weighted(0.3)), 1..4));
    (prop::collection::vec(rule, 1..8), prop::collection::btree_set(0..PREDS.len(), 0..2))
}

fn render(rules: &[RawRule], examples: &BTreeSet<usize>) -> String {
    let mut s = String::from("[SKETCH]\n");
    for (head, body) in rules {
        let lits: Vec<String> = body.iter().map(|&(p, neg)| format!("{}{}(X)", if neg { "not " } else { "" }, PREDS[p])).collect();
        match head {
            Some(h) => s.push_str(&format!("{}(X) :- base(X), {}.\n", PREDS[*h], lits.join(", "))),
            None => s.push_str(&format!(":- base(X), {}.\n", lits.join(", "))),
        }
    }
    s.push_str("[FACTS]\nbase(1).\n");
    if !examples.is_empty() {
        let atoms: Vec<String> = examples.iter().map(|&p| format!("{}(1).", PREDS[p])).collect();
        s.push_str(&format!("[EXAMPLES]\npositive: {}\n", atoms.join(" ")));
    }
    s
}

/// Least fixpoint: example predicates, then heads of rules mentioning a member.
fn sp_oracle(rules: &[RawRule], examples: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut sp = examples.clone();
    loop {
        let before = sp.len();
        for (head, body) in rules {
            if let Some(h) = head {
                if body.iter().any(|(p, _)| sp.contains(p)) {
                    sp.insert(*h);
                }
            }
        }
        if sp.len() == before {
            return sp;
        }
    }
}

/// Stratified iff no negative body occurrence `h :- not q` has `q` reaching `h`.
fn stratified_oracle(rules: &[RawRule]) -> bool {
    let n = PREDS.len();
    let mut reach = vec![vec![false; n]; n];
    for (head, body) in rules {
        if let Some(h) = head {
            for &(p, _) in body {
                reach[*h][p] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    rules.iter().all(|(head, body)| match head {
        Some(h) => body.iter().all(|&(q, neg)| !neg || !(q == *h || reach[q][*h])),
        None => true,
    })
}

proptest! {
    #[test]
    fn sp_is_the_least_fixpoint((rules, examples) in raw_program()) {
        let p = parse_sketch(&render(&rules, &examples)).unwrap();
        let got: BTreeSet<PredSig> = example_dependent_predicates(&p);
        let want: BTreeSet<PredSig> = sp_oracle(&rules, &examples).into_iter().map(|i| PredSig::new(PREDS[i], 1)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn stratification_matches_reachability((rules, examples) in raw_program()) {
        let p = parse_sketch(&render(&rules, &examples)).unwrap();
        let result = check_stratified(&dependency_graph(&p));
        prop_assert_eq!(result.is_stratified(), stratified_oracle(&rules));
        if let StratificationResult::NegativeCycle(cycle) = result {
            prop_assert!(cycle.len() >= 2);
            prop_assert_eq!(cycle.first(), cycle.last());
        }
    }

    #[test]
    fn graphs_are_deterministic((rules, examples) in raw_program()) {
        let text = render(&rules, &examples);
        let a = dependency_graph(&parse_sketch(&text).unwrap());
        let b = dependency_graph(&parse_sketch(&text).unwrap());
        prop_assert_eq!(a, b);
    }
}

#[test]
fn constraints_never_close_a_cycle() {
    let p = parse_sketch("[SKETCH]\na(X) :- b(X).\n:- a(X), not b(X).\n").unwrap();
    assert!(check_stratified(&dependency_graph(&p)).is_stratified());
}

#[test]
fn sketched_domains_propagate_membership() {
    let p = parse_sketch(
        "[SKETCHEDVAR]\n?s/1 : node, reached\n[SKETCH]\nreached(Y) :- cycle(a,Y).\nok(X) :- ?s(X).\n[FACTS]\nnode(a).\n[EXAMPLES]\npositive: cycle(a,a).\n",
    )
    .unwrap();
    let sp = example_dependent_predicates(&p);
    assert!(sp.contains(&PredSig::new("ok", 1)));
    assert!(!sp.contains(&PredSig::new("node", 1)));
}
