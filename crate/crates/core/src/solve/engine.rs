//! Evaluation of the choice-dependent remainder of a ground program.
//!
//! Every atom gets a *level*: the deepest choice block it can depend on (0 = none).
//! Blocks are assigned depth first; after fixing block `b` only the rules of level
//! `b + 1` are evaluated, stratum by stratum, and the constraints of that level are
//! checked so that a violation prunes every completion of the current prefix.

use std::collections::BTreeSet;

use super::builtins;
use super::ground::{AtomId, GroundAggregate, GroundProgram, GroundRule};
use super::{Interpretation, SolveError};

type RuleId = usize;

#[derive(Debug, Default, Clone)]
struct Bucket {
    always: Vec<RuleId>,
    /// Indexed by the candidate chosen for the level's block.
    by_choice: Vec<Vec<RuleId>>,
}

impl Bucket {
    fn active(&self, choice: Option<usize>) -> impl Iterator<Item = RuleId> + '_ {
        let extra = choice.and_then(|c| self.by_choice.get(c)).map(Vec::as_slice).unwrap_or(&[]);
        self.always.iter().chain(extra).copied()
    }
}

#[derive(Debug, Default, Clone)]
struct Level {
    /// Rule buckets grouped by evaluation order of their heads, ascending.
    strata: Vec<Bucket>,
    constraints: Bucket,
}

struct Engine<'a> {
    g: &'a GroundProgram,
    levels: Vec<Level>,
    truth: Vec<bool>,
    trail: Vec<Vec<AtomId>>,
    choice: Vec<usize>,
}

impl<'a> Engine<'a> {
    fn new(g: &'a GroundProgram) -> Self {
        let nb = g.blocks.len();
        let n = g.atom_count();
        let mut level = vec![0usize; n];
        let mut slot: Vec<Option<(usize, usize)>> = vec![None; n];
        for (b, atoms) in g.blocks.iter().enumerate() {
            for (k, &a) in atoms.iter().enumerate() {
                level[a as usize] = b + 1;
                slot[a as usize] = Some((b, k));
            }
        }
        let rule_level = |r: &GroundRule, level: &[usize]| {
            let mut l = 0;
            for &a in r.pos.iter().chain(&r.neg) {
                l = l.max(level[a as usize]);
            }
            for agg in &r.aggs {
                for e in &agg.elements {
                    for &a in e.pos.iter().chain(&e.neg) {
                        l = l.max(level[a as usize]);
                    }
                }
            }
            l
        };
        let mut changed = true;
        while changed {
            changed = false;
            for r in &g.rules {
                if let Some(h) = r.head {
                    let l = rule_level(r, &level);
                    if l > level[h as usize] {
                        level[h as usize] = l;
                        changed = true;
                    }
                }
            }
        }

        let mut orders: Vec<usize> = g.rules.iter().filter_map(|r| r.head).map(|h| g.atom_order[h as usize]).collect();
        orders.sort_unstable();
        orders.dedup();
        let mut levels = vec![
            Level {
                strata: vec![Bucket::default(); orders.len()],
                constraints: Bucket::default()
            };
            nb + 1
        ];
        for (lv, block) in levels[1..].iter_mut().zip(&g.blocks) {
            let k = block.len();
            for s in &mut lv.strata {
                s.by_choice = vec![Vec::new(); k];
            }
            lv.constraints.by_choice = vec![Vec::new(); k];
        }
        for (ri, r) in g.rules.iter().enumerate() {
            let l = rule_level(r, &level);
            let direct = if l == 0 {
                None
            } else {
                r.pos.iter().find_map(|&a| slot[a as usize].filter(|(b, _)| *b == l - 1).map(|(_, k)| k))
            };
            let bucket = match r.head {
                Some(h) => {
                    let s = orders.binary_search(&g.atom_order[h as usize]).expect("order recorded");
                    &mut levels[l].strata[s]
                }
                None => &mut levels[l].constraints,
            };
            match direct {
                Some(k) => bucket.by_choice[k].push(ri),
                None => bucket.always.push(ri),
            }
        }
        Engine { g, levels, truth: vec![false; n], trail: vec![Vec::new(); nb + 1], choice: vec![0; nb] }
    }

    fn aggregate_holds(&self, agg: &GroundAggregate) -> Result<bool, SolveError> {
        let mut tuples: Vec<&[_]> = agg
            .elements
            .iter()
            .filter(|e| e.pos.iter().all(|&a| self.truth[a as usize]) && e.neg.iter().all(|&a| !self.truth[a as usize]))
            .map(|e| e.tuple.as_slice())
            .collect();
        tuples.sort();
        tuples.dedup();
        Ok(builtins::aggregate(agg.func, tuples)?.as_ref() == Some(&agg.value))
    }

    fn body_holds(&self, r: &GroundRule) -> Result<bool, SolveError> {
        if !r.pos.iter().all(|&a| self.truth[a as usize]) || r.neg.iter().any(|&a| self.truth[a as usize]) {
            return Ok(false);
        }
        for agg in &r.aggs {
            if !self.aggregate_holds(agg)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn set(&mut self, level: usize, a: AtomId) {
        self.truth[a as usize] = true;
        self.trail[level].push(a);
    }

    fn undo(&mut self, from: usize) {
        for l in from..self.trail.len() {
            for a in std::mem::take(&mut self.trail[l]) {
                self.truth[a as usize] = false;
            }
        }
    }

    /// Evaluate one level to fixpoint and return the violated constraints (all of them
    /// when `collect` is set, otherwise at most one).
    fn eval_level(&mut self, l: usize, collect: bool) -> Result<Vec<RuleId>, SolveError> {
        let choice = if l == 0 { None } else { Some(self.choice[l - 1]) };
        let levels = std::mem::take(&mut self.levels);
        let result = (|| {
            for stratum in &levels[l].strata {
                loop {
                    let mut changed = false;
                    for ri in stratum.active(choice) {
                        let r = &self.g.rules[ri];
                        let h = r.head.expect("stratum rules have heads");
                        if !self.truth[h as usize] && self.body_holds(r)? {
                            self.set(l, h);
                            changed = true;
                        }
                    }
                    if !changed {
                        break;
                    }
                }
            }
            let mut violated = Vec::new();
            for ri in levels[l].constraints.active(choice) {
                if self.body_holds(&self.g.rules[ri])? {
                    violated.push(ri);
                    if !collect {
                        break;
                    }
                }
            }
            Ok(violated)
        })();
        self.levels = levels;
        result
    }

    fn dfs(&mut self, b: usize, out: &mut Enumeration, limit: Option<usize>) -> Result<(), SolveError> {
        if limit.is_some_and(|n| out.assignments.len() >= n) {
            out.complete = false;
            return Ok(());
        }
        if b == self.g.blocks.len() {
            out.assignments.push(self.choice.clone());
            return Ok(());
        }
        for k in 0..self.g.blocks[b].len() {
            self.undo(b + 1);
            self.choice[b] = k;
            self.set(b + 1, self.g.blocks[b][k]);
            out.nodes += 1;
            if self.eval_level(b + 1, false)?.is_empty() {
                self.dfs(b + 1, out, limit)?;
            }
            if !out.complete {
                break;
            }
        }
        self.undo(b + 1);
        Ok(())
    }

    fn interpretation(&self) -> Interpretation {
        let mut m: Interpretation = self.g.certain_atoms().collect();
        for (i, &t) in self.truth.iter().enumerate() {
            if t {
                m.insert(self.g.atom(i as AtomId));
            }
        }
        m
    }
}

/// Choice assignments (one candidate index per block) that yield an answer set.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Enumeration {
    /// In lexicographic order of candidate indices.
    pub assignments: Vec<Vec<usize>>,
    /// Partial assignments visited by the search.
    pub nodes: u64,
    /// False when the limit stopped the search early.
    pub complete: bool,
}

/// Enumerate every assignment whose stratified model violates no constraint.
pub fn enumerate(g: &GroundProgram, limit: Option<usize>) -> Result<Enumeration, SolveError> {
    let mut out = Enumeration { complete: true, ..Default::default() };
    if !g.root_violations.is_empty() || g.blocks.iter().any(Vec::is_empty) {
        return Ok(out);
    }
    let mut e = Engine::new(g);
    if !e.eval_level(0, false)?.is_empty() {
        return Ok(out);
    }
    e.dfs(0, &mut out, limit)?;
    Ok(out)
}

/// The answer sets themselves, in the same order as [`enumerate`].
pub fn enumerate_answer_sets(g: &GroundProgram, limit: Option<usize>) -> Result<Vec<Interpretation>, SolveError> {
    let en = enumerate(g, limit)?;
    en.assignments
        .iter()
        .map(|a| {
            let r = stratified_model(g, a)?;
            debug_assert!(r.violations.is_empty());
            Ok(r.model)
        })
        .collect()
}

/// The unique model for the given assignment and the constraints it violates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelReport {
    pub model: Interpretation,
    pub violations: Vec<String>,
}

impl ModelReport {
    pub fn is_answer_set(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluate the program under `choices` (one candidate index per block).
pub fn stratified_model(g: &GroundProgram, choices: &[usize]) -> Result<ModelReport, SolveError> {
    if choices.len() != g.blocks.len() || choices.iter().zip(&g.blocks).any(|(&c, b)| c >= b.len()) {
        return Err(SolveError::BackendLimitation(format!(
            "assignment {choices:?} does not pick one atom from each of the {} blocks",
            g.blocks.len()
        )));
    }
    let mut e = Engine::new(g);
    let mut violations: Vec<String> = g.root_violations.clone();
    let mut seen = BTreeSet::new();
    for l in 0..=g.blocks.len() {
        if l > 0 {
            e.choice[l - 1] = choices[l - 1];
            e.set(l, g.blocks[l - 1][choices[l - 1]]);
        }
        for ri in e.eval_level(l, true)? {
            if seen.insert(ri) {
                violations.push(g.show_rule(&g.rules[ri]));
            }
        }
    }
    Ok(ModelReport { model: e.interpretation(), violations })
}

/// Number of answer sets of a program with exactly-one choices.
pub fn count_answer_sets(g: &GroundProgram) -> Result<usize, SolveError> {
    Ok(enumerate(g, None)?.assignments.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;
    use crate::solve::{ground, GroundAtom, Value};

    fn gp(text: &str) -> GroundProgram {
        ground(&parse_program(text).unwrap()).unwrap()
    }

    #[test]
    fn negation_as_failure() {
        let g = gp("p :- not q.");
        let r = stratified_model(&g, &[]).unwrap();
        assert!(r.model.contains(&GroundAtom::new("p", vec![])));
        assert_eq!(enumerate(&g, None).unwrap().assignments, vec![Vec::<usize>::new()]);
    }

    #[test]
    fn small_queens_counts() {
        let expand = |n: usize| {
            let mut s = String::new();
            for i in 1..=n {
                s += &format!("row({i}). col({i}). ");
            }
            s + "1 { q(R,C) : col(C) } 1 :- row(R).
                 :- q(R1,C), q(R2,C), R1 < R2.
                 :- q(R1,C1), q(R2,C2), R1 < R2, |R1-R2| = |C1-C2|."
        };
        let n = |k| count_answer_sets(&gp(&expand(k))).unwrap();
        assert_eq!(n(4), 2);
        assert_eq!(n(5), 10);
        assert_eq!(n(6), 4);
    }

    #[test]
    fn unsatisfiable_closing_rule() {
        let g = gp("negative(1). :- negative(E), not negsat(E). 1 { d(a); d(b) } 1.");
        assert!(enumerate(&g, None).unwrap().assignments.is_empty());
        let r = stratified_model(&g, &[0]).unwrap();
        assert_eq!(r.violations.len(), 1);
    }

    #[test]
    fn choice_dependent_aggregate() {
        let g = gp("item(1). item(2). item(3). 1 { w(X,a); w(X,b) } 1 :- item(X).
                    s(S) :- S = #sum{ X : w(X,a) }. :- s(S), S != 3.");
        // subsets of {1,2,3} summing to 3: {3}, {1,2}
        assert_eq!(count_answer_sets(&g).unwrap(), 2);
        let r = stratified_model(&g, &[0, 0, 1]).unwrap();
        assert!(r.is_answer_set());
        assert!(r.model.contains(&GroundAtom::new("s", vec![Value::Int(3)])));
    }

    #[test]
    fn limit_stops_early() {
        let g = gp("1 { a; b } 1. 1 { c; d } 1.");
        let e = enumerate(&g, Some(3)).unwrap();
        assert_eq!(e.assignments, vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert!(!e.complete);
        assert!(enumerate(&g, None).unwrap().complete);
    }
}
