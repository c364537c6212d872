//! Static checks on a parsed sketch. Violations are reported as data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::ast::*;
use super::program::*;
use super::vars::{enumerate_sketch_vars, is_reserved_sketch_name, targets};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    UnsafeVariable,
    NonGroundExample,
    FactExampleOverlap,
    CandidateArity,
    ReservedName,
    Unsupported,
    InvalidPreference,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::UnsafeVariable => "unsafe variable",
            ViolationKind::NonGroundExample => "non-ground example atom",
            ViolationKind::FactExampleOverlap => "predicate shared between facts and examples",
            ViolationKind::CandidateArity => "candidate arity mismatch",
            ViolationKind::ReservedName => "reserved name",
            ViolationKind::Unsupported => "unsupported construct",
            ViolationKind::InvalidPreference => "invalid preference",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// 1-based source line (0 if unknown).
    pub line: usize,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}: {}", self.line, self.kind, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, line: usize, kind: ViolationKind, message: String) {
        self.violations.push(Violation { line, kind, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate(program: &SketchProgram) -> ValidationReport {
    let mut report = ValidationReport::default();

    for rule in &program.rules {
        for var in unsafe_variables(rule) {
            report.push(
                rule.line,
                ViolationKind::UnsafeVariable,
                format!("variable {var} is not bound by a positive atom in `{rule}`"),
            );
        }
        for lit in &rule.body {
            if let Literal::Agg(a) = lit {
                for inner in &a.condition {
                    if let Some(what) = unsupported_in_aggregate(inner) {
                        report.push(rule.line, ViolationKind::Unsupported, format!("{what} inside an aggregate condition"));
                    }
                }
            }
        }
    }

    let mut fact_preds = BTreeSet::new();
    for fact in &program.facts {
        fact_preds.insert(fact.predicate.as_str());
    }
    let mut overlap_reported = BTreeSet::new();
    for (_, _, example) in program.examples.indexed() {
        for atom in &example.atoms {
            if !atom.is_ground() {
                report.push(example.line, ViolationKind::NonGroundExample, format!("`{atom}` contains variables"));
            }
            if fact_preds.contains(atom.predicate.as_str()) && overlap_reported.insert(atom.predicate.clone()) {
                report.push(
                    example.line,
                    ViolationKind::FactExampleOverlap,
                    format!("predicate {} occurs both in [FACTS] and in an example", atom.predicate),
                );
            }
        }
    }

    let arities = predicate_arities(program);
    for decl in &program.declarations {
        if is_reserved_sketch_name(&decl.name) {
            report.push(decl.line, ViolationKind::ReservedName, format!("?{} clashes with generated operator names", decl.name));
        }
        for cand in &decl.candidates {
            if let Some(found) = arities.get(cand.as_str()) {
                if !found.contains(&decl.arity) {
                    report.push(
                        decl.line,
                        ViolationKind::CandidateArity,
                        format!("candidate {cand} of ?{} is used with arity {:?}, not {}", decl.name, found, decl.arity),
                    );
                }
            }
        }
    }

    let vars = enumerate_sketch_vars(program);
    for entry in &program.preferences {
        let matching: Vec<&SketchVar> = vars.iter().filter(|v| targets(entry, v)).collect();
        if matching.is_empty() {
            report.push(entry.line, ViolationKind::InvalidPreference, format!("{} names no sketched variable", entry.target));
            continue;
        }
        for (name, _) in &entry.values {
            if !matching.iter().all(|v| v.domain.iter().any(|c| c.matches_name(name))) {
                report.push(
                    entry.line,
                    ViolationKind::InvalidPreference,
                    format!("{name} is not a candidate of {}", entry.target),
                );
            }
        }
    }
    report
}

fn unsupported_in_aggregate(lit: &Literal) -> Option<&'static str> {
    match lit {
        Literal::Agg(_) => Some("an aggregate"),
        Literal::Atom(a) if matches!(a.sign, Sign::Sketched(_)) => Some("a sketched negation"),
        Literal::Atom(a) if matches!(a.atom, AtomRef::Sketched { .. }) => Some("a sketched atom"),
        Literal::Cmp(c) if matches!(c.op, CmpRef::Sketched(_)) => Some("a sketched comparison"),
        Literal::Cmp(c) if has_sketched_arith(&c.lhs) || has_sketched_arith(&c.rhs) => Some("sketched arithmetic"),
        _ => None,
    }
}

fn has_sketched_arith(t: &Term) -> bool {
    match t {
        Term::Arith(l, op, r) => matches!(op, ArithRef::Sketched(_)) || has_sketched_arith(l) || has_sketched_arith(r),
        _ => false,
    }
}

fn predicate_arities(program: &SketchProgram) -> BTreeMap<&str, BTreeSet<usize>> {
    fn lit<'a>(l: &'a Literal, out: &mut BTreeMap<&'a str, BTreeSet<usize>>) {
        match l {
            Literal::Atom(AtomLiteral { atom: AtomRef::Plain(a), .. }) => {
                out.entry(a.predicate.as_str()).or_default().insert(a.args.len());
            }
            Literal::Agg(a) => a.condition.iter().for_each(|c| lit(c, out)),
            _ => {}
        }
    }
    let mut out: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for rule in &program.rules {
        if let Head::Atom(a) = &rule.head {
            out.entry(a.predicate.as_str()).or_default().insert(a.args.len());
        }
        rule.body.iter().for_each(|l| lit(l, &mut out));
    }
    let examples = program.examples.positives.iter().chain(&program.examples.negatives).flat_map(|e| &e.atoms);
    for a in program.facts.iter().chain(examples) {
        out.entry(a.predicate.as_str()).or_default().insert(a.args.len());
    }
    out
}

fn positive_atom_vars<'a>(lits: &'a [Literal], out: &mut BTreeSet<&'a str>) {
    for l in lits {
        if let Literal::Atom(AtomLiteral { sign: Sign::Pos, atom }) = l {
            atom.args().iter().for_each(|t| t.collect_vars(out));
        }
    }
}

/// Variables bound by a body: positive atoms, aggregate results, and `V = expr`
/// assignments whose right side is already bound.
fn bound_variables(body: &[Literal]) -> BTreeSet<&str> {
    let mut bound = BTreeSet::new();
    positive_atom_vars(body, &mut bound);
    for l in body {
        if let Literal::Agg(a) = l {
            bound.insert(a.result.as_str());
        }
    }
    loop {
        let before = bound.len();
        for l in body {
            if let Literal::Cmp(Comparison { lhs, op: CmpRef::Op(CmpOp::Eq), rhs }) = l {
                for (target, expr) in [(lhs, rhs), (rhs, lhs)] {
                    if let Term::Var(v) = target {
                        let mut vs = BTreeSet::new();
                        expr.collect_vars(&mut vs);
                        if vs.iter().all(|x| bound.contains(x)) {
                            bound.insert(v.as_str());
                        }
                    }
                }
            }
        }
        if bound.len() == before {
            return bound;
        }
    }
}

/// Variables of a rule that are not bound by a positive body atom, sorted and deduplicated.
pub fn unsafe_variables(rule: &Rule) -> Vec<String> {
    let bound = bound_variables(&rule.body);
    let mut bad = BTreeSet::new();
    let mut check = |vars: BTreeSet<&str>, bound: &BTreeSet<&str>| {
        for v in vars {
            if !bound.contains(v) {
                bad.insert(v.to_string());
            }
        }
    };
    match &rule.head {
        Head::Atom(a) => {
            let mut vs = BTreeSet::new();
            a.args.iter().for_each(|t| t.collect_vars(&mut vs));
            check(vs, &bound);
        }
        Head::Choice(c) => {
            for e in &c.elements {
                let mut local = bound.clone();
                local.extend(bound_variables(&e.condition));
                let mut vs = BTreeSet::new();
                e.atom.args.iter().for_each(|t| t.collect_vars(&mut vs));
                e.condition.iter().for_each(|l| l.collect_vars(&mut vs));
                check(vs, &local);
            }
        }
        Head::Constraint => {}
    }
    for l in &rule.body {
        match l {
            Literal::Atom(AtomLiteral { sign: Sign::Pos, .. }) => {}
            Literal::Atom(_) | Literal::Cmp(_) => {
                let mut vs = BTreeSet::new();
                l.collect_vars(&mut vs);
                check(vs, &bound);
            }
            Literal::Agg(a) => {
                let mut local = bound.clone();
                local.extend(bound_variables(&a.condition));
                let mut vs = BTreeSet::new();
                a.tuple.iter().for_each(|t| t.collect_vars(&mut vs));
                a.condition.iter().for_each(|c| c.collect_vars(&mut vs));
                check(vs, &local);
            }
        }
    }
    bad.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_sketch;

    fn kinds(text: &str) -> Vec<ViolationKind> {
        validate(&parse_sketch(text).unwrap()).violations.into_iter().map(|v| v.kind).collect()
    }

    #[test]
    fn unsafe_comparison_variable() {
        let p = parse_sketch("[SKETCH]\n:- p(X), X ?= Y.").unwrap();
        let report = validate(&p);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::UnsafeVariable);
        assert!(report.violations[0].message.contains("variable Y"));
        assert_eq!(report.violations[0].line, 2);
    }

    #[test]
    fn safe_forms() {
        assert!(kinds("[SKETCH]\nq(Z) :- p(X), Z = X+1, Z < 4.").is_empty());
        assert!(kinds("[SKETCH]\nn(N) :- N = #count{ P : p(P) }.").is_empty());
        assert!(kinds("[SKETCH]\nq(X) :- p(X), S = #sum{ V : w(X,V) }, S > 2.").is_empty());
        assert_eq!(kinds("[SKETCH]\nq(X) :- not p(X)."), vec![ViolationKind::UnsafeVariable]);
        assert_eq!(kinds("[SKETCH]\nq(Y) :- n(N), S = #count{ P : p(P), not r(Y) }."), vec![ViolationKind::UnsafeVariable]);
    }

    #[test]
    fn examples_and_facts() {
        assert_eq!(kinds("[EXAMPLES]\npositive: cycle(a,X)."), vec![ViolationKind::NonGroundExample]);
        assert_eq!(kinds("[FACTS]\nnode(a).\n[EXAMPLES]\npositive: node(b)."), vec![ViolationKind::FactExampleOverlap]);
    }

    #[test]
    fn declarations_and_preferences() {
        assert_eq!(
            kinds("[SKETCH]\n:- ?p(X).\n[SKETCHEDVAR]\n?p/1 : a, b\n[FACTS]\nb(1,2).\n"),
            vec![ViolationKind::CandidateArity]
        );
        assert_eq!(kinds("[SKETCH]\n:- ?cmp_1_0(X).\n[SKETCHEDVAR]\n?cmp_1_0/1 : a\n"), vec![ViolationKind::ReservedName]);
        assert_eq!(kinds("[SKETCH]\n:- a(X), ?p(X).\n[SKETCHEDVAR]\n?p/1 : a\n[PREFERENCES]\n?q : a=1\n"), vec![
            ViolationKind::InvalidPreference
        ]);
        assert_eq!(kinds("[SKETCH]\n:- a(X), ?p(X).\n[SKETCHEDVAR]\n?p/1 : a\n[PREFERENCES]\n?p : z=1\n"), vec![
            ViolationKind::InvalidPreference
        ]);
        assert_eq!(kinds("[SKETCH]\nn(N) :- N = #count{ P : p(P), P ?= 1 }."), vec![ViolationKind::Unsupported]);
    }
}
