use std::collections::BTreeSet;

use super::ast::*;
use super::program::*;

/// All decision points of a sketch in textual order of first occurrence; declared but
/// unused predicate variables follow in declaration order.
pub fn enumerate_sketch_vars(program: &SketchProgram) -> Vec<SketchVar> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for rule in &program.rules {
        for lit in &rule.body {
            visit_literal(program, lit, &mut out, &mut seen);
        }
    }
    for decl in &program.declarations {
        let id = format!("?{}", decl.name);
        if seen.insert(id.clone()) {
            out.push(predicate_var(decl));
        }
    }
    for var in &mut out {
        apply_preferences(var, &program.preferences);
    }
    out
}

/// Declared names that would clash with the names given to operator occurrences.
pub fn is_reserved_sketch_name(name: &str) -> bool {
    let Some((prefix, rest)) = name.split_once('_') else { return false };
    if !matches!(prefix, "cmp" | "arith" | "not" | "agg") {
        return false;
    }
    let mut parts = rest.split('_');
    let numeric = |p: Option<&str>| p.is_some_and(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()));
    numeric(parts.next()) && numeric(parts.next()) && parts.next().is_none()
}

fn predicate_var(decl: &PredicateDecl) -> SketchVar {
    let domain: Vec<Candidate> = decl.candidates.iter().map(|c| Candidate::Pred(c.clone())).collect();
    SketchVar {
        id: format!("?{}", decl.name),
        kind: SketchKind::Predicate,
        arity: Some(decl.arity),
        preference: vec![0; domain.len()],
        domain,
    }
}

fn operator_var(id: &str, kind: SketchKind) -> SketchVar {
    let domain = kind.operator_domain().unwrap_or_default();
    SketchVar { id: id.to_string(), kind, arity: None, preference: vec![0; domain.len()], domain }
}

fn push_operator(id: &str, kind: SketchKind, out: &mut Vec<SketchVar>, seen: &mut BTreeSet<String>) {
    if seen.insert(id.to_string()) {
        out.push(operator_var(id, kind));
    }
}

fn visit_literal(program: &SketchProgram, lit: &Literal, out: &mut Vec<SketchVar>, seen: &mut BTreeSet<String>) {
    match lit {
        Literal::Atom(a) => {
            if let Sign::Sketched(id) = &a.sign {
                push_operator(id, SketchKind::Negation, out, seen);
            }
            if let AtomRef::Sketched { var, .. } = &a.atom {
                if let Some(decl) = program.declaration(var.trim_start_matches('?')) {
                    if seen.insert(var.clone()) {
                        out.push(predicate_var(decl));
                    }
                }
            }
        }
        Literal::Cmp(c) => {
            visit_term(&c.lhs, out, seen);
            if let CmpRef::Sketched(id) = &c.op {
                push_operator(id, SketchKind::Comparison, out, seen);
            }
            visit_term(&c.rhs, out, seen);
        }
        Literal::Agg(a) => {
            if let AggRef::Sketched(id) = &a.func {
                push_operator(id, SketchKind::Aggregate, out, seen);
            }
            for l in &a.condition {
                visit_literal(program, l, out, seen);
            }
        }
    }
}

fn visit_term(t: &Term, out: &mut Vec<SketchVar>, seen: &mut BTreeSet<String>) {
    if let Term::Arith(l, op, r) = t {
        visit_term(l, out, seen);
        if let ArithRef::Sketched(id) = op {
            push_operator(id, SketchKind::Arithmetic, out, seen);
        }
        visit_term(r, out, seen);
    }
}

/// Bare operator targets (`?=`) apply to every occurrence; exact ids override them.
pub(crate) fn apply_preferences(var: &mut SketchVar, entries: &[PreferenceEntry]) {
    let bare = var.kind != SketchKind::Predicate;
    let generic = entries.iter().filter(|e| bare && e.target == var.kind.token());
    let specific = entries.iter().filter(|e| e.target == var.id);
    for entry in generic.chain(specific) {
        for (name, value) in &entry.values {
            if let Some(i) = var.domain.iter().position(|c| c.matches_name(name)) {
                var.preference[i] = *value;
            }
        }
    }
}

/// Whether a preference entry names this var (exactly or through its operator token).
pub(crate) fn targets(entry: &PreferenceEntry, var: &SketchVar) -> bool {
    entry.target == var.id || (var.kind != SketchKind::Predicate && entry.target == var.kind.token())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_sketch;

    #[test]
    fn reserved_names() {
        assert!(is_reserved_sketch_name("cmp_1_0"));
        assert!(is_reserved_sketch_name("not_12_3"));
        assert!(!is_reserved_sketch_name("cmp_a_0"));
        assert!(!is_reserved_sketch_name("p"));
        assert!(!is_reserved_sketch_name("agg_1"));
    }

    #[test]
    fn preferences_bare_then_specific() {
        let p = parse_sketch("[SKETCH]\n:- p(X), p(Y), X ?= Y, X ?= Y.\n[PREFERENCES]\n?= : = = 3\n?=@1.1 : < = 2\n").unwrap();
        let vars = enumerate_sketch_vars(&p);
        assert_eq!(vars[0].preference, vec![3, 0, 0, 0, 0, 0, 0]);
        assert_eq!(vars[1].preference, vec![3, 0, 2, 0, 0, 0, 0]);
    }
}
