//! Rewriting of a sketch into a single standard ASP meta-program.
//!
//! Four passes share one walk over the rules: example indexing (an example
//! identifier `E` is added to every predicate that depends on an example), decision
//! generation (one exactly-one choice per sketched variable), reification (each
//! sketched construct becomes a reified atom gated by a decision atom, plus bridging
//! rules per candidate) and constraint splitting (positive examples must satisfy every
//! constraint, negative examples must violate at least one).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::dependency::{check_stratified, dependency_graph, example_dependent_nodes, Node, StratificationResult};
use crate::lang::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("the sketch is not stratified: {}", format_cycle(.0))]
    NotStratified(Vec<Node>),
    #[error("predicate {0} clashes with a generated name")]
    NameCollision(String),
    #[error("line {line}: cannot bind the operands of {id} before it is evaluated")]
    UnsupportedGuard { line: usize, id: String },
}

fn format_cycle(cycle: &[Node]) -> String {
    cycle.iter().map(Node::to_string).collect::<Vec<_>>().join(" -> ")
}

/// Where a meta rule came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    /// Labels and atoms of the example with this global index.
    Example(usize),
    Fact,
    /// Candidate facts and the choice rule of a sketched variable.
    Decision(String),
    /// Rule linking a reified family to one of its candidates.
    Bridge(String),
    /// Projection of a host rule used to keep a bridging rule safe.
    Guard(String),
    /// Non-constraint rule with this 0-based index in `[SKETCH]`.
    Rule(usize),
    PositiveConstraint(usize),
    NegativeConstraint(usize),
    Closing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaRule {
    pub rule: Rule,
    pub origin: Provenance,
}

/// Generated predicate names for one sketched variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Naming {
    pub decision: String,
    pub reified: String,
    pub choice: String,
    pub guard: String,
}

impl Naming {
    pub fn for_var(id: &str) -> Naming {
        let base = base_name(id);
        Naming {
            decision: format!("decision_{base}"),
            reified: format!("reified_{base}"),
            choice: format!("reified_{base}_choice"),
            guard: format!("guard_{base}"),
        }
    }
}

/// `?p` -> `p`, `?=@3.1` -> `cmp_3_1`, `?not@2.0` -> `not_2_0`.
pub fn base_name(id: &str) -> String {
    let Some((token, pos)) = id.split_once('@') else { return id.trim_start_matches('?').to_string() };
    let kind = match token {
        "?=" => "cmp",
        "?+" => "arith",
        "?not" => "not",
        "?#" => "agg",
        other => other.trim_start_matches('?'),
    };
    format!("{kind}_{}", pos.replace('.', "_"))
}

/// One exactly-one choice over the candidates of a sketched variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionBlock {
    pub var: String,
    pub decision: String,
    pub choice: String,
    /// Candidate constants, aligned with the variable's domain.
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaProgram {
    pub vars: Vec<SketchVar>,
    pub blocks: Vec<DecisionBlock>,
    pub rules: Vec<MetaRule>,
    /// Predicates that carry an example identifier.
    pub indexed: BTreeSet<PredSig>,
}

impl MetaProgram {
    pub fn program(&self) -> Vec<Rule> {
        self.rules.iter().map(|r| r.rule.clone()).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            out.push_str(&r.rule.to_string());
            out.push('\n');
        }
        out
    }

    /// Decision atoms of a model, translated to per-variable domain indices.
    /// `None` if some variable has no decision atom.
    pub fn decode(&self, atoms: &[Atom]) -> Option<Vec<usize>> {
        let mut by_name: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, b) in self.blocks.iter().enumerate() {
            by_name.insert(b.decision.as_str(), i);
        }
        let mut out = vec![None; self.blocks.len()];
        for a in atoms {
            let Some(&i) = by_name.get(a.predicate.as_str()) else { continue };
            if let [Term::Sym(c)] = a.args.as_slice() {
                out[i] = self.blocks[i].candidates.iter().position(|x| x == c);
            }
        }
        out.into_iter().collect()
    }
}

impl fmt::Display for MetaProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

const RESERVED: [&str; 4] = ["negsat", "examples", "positive", "negative"];
const RESERVED_PREFIXES: [&str; 3] = ["reified_", "decision_", "guard_"];

fn user_predicates(program: &SketchProgram) -> BTreeSet<String> {
    fn lits(ls: &[Literal], out: &mut BTreeSet<String>) {
        for l in ls {
            match l {
                Literal::Atom(AtomLiteral { atom: AtomRef::Plain(a), .. }) => {
                    out.insert(a.predicate.clone());
                }
                Literal::Agg(a) => lits(&a.condition, out),
                _ => {}
            }
        }
    }
    let mut out = BTreeSet::new();
    for r in &program.rules {
        if let Head::Atom(a) = &r.head {
            out.insert(a.predicate.clone());
        }
        lits(&r.body, &mut out);
    }
    for d in &program.declarations {
        out.extend(d.candidates.iter().cloned());
    }
    for a in program.facts.iter().chain(program.examples.positives.iter().chain(&program.examples.negatives).flat_map(|e| &e.atoms)) {
        out.insert(a.predicate.clone());
    }
    out
}

/// Per-variable decision generation: candidate facts plus `1 { decision_s(c) ; ... } 1.`
pub fn meta_d(vars: &[SketchVar]) -> (Vec<MetaRule>, Vec<DecisionBlock>) {
    let mut rules = Vec::new();
    let mut blocks = Vec::new();
    for var in vars {
        let naming = Naming::for_var(&var.id);
        let candidates: Vec<String> = var.domain.iter().map(Candidate::constant).collect();
        let origin = Provenance::Decision(var.id.clone());
        for c in &candidates {
            rules.push(MetaRule { rule: Rule::fact(Atom::new(naming.choice.clone(), vec![Term::sym(c)])), origin: origin.clone() });
        }
        let elements = candidates
            .iter()
            .map(|c| ChoiceElement { atom: Atom::new(naming.decision.clone(), vec![Term::sym(c)]), condition: Vec::new() })
            .collect();
        let choice = Choice { lower: Some(1), upper: Some(1), elements };
        rules.push(MetaRule { rule: Rule::new(Head::Choice(choice), Vec::new()), origin });
        blocks.push(DecisionBlock { var: var.id.clone(), decision: naming.decision, choice: naming.choice, candidates });
    }
    (rules, blocks)
}

pub fn rewrite(program: &SketchProgram) -> Result<MetaProgram, RewriteError> {
    if let StratificationResult::NegativeCycle(c) = check_stratified(&dependency_graph(program)) {
        return Err(RewriteError::NotStratified(c));
    }
    for p in user_predicates(program) {
        if RESERVED.contains(&p.as_str()) || RESERVED_PREFIXES.iter().any(|x| p.starts_with(x)) {
            return Err(RewriteError::NameCollision(p));
        }
    }

    let vars = enumerate_sketch_vars(program);
    let sp = example_dependent_nodes(program);
    let mut rules = Vec::new();

    // Examples, indexed by position: positives first.
    for (i, positive, example) in program.examples.indexed() {
        let origin = Provenance::Example(i);
        let label = if positive { "positive" } else { "negative" };
        rules.push(MetaRule { rule: Rule::fact(Atom::new(label, vec![Term::Int(i as i64)])), origin: origin.clone() });
        rules.push(MetaRule { rule: Rule::fact(Atom::new("examples", vec![Term::Int(i as i64)])), origin: origin.clone() });
        for a in &example.atoms {
            let mut args = vec![Term::Int(i as i64)];
            args.extend(a.args.iter().cloned());
            rules.push(MetaRule { rule: Rule::fact(Atom::new(a.predicate.clone(), args)), origin: origin.clone() });
        }
    }
    for a in &program.facts {
        let rule = if sp.contains(&Node::Pred(a.sig())) {
            let mut args = vec![Term::var("E")];
            args.extend(a.args.iter().cloned());
            Rule::new(Head::Atom(Atom::new(a.predicate.clone(), args)), vec![Literal::pos(examples_atom("E"))])
        } else {
            Rule::fact(a.clone())
        };
        rules.push(MetaRule { rule, origin: Provenance::Fact });
    }

    let (decision_rules, blocks) = meta_d(&vars);
    rules.extend(decision_rules);

    for var in vars.iter().filter(|v| v.kind == SketchKind::Predicate) {
        rules.extend(predicate_bridges(var, &sp));
    }

    let domains: BTreeMap<&str, &SketchVar> = vars.iter().map(|v| (v.id.as_str(), v)).collect();
    for (index, rule) in program.rules.iter().enumerate() {
        let mut ctx = RuleContext::new(rule, &sp, &domains);
        ctx.rewrite_body(rule)?;
        let mut out_rules = std::mem::take(&mut ctx.extra);
        out_rules.extend(ctx.guards(rule.line)?);
        let body = ctx.final_body();
        match &rule.head {
            Head::Constraint => {
                let e = Term::var(ctx.e.clone());
                let mut pos = body.clone();
                pos.push(Literal::pos(Atom::new("positive", vec![e.clone()])));
                let mut neg = body;
                neg.push(Literal::pos(Atom::new("negative", vec![e.clone()])));
                out_rules.push(MetaRule { rule: Rule::new(Head::Constraint, pos), origin: Provenance::PositiveConstraint(index) });
                out_rules.push(MetaRule {
                    rule: Rule::new(Head::Atom(Atom::new("negsat", vec![e])), neg),
                    origin: Provenance::NegativeConstraint(index),
                });
            }
            Head::Atom(_) => {
                let head = ctx.head.take().expect("atom head");
                out_rules.push(MetaRule { rule: Rule::new(Head::Atom(head), body), origin: Provenance::Rule(index) });
            }
            Head::Choice(_) => unreachable!("choice rules are rejected by the sketch parser"),
        }
        rules.extend(out_rules);
    }
    rules.push(MetaRule {
        rule: Rule::new(
            Head::Constraint,
            vec![Literal::pos(Atom::new("negative", vec![Term::var("E")])), Literal::neg(Atom::new("negsat", vec![Term::var("E")]))],
        ),
        origin: Provenance::Closing,
    });

    let indexed = sp
        .into_iter()
        .filter_map(|n| match n {
            Node::Pred(p) => Some(p),
            _ => None,
        })
        .collect();
    Ok(MetaProgram { vars, blocks, rules, indexed })
}

fn examples_atom(e: &str) -> Atom {
    Atom::new("examples", vec![Term::var(e)])
}

/// `reified_p([E,] c_d, X0, ..) :- d([E,] X0, ..)[, examples(E)].` per candidate.
fn predicate_bridges(var: &SketchVar, sp: &BTreeSet<Node>) -> Vec<MetaRule> {
    let naming = Naming::for_var(&var.id);
    let indexed = sp.contains(&Node::Sketch(var.id.clone()));
    let arity = var.arity.unwrap_or(0);
    let xs: Vec<Term> = (0..arity).map(|i| Term::var(format!("X{i}"))).collect();
    let mut out = Vec::new();
    for cand in &var.domain {
        let Candidate::Pred(name) = cand else { continue };
        let mut head_args = Vec::new();
        if indexed {
            head_args.push(Term::var("E"));
        }
        head_args.push(Term::sym(cand.constant()));
        head_args.extend(xs.iter().cloned());
        let cand_indexed = sp.contains(&Node::Pred(PredSig::new(name.clone(), arity)));
        let mut body_args = Vec::new();
        if cand_indexed {
            body_args.push(Term::var("E"));
        }
        body_args.extend(xs.iter().cloned());
        let mut body = vec![Literal::pos(Atom::new(name.clone(), body_args))];
        if indexed && !cand_indexed {
            body.push(Literal::pos(examples_atom("E")));
        }
        out.push(MetaRule {
            rule: Rule::new(Head::Atom(Atom::new(naming.reified.clone(), head_args)), body),
            origin: Provenance::Bridge(var.id.clone()),
        });
    }
    out
}

/// Role of a rewritten body literal when building guards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    /// Positive atom over a user predicate or a reified predicate family.
    Atom,
    Decision,
    Negative,
    /// Builtin or aggregate that only mentions user variables.
    Pure,
    /// Literal that produces or consumes values computed for sketched operators.
    Generated,
    /// Reified negation or comparison: never needed to bind anything.
    Excluded,
}

struct Item {
    lit: Literal,
    class: Class,
}

struct PendingGuard {
    id: String,
    name: String,
    args: Vec<Term>,
    /// Index of the host literal the guard serves.
    own: usize,
}

struct Fresh {
    used: BTreeSet<String>,
}

impl Fresh {
    fn get(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut i = 1;
        while self.used.contains(&name) {
            name = format!("{base}{i}");
            i += 1;
        }
        self.used.insert(name.clone());
        name
    }
}

struct RuleContext<'a> {
    sp: &'a BTreeSet<Node>,
    domains: &'a BTreeMap<&'a str, &'a SketchVar>,
    fresh: Fresh,
    e: String,
    uses_e: bool,
    head: Option<Atom>,
    decision_vars: BTreeMap<String, String>,
    decisions_pushed: BTreeSet<String>,
    generated: BTreeSet<String>,
    items: Vec<Item>,
    extra: Vec<MetaRule>,
    pending: Vec<PendingGuard>,
}

impl<'a> RuleContext<'a> {
    fn new(rule: &Rule, sp: &'a BTreeSet<Node>, domains: &'a BTreeMap<&'a str, &'a SketchVar>) -> Self {
        let mut used = BTreeSet::new();
        for l in &rule.body {
            let mut vs = BTreeSet::new();
            l.collect_vars(&mut vs);
            used.extend(vs.into_iter().map(str::to_string));
        }
        if let Head::Atom(a) = &rule.head {
            let mut vs = BTreeSet::new();
            a.args.iter().for_each(|t| t.collect_vars(&mut vs));
            used.extend(vs.into_iter().map(str::to_string));
        }
        let mut fresh = Fresh { used };
        let e = fresh.get("E");
        let mut ctx = RuleContext {
            sp,
            domains,
            fresh,
            e,
            uses_e: false,
            head: None,
            decision_vars: BTreeMap::new(),
            decisions_pushed: BTreeSet::new(),
            generated: BTreeSet::new(),
            items: Vec::new(),
            extra: Vec::new(),
            pending: Vec::new(),
        };
        if let Head::Atom(a) = &rule.head {
            ctx.head = Some(ctx.index_atom(a));
        }
        ctx
    }

    fn is_indexed(&self, node: Node) -> bool {
        self.sp.contains(&node)
    }

    fn e_term(&mut self) -> Term {
        self.uses_e = true;
        Term::var(self.e.clone())
    }

    fn index_atom(&mut self, a: &Atom) -> Atom {
        if self.is_indexed(Node::Pred(a.sig())) {
            let mut args = vec![self.e_term()];
            args.extend(a.args.iter().cloned());
            Atom::new(a.predicate.clone(), args)
        } else {
            a.clone()
        }
    }

    fn push(&mut self, lit: Literal, class: Class) -> usize {
        self.items.push(Item { lit, class });
        self.items.len() - 1
    }

    fn decision_var(&mut self, id: &str) -> String {
        if let Some(v) = self.decision_vars.get(id) {
            return v.clone();
        }
        let v = self.fresh.get("D");
        self.decision_vars.insert(id.to_string(), v.clone());
        v
    }

    fn push_decision(&mut self, id: &str) -> String {
        let d = self.decision_var(id);
        if self.decisions_pushed.insert(id.to_string()) {
            let naming = Naming::for_var(id);
            self.push(Literal::pos(Atom::new(naming.decision, vec![Term::var(d.clone())])), Class::Decision);
        }
        d
    }

    fn class_of(&self, lit: &Literal) -> Class {
        let mut vs = BTreeSet::new();
        lit.collect_vars(&mut vs);
        if vs.iter().any(|v| self.generated.contains(*v)) {
            Class::Generated
        } else {
            Class::Pure
        }
    }

    fn rewrite_body(&mut self, rule: &Rule) -> Result<(), RewriteError> {
        for (pos, lit) in rule.body.iter().enumerate() {
            match lit {
                Literal::Atom(a) => self.atom_literal(a),
                Literal::Cmp(c) => self.comparison(c),
                Literal::Agg(a) => {
                    let mut outside = BTreeSet::new();
                    if let Head::Atom(h) = &rule.head {
                        h.args.iter().for_each(|t| t.collect_vars(&mut outside));
                    }
                    for (j, other) in rule.body.iter().enumerate() {
                        match other {
                            _ if j == pos => {}
                            // Element variables of another aggregate are local to it.
                            Literal::Agg(o) => {
                                outside.insert(o.result.as_str());
                            }
                            _ => other.collect_vars(&mut outside),
                        }
                    }
                    let outside: BTreeSet<String> = outside.into_iter().map(str::to_string).collect();
                    self.aggregate(a, &outside)
                }
            }
        }
        Ok(())
    }

    fn atom_literal(&mut self, lit: &AtomLiteral) {
        match (&lit.sign, &lit.atom) {
            (Sign::Pos, AtomRef::Plain(a)) => {
                let a = self.index_atom(a);
                self.push(Literal::pos(a), Class::Atom);
            }
            (Sign::Neg, AtomRef::Plain(a)) => {
                let a = self.index_atom(a);
                self.push(Literal::neg(a), Class::Negative);
            }
            (sign @ (Sign::Pos | Sign::Neg), AtomRef::Sketched { var, args }) => {
                let atom = self.reified_atom(var, args);
                if matches!(sign, Sign::Pos) {
                    self.push(Literal::pos(atom), Class::Atom);
                    self.push_decision(var);
                } else {
                    self.push_decision(var);
                    self.push(Literal::neg(atom), Class::Negative);
                }
            }
            (Sign::Sketched(id), inner) => self.sketched_negation(id, inner),
        }
    }

    /// `reified_q([E,] D, args)` for an occurrence of `?q(args)` in the host rule.
    fn reified_atom(&mut self, var: &str, args: &[Term]) -> Atom {
        let naming = Naming::for_var(var);
        let d = self.decision_var(var);
        let mut out = Vec::new();
        if self.is_indexed(Node::Sketch(var.to_string())) {
            out.push(self.e_term());
        }
        out.push(Term::var(d));
        out.extend(args.iter().cloned());
        Atom::new(naming.reified, out)
    }

    fn sketched_negation(&mut self, id: &str, inner: &AtomRef) {
        let naming = Naming::for_var(id);
        let indexed = match inner {
            AtomRef::Plain(a) => self.is_indexed(Node::Pred(a.sig())),
            AtomRef::Sketched { var, .. } => self.is_indexed(Node::Sketch(var.clone())),
        };
        let mut vars = Vec::new();
        {
            let mut seen = BTreeSet::new();
            for t in inner.args() {
                let mut vs = BTreeSet::new();
                t.collect_vars(&mut vs);
                for v in vs {
                    if seen.insert(v.to_string()) {
                        vars.push(Term::var(v));
                    }
                }
            }
        }
        let e = if indexed { Some(self.e_term()) } else { None };
        let q_var = self.fresh.get("Q");

        // Inner atom as seen from the bridging rules, with a free candidate variable.
        let (bridge_inner, inner_choice) = match inner {
            AtomRef::Plain(a) => (self.index_atom(a), None),
            AtomRef::Sketched { var, args } => {
                let n = Naming::for_var(var);
                let mut out = Vec::new();
                if let Some(e) = &e {
                    out.push(e.clone());
                }
                out.push(Term::var(q_var.clone()));
                out.extend(args.iter().cloned());
                (Atom::new(n.reified, out), Some(n.choice))
            }
        };

        let mk_head = |value: Term| {
            let mut args = Vec::new();
            if let Some(e) = &e {
                args.push(e.clone());
            }
            args.push(value);
            if inner_choice.is_some() {
                args.push(Term::var(q_var.clone()));
            }
            args.extend(vars.iter().cloned());
            Atom::new(naming.reified.clone(), args)
        };
        self.extra.push(MetaRule {
            rule: Rule::new(Head::Atom(mk_head(Term::sym("pos"))), vec![Literal::pos(bridge_inner.clone())]),
            origin: Provenance::Bridge(id.to_string()),
        });
        let mut neg_body = vec![Literal::neg(bridge_inner)];
        if !vars.is_empty() {
            neg_body.push(Literal::pos(Atom::new(naming.guard.clone(), vars.clone())));
        }
        if let Some(choice) = &inner_choice {
            neg_body.push(Literal::pos(Atom::new(choice.clone(), vec![Term::var(q_var.clone())])));
        }
        if let Some(e) = &e {
            neg_body.push(Literal::pos(Atom::new("examples", vec![e.clone()])));
        }
        self.extra.push(MetaRule {
            rule: Rule::new(Head::Atom(mk_head(Term::sym("neg"))), neg_body),
            origin: Provenance::Bridge(id.to_string()),
        });

        // Host literal.
        let d = self.decision_var(id);
        let mut args = Vec::new();
        if let Some(e) = &e {
            args.push(e.clone());
        }
        args.push(Term::var(d));
        if let AtomRef::Sketched { var, .. } = inner {
            args.push(Term::var(self.decision_var(var)));
        }
        args.extend(vars.iter().cloned());
        let own = self.push(Literal::pos(Atom::new(naming.reified.clone(), args)), Class::Excluded);
        self.push_decision(id);
        if let AtomRef::Sketched { var, .. } = inner {
            self.push_decision(var);
        }
        if !vars.is_empty() {
            self.pending.push(PendingGuard { id: id.to_string(), name: naming.guard, args: vars, own });
        }
    }

    /// Replace sketched arithmetic inside `t` by fresh result variables.
    fn lift(&mut self, t: &Term) -> Term {
        match t {
            Term::Arith(l, ArithRef::Sketched(id), r) => {
                let l = self.lift(l);
                let r = self.lift(r);
                let a = self.simple(l);
                let b = self.simple(r);
                let result = self.fresh.get("T");
                let d = self.decision_var(id);
                let naming = Naming::for_var(id);
                let atom = Atom::new(naming.reified.clone(), vec![Term::var(d), a.clone(), b.clone(), Term::var(result.clone())]);
                let own = self.push(Literal::pos(atom), Class::Generated);
                self.push_decision(id);
                self.generated.insert(result.clone());
                self.pending.push(PendingGuard { id: id.clone(), name: naming.guard.clone(), args: vec![a, b], own });
                self.extra.extend(arith_bridges(id, self.domains.get(id.as_str()).copied()));
                Term::var(result)
            }
            Term::Arith(l, op, r) => Term::Arith(Box::new(self.lift(l)), op.clone(), Box::new(self.lift(r))),
            other => other.clone(),
        }
    }

    /// Name a compound operand with a fresh variable bound by an assignment.
    fn simple(&mut self, t: Term) -> Term {
        if t.is_simple() {
            return t;
        }
        let v = self.fresh.get("V");
        let lit = Literal::cmp(Term::var(v.clone()), CmpOp::Eq, t);
        let class = self.class_of(&lit);
        if class == Class::Generated {
            self.generated.insert(v.clone());
        }
        self.push(lit, class);
        Term::var(v)
    }

    fn comparison(&mut self, c: &Comparison) {
        let lhs = self.lift(&c.lhs);
        let rhs = self.lift(&c.rhs);
        match &c.op {
            CmpRef::Op(op) => {
                let lit = Literal::cmp(lhs, *op, rhs);
                let class = self.class_of(&lit);
                self.push(lit, class);
            }
            CmpRef::Sketched(id) => {
                let a = self.simple(lhs);
                let b = self.simple(rhs);
                let d = self.decision_var(id);
                let naming = Naming::for_var(id);
                let atom = Atom::new(naming.reified.clone(), vec![Term::var(d), a.clone(), b.clone()]);
                let own = self.push(Literal::pos(atom), Class::Excluded);
                self.push_decision(id);
                self.pending.push(PendingGuard { id: id.clone(), name: naming.guard.clone(), args: vec![a, b], own });
                self.extra.extend(cmp_bridges(id, self.domains.get(id.as_str()).copied()));
            }
        }
    }

    fn index_condition(&mut self, lits: &[Literal]) -> (Vec<Literal>, bool) {
        let mut indexed = false;
        let out = lits
            .iter()
            .map(|l| match l {
                Literal::Atom(AtomLiteral { sign, atom: AtomRef::Plain(a) }) => {
                    if self.is_indexed(Node::Pred(a.sig())) {
                        indexed = true;
                    }
                    Literal::Atom(AtomLiteral { sign: sign.clone(), atom: AtomRef::Plain(self.index_atom(a)) })
                }
                other => other.clone(),
            })
            .collect();
        (out, indexed)
    }

    fn aggregate(&mut self, agg: &Aggregate, outside: &BTreeSet<String>) {
        let (condition, indexed) = self.index_condition(&agg.condition);
        match &agg.func {
            AggRef::Fn(_) => {
                let lit = Literal::Agg(Aggregate { condition, ..agg.clone() });
                let class = self.class_of(&lit);
                self.push(lit, class);
            }
            AggRef::Sketched(id) => {
                let naming = Naming::for_var(id);
                let mut inner = BTreeSet::new();
                agg.tuple.iter().for_each(|t| t.collect_vars(&mut inner));
                agg.condition.iter().for_each(|l| l.collect_vars(&mut inner));
                let globals: Vec<Term> =
                    inner.into_iter().filter(|v| outside.contains(*v) && *v != agg.result).map(Term::var).collect();
                let e = if indexed { Some(Term::var(self.e.clone())) } else { None };
                let domain = self.domains.get(id.as_str()).map(|v| v.domain.clone()).unwrap_or_default();
                for cand in domain {
                    let Candidate::Agg(f) = cand else { continue };
                    let mut head = Vec::new();
                    if let Some(e) = &e {
                        head.push(e.clone());
                    }
                    head.push(Term::sym(f.name()));
                    head.push(Term::var(agg.result.clone()));
                    head.extend(globals.iter().cloned());
                    let mut body = vec![Literal::Agg(Aggregate {
                        result: agg.result.clone(),
                        func: AggRef::Fn(f),
                        tuple: agg.tuple.clone(),
                        condition: condition.clone(),
                    })];
                    if !globals.is_empty() {
                        body.push(Literal::pos(Atom::new(naming.guard.clone(), globals.clone())));
                    }
                    if let Some(e) = &e {
                        body.push(Literal::pos(Atom::new("examples", vec![e.clone()])));
                    }
                    self.extra.push(MetaRule {
                        rule: Rule::new(Head::Atom(Atom::new(naming.reified.clone(), head)), body),
                        origin: Provenance::Bridge(id.clone()),
                    });
                }
                let d = self.decision_var(id);
                let mut args = Vec::new();
                if indexed {
                    args.push(self.e_term());
                }
                args.push(Term::var(d));
                args.push(Term::var(agg.result.clone()));
                args.extend(globals.iter().cloned());
                let own = self.push(Literal::pos(Atom::new(naming.reified.clone(), args)), Class::Generated);
                self.push_decision(id);
                self.generated.insert(agg.result.clone());
                if !globals.is_empty() {
                    self.pending.push(PendingGuard { id: id.clone(), name: naming.guard, args: globals, own });
                }
            }
        }
    }

    /// Guard rules: the host body minus decisions, negation, reified negations and
    /// comparisons, and values produced for later operators.
    fn guards(&self, line: usize) -> Result<Vec<MetaRule>, RewriteError> {
        let mut out = Vec::new();
        for g in &self.pending {
            let mut body: Vec<&Literal> = Vec::new();
            for (i, item) in self.items.iter().enumerate() {
                let keep = match item.class {
                    Class::Atom => true,
                    Class::Pure => true,
                    Class::Generated => i < g.own,
                    Class::Decision | Class::Negative | Class::Excluded => false,
                };
                if keep && i != g.own {
                    body.push(&item.lit);
                }
            }
            let head = Head::Atom(Atom::new(g.name.clone(), g.args.clone()));
            let mut body: Vec<Literal> = body.into_iter().cloned().collect();
            loop {
                let mut candidate = body.clone();
                let mut vs = BTreeSet::new();
                candidate.iter().for_each(|l| l.collect_vars(&mut vs));
                if vs.contains(self.e.as_str()) {
                    candidate.push(Literal::pos(examples_atom(&self.e)));
                }
                let rule = Rule::new(head.clone(), candidate);
                let bad = unsafe_variables(&rule);
                if bad.is_empty() {
                    out.push(MetaRule { rule, origin: Provenance::Guard(g.id.clone()) });
                    break;
                }
                let before = body.len();
                let mut keep_idx = Vec::new();
                for (i, l) in body.iter().enumerate() {
                    let mut lv = BTreeSet::new();
                    l.collect_vars(&mut lv);
                    let drop = !matches!(l, Literal::Atom(_)) && lv.iter().any(|v| bad.iter().any(|b| b == v));
                    if !drop {
                        keep_idx.push(i);
                    }
                }
                body = keep_idx.into_iter().map(|i| body[i].clone()).collect();
                if body.len() == before {
                    return Err(RewriteError::UnsupportedGuard { line, id: g.id.clone() });
                }
            }
        }
        Ok(out)
    }

    fn final_body(&mut self) -> Vec<Literal> {
        let mut body: Vec<Literal> = self.items.iter().map(|i| i.lit.clone()).collect();
        if self.uses_e {
            body.push(Literal::pos(examples_atom(&self.e)));
        }
        body
    }
}

fn cmp_bridges(id: &str, var: Option<&SketchVar>) -> Vec<MetaRule> {
    let naming = Naming::for_var(id);
    let (x, y) = (Term::var("X"), Term::var("Y"));
    let guard = Literal::pos(Atom::new(naming.guard.clone(), vec![x.clone(), y.clone()]));
    let domain = var.map(|v| v.domain.clone()).unwrap_or_default();
    domain
        .iter()
        .map(|cand| {
            let head = Atom::new(naming.reified.clone(), vec![Term::sym(cand.constant()), x.clone(), y.clone()]);
            let mut body = vec![guard.clone()];
            if let Candidate::Cmp(op) = cand {
                body.push(Literal::cmp(x.clone(), *op, y.clone()));
            }
            MetaRule { rule: Rule::new(Head::Atom(head), body), origin: Provenance::Bridge(id.to_string()) }
        })
        .collect()
}

fn arith_bridges(id: &str, var: Option<&SketchVar>) -> Vec<MetaRule> {
    let naming = Naming::for_var(id);
    let (x, y, z) = (Term::var("X"), Term::var("Y"), Term::var("Z"));
    let guard = Literal::pos(Atom::new(naming.guard.clone(), vec![x.clone(), y.clone()]));
    let domain = var.map(|v| v.domain.clone()).unwrap_or_default();
    domain
        .iter()
        .filter_map(|cand| {
            let Candidate::Arith(op) = cand else { return None };
            let head = Atom::new(naming.reified.clone(), vec![Term::sym(cand.constant()), x.clone(), y.clone(), z.clone()]);
            let value = Term::Arith(Box::new(x.clone()), ArithRef::Op(*op), Box::new(y.clone()));
            let mut body = vec![guard.clone()];
            if *op == ArithOp::Div {
                body.push(Literal::cmp(y.clone(), CmpOp::Ne, Term::Int(0)));
            }
            body.push(Literal::cmp(z.clone(), CmpOp::Eq, value));
            Some(MetaRule { rule: Rule::new(Head::Atom(head), body), origin: Provenance::Bridge(id.to_string()) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_names() {
        assert_eq!(base_name("?p"), "p");
        assert_eq!(base_name("?=@3.1"), "cmp_3_1");
        assert_eq!(base_name("?not@3.0"), "not_3_0");
        assert_eq!(base_name("?+@1.2"), "arith_1_2");
        assert_eq!(base_name("?#@2.0"), "agg_2_0");
    }

    #[test]
    fn collisions_are_rejected() {
        let p = parse_sketch("[SKETCH]\nnegsat(X) :- a(X).\n").unwrap();
        assert_eq!(rewrite(&p), Err(RewriteError::NameCollision("negsat".into())));
        let p = parse_sketch("[SKETCH]\n:- reified_x(X).\n").unwrap();
        assert!(matches!(rewrite(&p), Err(RewriteError::NameCollision(_))));
    }

    #[test]
    fn fresh_names_avoid_user_variables() {
        let p = parse_sketch("[SKETCH]\n:- e(E,D), E ?= D.\n[EXAMPLES]\npositive: e(1,2).\n").unwrap();
        let meta = rewrite(&p).unwrap();
        let text = meta.to_text();
        assert!(text.contains(":- e(E1,E,D), reified_cmp_1_0(D1,E,D), decision_cmp_1_0(D1), examples(E1), positive(E1)."), "{text}");
        assert!(text.contains("guard_cmp_1_0(E,D) :- e(E1,E,D), examples(E1)."), "{text}");
    }
}
