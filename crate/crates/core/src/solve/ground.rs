//! Semi-naive bottom-up grounding.
//!
//! Predicates that do not depend on a choice are *deterministic*: their atoms are
//! computed exactly and dropped from every ground body. What remains are the choice
//! blocks and the ground rules and constraints that mention choice-dependent atoms.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::builtins;
use super::{GroundAtom, SolveError, Value};
use crate::dependency::{check_stratified, program_graph, Node, StratificationResult};
use crate::lang::{
    AggFn, AggRef, ArithOp, ArithRef, AtomLiteral, AtomRef, CmpOp, CmpRef, Head, Literal, Rule, Sign, Term,
    unsafe_variables,
};

pub type AtomId = u32;

/// Largest number of candidate values a non-deterministic `#sum` may range over.
const MAX_AGGREGATE_VALUES: usize = 100_000;

#[derive(Debug, Clone, Copy, Default)]
pub struct GroundOptions {
    /// Record every successful rule instance as (rule index, variable binding).
    pub record_instances: bool,
}

type PredId = u32;
/// Callback receiving each complete binding of a body.
type Emit<'a, G> = dyn FnMut(&mut G, &[Option<Value>], &Partial) -> Result<(), SolveError> + 'a;

#[derive(Debug, Default)]
struct AtomTable {
    preds: Vec<(Arc<str>, usize)>,
    pred_ids: HashMap<(Arc<str>, usize), PredId>,
    atoms: Vec<(PredId, Box<[Value]>)>,
    lookup: HashMap<(PredId, Box<[Value]>), AtomId>,
    by_pred: Vec<Vec<AtomId>>,
    index: HashMap<(PredId, u32, Value), Vec<AtomId>>,
    certain: Vec<bool>,
}

impl AtomTable {
    fn pred(&mut self, name: &str, arity: usize) -> PredId {
        let key = (Arc::from(name), arity);
        if let Some(&id) = self.pred_ids.get(&key) {
            return id;
        }
        let id = self.preds.len() as PredId;
        self.preds.push(key.clone());
        self.pred_ids.insert(key, id);
        self.by_pred.push(Vec::new());
        id
    }

    fn get(&self, pred: PredId, args: &[Value]) -> Option<AtomId> {
        // Boxed-slice keys cannot be borrowed as slices through a tuple, so build one.
        self.lookup.get(&(pred, args.to_vec().into_boxed_slice())).copied()
    }

    /// Returns the id and whether the atom is new.
    fn intern(&mut self, pred: PredId, args: Vec<Value>, certain: bool) -> (AtomId, bool) {
        let args = args.into_boxed_slice();
        if let Some(&id) = self.lookup.get(&(pred, args.clone())) {
            return (id, false);
        }
        let id = self.atoms.len() as AtomId;
        for (i, v) in args.iter().enumerate() {
            self.index.entry((pred, i as u32, v.clone())).or_default().push(id);
        }
        self.by_pred[pred as usize].push(id);
        self.lookup.insert((pred, args.clone()), id);
        self.atoms.push((pred, args));
        self.certain.push(certain);
        (id, true)
    }

    fn ground_atom(&self, id: AtomId) -> GroundAtom {
        let (p, args) = &self.atoms[id as usize];
        GroundAtom { predicate: self.preds[*p as usize].0.clone(), args: args.to_vec() }
    }
}

/// A non-deterministic aggregate instance: holds when the aggregate over the elements
/// whose conditions are true equals `value`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct GroundAggregate {
    pub func: AggFn,
    pub value: Value,
    pub elements: Vec<GroundElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct GroundElement {
    pub tuple: Vec<Value>,
    pub pos: Vec<AtomId>,
    pub neg: Vec<AtomId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct GroundRule {
    /// `None` for a constraint.
    pub head: Option<AtomId>,
    pub pos: Vec<AtomId>,
    pub neg: Vec<AtomId>,
    pub aggs: Vec<GroundAggregate>,
}

/// The result of grounding: exact deterministic atoms plus the choice-dependent remainder.
#[derive(Debug)]
pub struct GroundProgram {
    table: AtomTable,
    pub(crate) rules: Vec<GroundRule>,
    /// Exactly-one choice blocks in grounding order.
    pub(crate) blocks: Vec<Vec<AtomId>>,
    /// Evaluation order of each atom's predicate (dependencies first).
    pub(crate) atom_order: Vec<usize>,
    /// Constraint instances whose bodies hold regardless of the choices.
    pub root_violations: Vec<String>,
    /// Filled when [`GroundOptions::record_instances`] is set.
    pub instances: Vec<(usize, Vec<(String, Value)>)>,
}

impl GroundProgram {
    pub fn atom(&self, id: AtomId) -> GroundAtom {
        self.table.ground_atom(id)
    }

    pub fn atom_count(&self) -> usize {
        self.table.atoms.len()
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    pub fn blocks(&self) -> &[Vec<AtomId>] {
        &self.blocks
    }

    pub fn is_certain(&self, id: AtomId) -> bool {
        self.table.certain[id as usize]
    }

    pub fn find(&self, atom: &GroundAtom) -> Option<AtomId> {
        let pred = *self.table.pred_ids.get(&(atom.predicate.clone(), atom.args.len()))?;
        self.table.get(pred, &atom.args)
    }

    /// Atoms true in every answer set.
    pub fn certain_atoms(&self) -> impl Iterator<Item = GroundAtom> + '_ {
        (0..self.table.atoms.len() as AtomId).filter(|&i| self.is_certain(i)).map(|i| self.atom(i))
    }

    /// Readable form of a ground rule, used in violation reports.
    pub(crate) fn show_rule(&self, rule: &GroundRule) -> String {
        let mut parts: Vec<String> = rule.pos.iter().map(|&a| self.atom(a).to_string()).collect();
        parts.extend(rule.neg.iter().map(|&a| format!("not {}", self.atom(a))));
        for g in &rule.aggs {
            parts.push(format!("{} = #{}{{..{} elements..}}", g.value, g.func.name(), g.elements.len()));
        }
        let body = parts.join(", ");
        match rule.head {
            Some(h) => format!("{} :- {body}.", self.atom(h)),
            None => format!(":- {body}."),
        }
    }
}

impl fmt::Display for GroundProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            let atoms: Vec<String> = b.iter().map(|&a| self.atom(a).to_string()).collect();
            writeln!(f, "1 {{ {} }} 1.", atoms.join("; "))?;
        }
        for r in &self.rules {
            writeln!(f, "{}", self.show_rule(r))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Pat {
    Val(Value),
    Var(usize),
    Arith(Box<Pat>, ArithOp, Box<Pat>),
}

impl Pat {
    fn vars(&self, out: &mut Vec<usize>) {
        match self {
            Pat::Val(_) => {}
            Pat::Var(v) => out.push(*v),
            Pat::Arith(l, _, r) => {
                l.vars(out);
                r.vars(out);
            }
        }
    }

    fn is_bound(&self, bound: &[bool]) -> bool {
        match self {
            Pat::Val(_) => true,
            Pat::Var(v) => bound[*v],
            Pat::Arith(l, _, r) => l.is_bound(bound) && r.is_bound(bound),
        }
    }

    /// `Ok(None)` when the value is undefined (division by zero, symbolic arithmetic).
    fn eval(&self, b: &[Option<Value>]) -> Result<Option<Value>, SolveError> {
        match self {
            Pat::Val(v) => Ok(Some(v.clone())),
            Pat::Var(v) => Ok(Some(b[*v].clone().expect("scheduled variable is bound"))),
            Pat::Arith(l, op, r) => {
                let (Some(x), Some(y)) = (l.eval(b)?, r.eval(b)?) else { return Ok(None) };
                builtins::arith(*op, &x, &y)
            }
        }
    }
}

#[derive(Debug, Clone)]
enum CLit {
    Atom { neg: bool, pred: PredId, args: Vec<Pat> },
    Cmp { lhs: Pat, op: CmpOp, rhs: Pat },
    Agg(Box<CAgg>),
}

#[derive(Debug, Clone)]
struct CAgg {
    result: usize,
    func: AggFn,
    tuple: Vec<Pat>,
    cond: Vec<CLit>,
    /// Variables shared with the rest of the rule.
    globals: Vec<usize>,
    /// Variables that only occur inside the aggregate.
    locals: Vec<usize>,
    plan: Vec<Step>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Range {
    Old,
    Delta,
    All,
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Pos(usize, Range),
    Neg(usize),
    Filter(usize),
    /// Bind the variable on one side of `=` to the value of the other side.
    Assign { lit: usize, var: usize, from_rhs: bool },
    Agg(usize),
}

#[derive(Debug, Clone)]
struct CElem {
    pred: PredId,
    args: Vec<Pat>,
    cond: Vec<CLit>,
    plan: Vec<Step>,
}

#[derive(Debug, Clone)]
enum CHead {
    Constraint,
    Atom { pred: PredId, args: Vec<Pat> },
    Choice(Vec<CElem>),
}

#[derive(Debug, Clone)]
struct CRule {
    index: usize,
    head: CHead,
    lits: Vec<CLit>,
    var_names: Vec<String>,
    /// Plan with every positive literal ranging over all atoms.
    full: Vec<Step>,
    /// Per positive literal: plan that starts with that literal over the delta.
    deltas: Vec<(usize, Vec<Step>)>,
}

struct Compiler<'a> {
    table: &'a mut AtomTable,
    vars: HashMap<String, usize>,
    names: Vec<String>,
}

fn sketched(rule: &Rule) -> SolveError {
    SolveError::BackendLimitation(format!("sketched construct in `{rule}`"))
}

impl Compiler<'_> {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&v) = self.vars.get(name) {
            return v;
        }
        let v = self.names.len();
        self.names.push(name.to_string());
        self.vars.insert(name.to_string(), v);
        v
    }

    fn term(&mut self, t: &Term, rule: &Rule) -> Result<Pat, SolveError> {
        Ok(match t {
            Term::Int(i) => Pat::Val(Value::Int(*i)),
            Term::Sym(s) => Pat::Val(Value::sym(s)),
            Term::Var(v) => Pat::Var(self.var(v)),
            Term::Arith(l, ArithRef::Op(op), r) => Pat::Arith(Box::new(self.term(l, rule)?), *op, Box::new(self.term(r, rule)?)),
            Term::Arith(_, ArithRef::Sketched(_), _) => return Err(sketched(rule)),
        })
    }

    fn terms(&mut self, ts: &[Term], rule: &Rule) -> Result<Vec<Pat>, SolveError> {
        ts.iter().map(|t| self.term(t, rule)).collect()
    }

    fn literal(&mut self, l: &Literal, rule: &Rule) -> Result<CLit, SolveError> {
        Ok(match l {
            Literal::Atom(AtomLiteral { sign, atom: AtomRef::Plain(a) }) => {
                let neg = match sign {
                    Sign::Pos => false,
                    Sign::Neg => true,
                    Sign::Sketched(_) => return Err(sketched(rule)),
                };
                let pred = self.table.pred(&a.predicate, a.args.len());
                CLit::Atom { neg, pred, args: self.terms(&a.args, rule)? }
            }
            Literal::Atom(_) => return Err(sketched(rule)),
            Literal::Cmp(c) => {
                let CmpRef::Op(op) = c.op else { return Err(sketched(rule)) };
                CLit::Cmp { lhs: self.term(&c.lhs, rule)?, op, rhs: self.term(&c.rhs, rule)? }
            }
            Literal::Agg(a) => {
                let AggRef::Fn(func) = a.func else { return Err(sketched(rule)) };
                let result = self.var(&a.result);
                let tuple = self.terms(&a.tuple, rule)?;
                let cond = a.condition.iter().map(|l| self.literal(l, rule)).collect::<Result<Vec<_>, _>>()?;
                if cond.iter().any(|c| matches!(c, CLit::Agg(_))) {
                    return Err(SolveError::BackendLimitation(format!("nested aggregate in `{rule}`")));
                }
                CLit::Agg(Box::new(CAgg { result, func, tuple, cond, globals: Vec::new(), locals: Vec::new(), plan: Vec::new() }))
            }
        })
    }

    fn rule(&mut self, index: usize, rule: &Rule) -> Result<CRule, SolveError> {
        self.vars.clear();
        self.names.clear();
        let lits = rule.body.iter().map(|l| self.literal(l, rule)).collect::<Result<Vec<_>, _>>()?;
        let head = match &rule.head {
            Head::Constraint => CHead::Constraint,
            Head::Atom(a) => {
                let pred = self.table.pred(&a.predicate, a.args.len());
                CHead::Atom { pred, args: self.terms(&a.args, rule)? }
            }
            Head::Choice(c) => {
                if c.lower != Some(1) || c.upper != Some(1) {
                    return Err(SolveError::BackendLimitation(format!(
                        "only exactly-one choice rules are supported, found `{rule}`"
                    )));
                }
                let mut elems = Vec::new();
                for e in &c.elements {
                    let pred = self.table.pred(&e.atom.predicate, e.atom.args.len());
                    let args = self.terms(&e.atom.args, rule)?;
                    let cond = e.condition.iter().map(|l| self.literal(l, rule)).collect::<Result<Vec<_>, _>>()?;
                    if cond.iter().any(|c| matches!(c, CLit::Agg(_))) {
                        return Err(SolveError::BackendLimitation(format!("aggregate in choice condition of `{rule}`")));
                    }
                    elems.push(CElem { pred, args, cond, plan: Vec::new() });
                }
                CHead::Choice(elems)
            }
        };
        let nvars = self.names.len();
        let mut lits = lits;

        // Aggregate-local variables: those that occur nowhere else in the rule.
        let mut outside_counts = vec![0usize; nvars];
        let note = |vs: Vec<usize>, counts: &mut Vec<usize>| {
            let mut vs = vs;
            vs.sort_unstable();
            vs.dedup();
            for v in vs {
                counts[v] += 1;
            }
        };
        let lit_vars = |l: &CLit| {
            let mut vs = Vec::new();
            match l {
                CLit::Atom { args, .. } => args.iter().for_each(|p| p.vars(&mut vs)),
                CLit::Cmp { lhs, rhs, .. } => {
                    lhs.vars(&mut vs);
                    rhs.vars(&mut vs);
                }
                CLit::Agg(a) => {
                    vs.push(a.result);
                    a.tuple.iter().for_each(|p| p.vars(&mut vs));
                    a.cond.iter().for_each(|c| match c {
                        CLit::Atom { args, .. } => args.iter().for_each(|p| p.vars(&mut vs)),
                        CLit::Cmp { lhs, rhs, .. } => {
                            lhs.vars(&mut vs);
                            rhs.vars(&mut vs);
                        }
                        CLit::Agg(_) => {}
                    });
                }
            }
            vs
        };
        let mut head_vars = Vec::new();
        match &head {
            CHead::Atom { args, .. } => args.iter().for_each(|p| p.vars(&mut head_vars)),
            CHead::Choice(elems) => {
                for e in elems {
                    e.args.iter().for_each(|p| p.vars(&mut head_vars));
                    for c in &e.cond {
                        head_vars.extend(lit_vars(c));
                    }
                }
            }
            CHead::Constraint => {}
        }
        note(head_vars, &mut outside_counts);
        let per_lit: Vec<Vec<usize>> = lits.iter().map(&lit_vars).collect();
        // Element variables of an aggregate are local to it; only its result is visible outside.
        for (l, vs) in lits.iter().zip(&per_lit) {
            match l {
                CLit::Agg(a) => note(vec![a.result], &mut outside_counts),
                _ => note(vs.clone(), &mut outside_counts),
            }
        }
        for (i, l) in lits.iter_mut().enumerate() {
            if let CLit::Agg(a) = l {
                let mut own = per_lit[i].clone();
                own.retain(|&v| v != a.result);
                own.sort_unstable();
                own.dedup();
                let (globals, locals): (Vec<usize>, Vec<usize>) = own.into_iter().partition(|&v| outside_counts[v] > 0);
                let mut bound = vec![false; nvars];
                globals.iter().for_each(|&v| bound[v] = true);
                a.plan = plan(&a.cond, bound, None, |_| Range::All, &[]).ok_or_else(|| unsafe_err(rule, &self.names))?;
                a.globals = globals;
                a.locals = locals;
            }
        }

        let aggs_info: Vec<Option<Vec<usize>>> =
            lits.iter().map(|l| if let CLit::Agg(a) = l { Some(a.globals.clone()) } else { None }).collect();
        let full = plan(&lits, vec![false; nvars], None, |_| Range::All, &aggs_info).ok_or_else(|| unsafe_err(rule, &self.names))?;
        let positives: Vec<usize> =
            lits.iter().enumerate().filter(|(_, l)| matches!(l, CLit::Atom { neg: false, .. })).map(|(i, _)| i).collect();
        let mut deltas = Vec::new();
        for (k, &i) in positives.iter().enumerate() {
            let range = |j: usize| match positives.iter().position(|&p| p == j) {
                Some(pk) if pk < k => Range::Old,
                Some(pk) if pk == k => Range::Delta,
                _ => Range::All,
            };
            let p = plan(&lits, vec![false; nvars], Some(i), range, &aggs_info).ok_or_else(|| unsafe_err(rule, &self.names))?;
            deltas.push((i, p));
        }

        let mut head = head;
        if let CHead::Choice(elems) = &mut head {
            let mut bound = vec![false; nvars];
            for s in &full {
                mark_bound(s, &lits, &mut bound);
            }
            for e in elems {
                e.plan = plan(&e.cond, bound.clone(), None, |_| Range::All, &[]).ok_or_else(|| unsafe_err(rule, &self.names))?;
            }
        }
        Ok(CRule { index, head, lits, var_names: self.names.clone(), full, deltas })
    }
}

fn unsafe_err(rule: &Rule, _names: &[String]) -> SolveError {
    let vars = unsafe_variables(rule);
    SolveError::Unsafe { rule: rule.to_string(), vars: if vars.is_empty() { "?".into() } else { vars.join(", ") } }
}

fn mark_bound(step: &Step, lits: &[CLit], bound: &mut [bool]) {
    match *step {
        Step::Pos(i, _) => {
            if let CLit::Atom { args, .. } = &lits[i] {
                for a in args {
                    if let Pat::Var(v) = a {
                        bound[*v] = true;
                    }
                }
            }
        }
        Step::Assign { var, .. } => bound[var] = true,
        Step::Agg(i) => {
            if let CLit::Agg(a) = &lits[i] {
                bound[a.result] = true;
            }
        }
        Step::Neg(_) | Step::Filter(_) => {}
    }
}

/// Greedy literal order: cheap checks as soon as they are ready, then the positive
/// atom with the most bound arguments. `None` if some literal can never be scheduled.
fn plan(
    lits: &[CLit],
    mut bound: Vec<bool>,
    first: Option<usize>,
    range: impl Fn(usize) -> Range,
    aggs: &[Option<Vec<usize>>],
) -> Option<Vec<Step>> {
    let mut done = vec![false; lits.len()];
    let mut steps = Vec::new();
    if let Some(i) = first {
        let s = Step::Pos(i, range(i));
        mark_bound(&s, lits, &mut bound);
        steps.push(s);
        done[i] = true;
    }
    while done.iter().any(|d| !d) {
        let mut chosen = None;
        for (i, l) in lits.iter().enumerate() {
            if done[i] {
                continue;
            }
            match l {
                CLit::Cmp { lhs, op, rhs } => {
                    if lhs.is_bound(&bound) && rhs.is_bound(&bound) {
                        chosen = Some(Step::Filter(i));
                    } else if *op == CmpOp::Eq {
                        if let (Pat::Var(v), true) = (lhs, rhs.is_bound(&bound)) {
                            chosen = Some(Step::Assign { lit: i, var: *v, from_rhs: true });
                        } else if let (Pat::Var(v), true) = (rhs, lhs.is_bound(&bound)) {
                            chosen = Some(Step::Assign { lit: i, var: *v, from_rhs: false });
                        }
                    }
                }
                CLit::Atom { neg: true, args, .. } => {
                    if args.iter().all(|a| a.is_bound(&bound)) {
                        chosen = Some(Step::Neg(i));
                    }
                }
                CLit::Agg(_) => {
                    let globals = aggs.get(i).and_then(|g| g.as_ref());
                    if globals.is_some_and(|g| g.iter().all(|&v| bound[v])) {
                        chosen = Some(Step::Agg(i));
                    }
                }
                CLit::Atom { neg: false, .. } => {}
            }
            if chosen.is_some() {
                break;
            }
        }
        if chosen.is_none() {
            let mut best: Option<(usize, usize)> = None;
            for (i, l) in lits.iter().enumerate() {
                if let (false, CLit::Atom { neg: false, args, .. }) = (done[i], l) {
                    let score = args.iter().filter(|a| a.is_bound(&bound)).count();
                    if best.is_none_or(|(_, s)| score > s) {
                        best = Some((i, score));
                    }
                }
            }
            chosen = best.map(|(i, _)| Step::Pos(i, range(i)));
        }
        let s = chosen?;
        let i = match s {
            Step::Pos(i, _) | Step::Neg(i) | Step::Filter(i) | Step::Agg(i) => i,
            Step::Assign { lit, .. } => lit,
        };
        mark_bound(&s, lits, &mut bound);
        done[i] = true;
        steps.push(s);
    }
    // Arithmetic inside positive atoms must be evaluable once the plan is complete.
    for s in &steps {
        if let Step::Pos(i, _) = s {
            if let CLit::Atom { args, .. } = &lits[*i] {
                if !args.iter().all(|a| a.is_bound(&bound)) {
                    return None;
                }
            }
        }
    }
    Some(steps)
}

/// Non-deterministic parts collected while matching a body.
#[derive(Debug, Default)]
struct Partial {
    pos: Vec<AtomId>,
    neg: Vec<AtomId>,
    aggs: Vec<GroundAggregate>,
}

impl Partial {
    fn is_empty(&self) -> bool {
        self.pos.is_empty() && self.neg.is_empty() && self.aggs.is_empty()
    }
}

struct Grounder<'a> {
    table: &'a mut AtomTable,
    nd: &'a [bool],
    lo: AtomId,
    hi: AtomId,
}

impl Grounder<'_> {
    fn candidates(&self, pred: PredId, args: &[Pat], b: &[Option<Value>], range: Range) -> Result<Vec<AtomId>, SolveError> {
        let (lo, hi) = match range {
            Range::Old => (0, self.lo),
            Range::Delta => (self.lo, self.hi),
            Range::All => (0, self.hi),
        };
        let mut list: Option<&Vec<AtomId>> = None;
        for (i, a) in args.iter().enumerate() {
            let v = match a {
                Pat::Val(v) => Some(v.clone()),
                Pat::Var(x) => b[*x].clone(),
                Pat::Arith(..) => None,
            };
            if let Some(v) = v {
                match self.table.index.get(&(pred, i as u32, v)) {
                    Some(l) => {
                        if list.is_none_or(|cur| l.len() < cur.len()) {
                            list = Some(l);
                        }
                    }
                    None => return Ok(Vec::new()),
                }
            }
        }
        let list = list.unwrap_or(&self.table.by_pred[pred as usize]);
        let start = list.partition_point(|&id| id < lo);
        let end = list.partition_point(|&id| id < hi);
        Ok(list[start..end].to_vec())
    }

    /// Unify atom arguments with a ground tuple, recording newly bound variables.
    fn unify(args: &[Pat], values: &[Value], b: &mut [Option<Value>], trail: &mut Vec<usize>) -> Result<bool, SolveError> {
        for (p, v) in args.iter().zip(values) {
            match p {
                Pat::Val(c) => {
                    if c != v {
                        return Ok(false);
                    }
                }
                Pat::Var(x) => match &b[*x] {
                    Some(c) => {
                        if c != v {
                            return Ok(false);
                        }
                    }
                    None => {
                        b[*x] = Some(v.clone());
                        trail.push(*x);
                    }
                },
                Pat::Arith(..) => {}
            }
        }
        for (p, v) in args.iter().zip(values) {
            if let Pat::Arith(..) = p {
                if p.eval(b)?.as_ref() != Some(v) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    fn eval_args(args: &[Pat], b: &[Option<Value>]) -> Result<Option<Vec<Value>>, SolveError> {
        let mut out = Vec::with_capacity(args.len());
        for a in args {
            match a.eval(b)? {
                Some(v) => out.push(v),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    fn search(
        &mut self,
        lits: &[CLit],
        steps: &[Step],
        b: &mut Vec<Option<Value>>,
        partial: &mut Partial,
        emit: &mut Emit<'_, Self>,
    ) -> Result<(), SolveError> {
        let Some((step, rest)) = steps.split_first() else {
            return emit(self, b, partial);
        };
        match *step {
            Step::Pos(i, range) => {
                let CLit::Atom { pred, args, .. } = &lits[i] else { unreachable!() };
                for id in self.candidates(*pred, args, b, range)? {
                    let mut trail = Vec::new();
                    let values = self.table.atoms[id as usize].1.clone();
                    if Self::unify(args, &values, b, &mut trail)? {
                        let nd = !self.table.certain[id as usize];
                        if nd {
                            partial.pos.push(id);
                        }
                        self.search(lits, rest, b, partial, emit)?;
                        if nd {
                            partial.pos.pop();
                        }
                    }
                    for x in trail {
                        b[x] = None;
                    }
                }
                Ok(())
            }
            Step::Neg(i) => {
                let CLit::Atom { pred, args, .. } = &lits[i] else { unreachable!() };
                let Some(values) = Self::eval_args(args, b)? else {
                    return self.search(lits, rest, b, partial, emit);
                };
                match self.table.get(*pred, &values) {
                    None => self.search(lits, rest, b, partial, emit),
                    Some(id) if self.table.certain[id as usize] => Ok(()),
                    Some(id) => {
                        partial.neg.push(id);
                        self.search(lits, rest, b, partial, emit)?;
                        partial.neg.pop();
                        Ok(())
                    }
                }
            }
            Step::Filter(i) => {
                let CLit::Cmp { lhs, op, rhs } = &lits[i] else { unreachable!() };
                let (Some(x), Some(y)) = (lhs.eval(b)?, rhs.eval(b)?) else { return Ok(()) };
                if builtins::compare(*op, &x, &y) {
                    self.search(lits, rest, b, partial, emit)
                } else {
                    Ok(())
                }
            }
            Step::Assign { lit, var, from_rhs } => {
                let CLit::Cmp { lhs, rhs, .. } = &lits[lit] else { unreachable!() };
                let src = if from_rhs { rhs } else { lhs };
                let Some(v) = src.eval(b)? else { return Ok(()) };
                b[var] = Some(v);
                self.search(lits, rest, b, partial, emit)?;
                b[var] = None;
                Ok(())
            }
            Step::Agg(i) => {
                let CLit::Agg(agg) = &lits[i] else { unreachable!() };
                let elements = self.aggregate_elements(agg, b)?;
                let deterministic = elements.iter().all(|e| e.pos.is_empty() && e.neg.is_empty());
                let preset = b[agg.result].clone();
                if deterministic {
                    let mut tuples: Vec<&[Value]> = elements.iter().map(|e| e.tuple.as_slice()).collect();
                    tuples.sort();
                    tuples.dedup();
                    let Some(v) = builtins::aggregate(agg.func, tuples)? else { return Ok(()) };
                    match preset {
                        Some(p) if p != v => Ok(()),
                        Some(_) => self.search(lits, rest, b, partial, emit),
                        None => {
                            b[agg.result] = Some(v);
                            self.search(lits, rest, b, partial, emit)?;
                            b[agg.result] = None;
                            Ok(())
                        }
                    }
                } else {
                    let values = match &preset {
                        Some(p) => vec![p.clone()],
                        None => possible_values(agg.func, &elements)?,
                    };
                    for v in values {
                        partial.aggs.push(GroundAggregate { func: agg.func, value: v.clone(), elements: elements.clone() });
                        if preset.is_none() {
                            b[agg.result] = Some(v);
                        }
                        self.search(lits, rest, b, partial, emit)?;
                        if preset.is_none() {
                            b[agg.result] = None;
                        }
                        partial.aggs.pop();
                    }
                    Ok(())
                }
            }
        }
    }

    fn aggregate_elements(&mut self, agg: &CAgg, b: &mut Vec<Option<Value>>) -> Result<Vec<GroundElement>, SolveError> {
        let mut out: Vec<GroundElement> = Vec::new();
        let mut seen = HashSet::new();
        let mut inner = Partial::default();
        let tuple = agg.tuple.clone();
        self.search(&agg.cond, &agg.plan, b, &mut inner, &mut |_, b, p| {
            if let Some(t) = Self::eval_args(&tuple, b)? {
                let e = GroundElement { tuple: t, pos: p.pos.clone(), neg: p.neg.clone() };
                if seen.insert(e.clone()) {
                    out.push(e);
                }
            }
            Ok(())
        })?;
        for &v in &agg.locals {
            b[v] = None;
        }
        Ok(out)
    }
}

/// Every value a non-deterministic aggregate might take (a superset is fine).
fn possible_values(func: AggFn, elements: &[GroundElement]) -> Result<Vec<Value>, SolveError> {
    let mut tuples: Vec<&Vec<Value>> = elements.iter().map(|e| &e.tuple).collect();
    tuples.sort();
    tuples.dedup();
    let certain: HashSet<&Vec<Value>> =
        elements.iter().filter(|e| e.pos.is_empty() && e.neg.is_empty()).map(|e| &e.tuple).collect();
    Ok(match func {
        AggFn::Count => (certain.len() as i64..=tuples.len() as i64).map(Value::Int).collect(),
        AggFn::Sum => {
            let mut base: i64 = 0;
            let mut sums = std::collections::BTreeSet::new();
            for t in &tuples {
                if let (true, Some(Value::Int(v))) = (certain.contains(t), t.first()) {
                    base = base.checked_add(*v).ok_or_else(|| SolveError::Overflow("#sum".into()))?;
                }
            }
            sums.insert(base);
            for t in &tuples {
                let (false, Some(Value::Int(v))) = (certain.contains(t), t.first()) else { continue };
                let next: Vec<i64> = sums.iter().filter_map(|s| s.checked_add(*v)).collect();
                sums.extend(next);
                if sums.len() > MAX_AGGREGATE_VALUES {
                    return Err(SolveError::TooLarge(format!("#sum over {} optional elements", tuples.len())));
                }
            }
            sums.into_iter().map(Value::Int).collect()
        }
        AggFn::Min | AggFn::Max => {
            let mut firsts: Vec<Value> = tuples.iter().filter_map(|t| t.first().cloned()).collect();
            if certain.is_empty() {
                firsts.push(if func == AggFn::Min { Value::Sup } else { Value::Inf });
            }
            firsts.sort();
            firsts.dedup();
            firsts
        }
    })
}

/// Ground a standard program (choice rules allowed) with default options.
pub fn ground(rules: &[Rule]) -> Result<GroundProgram, SolveError> {
    ground_with(rules, GroundOptions::default())
}

pub fn ground_with(rules: &[Rule], options: GroundOptions) -> Result<GroundProgram, SolveError> {
    let graph = program_graph(rules);
    if let StratificationResult::NegativeCycle(c) = check_stratified(&graph) {
        let names: Vec<String> = c.iter().map(Node::to_string).collect();
        return Err(SolveError::NotStratified(names.join(" -> ")));
    }
    for rule in rules {
        let bad = unsafe_variables(rule);
        if !bad.is_empty() {
            return Err(SolveError::Unsafe { rule: rule.to_string(), vars: bad.join(", ") });
        }
    }

    let mut table = AtomTable::default();
    let mut compiled = Vec::with_capacity(rules.len());
    {
        let mut c = Compiler { table: &mut table, vars: HashMap::new(), names: Vec::new() };
        for (i, r) in rules.iter().enumerate() {
            compiled.push(c.rule(i, r)?);
        }
    }

    // Component order over predicates, dependencies first.
    let npred = table.preds.len();
    let mut g: DiGraph<(), ()> = DiGraph::new();
    let nodes: Vec<_> = (0..npred).map(|_| g.add_node(())).collect();
    let mut choice_pred = vec![false; npred];
    let mut normal_head = vec![false; npred];
    let body_preds = |lits: &[CLit], out: &mut Vec<PredId>| {
        for l in lits {
            match l {
                CLit::Atom { pred, .. } => out.push(*pred),
                CLit::Agg(a) => {
                    for c in &a.cond {
                        if let CLit::Atom { pred, .. } = c {
                            out.push(*pred);
                        }
                    }
                }
                CLit::Cmp { .. } => {}
            }
        }
    };
    let mut head_preds_of: Vec<Vec<PredId>> = Vec::with_capacity(compiled.len());
    for r in &compiled {
        let mut deps = Vec::new();
        body_preds(&r.lits, &mut deps);
        let heads: Vec<PredId> = match &r.head {
            CHead::Constraint => Vec::new(),
            CHead::Atom { pred, .. } => {
                normal_head[*pred as usize] = true;
                vec![*pred]
            }
            CHead::Choice(elems) => {
                for e in elems {
                    choice_pred[e.pred as usize] = true;
                    body_preds(&e.cond, &mut deps);
                }
                elems.iter().map(|e| e.pred).collect()
            }
        };
        for &h in &heads {
            for &d in &deps {
                g.add_edge(nodes[h as usize], nodes[d as usize], ());
            }
        }
        head_preds_of.push(heads);
    }
    if let Some(p) = (0..npred).find(|&p| choice_pred[p] && normal_head[p]) {
        return Err(SolveError::BackendLimitation(format!(
            "{}/{} is defined both by a choice and by ordinary rules",
            table.preds[p].0, table.preds[p].1
        )));
    }
    let sccs = tarjan_scc(&g);
    let mut order = vec![0usize; npred];
    for (ci, scc) in sccs.iter().enumerate() {
        for n in scc {
            order[n.index()] = ci;
        }
    }
    // Non-deterministic: choice heads and everything depending on them.
    let mut nd = choice_pred.clone();
    let mut changed = true;
    while changed {
        changed = false;
        for e in g.raw_edges() {
            let (h, d) = (e.source().index(), e.target().index());
            if nd[d] && !nd[h] {
                nd[h] = true;
                changed = true;
            }
        }
    }

    let mut by_component: Vec<Vec<usize>> = vec![Vec::new(); sccs.len()];
    let mut constraints = Vec::new();
    for (ri, heads) in head_preds_of.iter().enumerate() {
        match heads.iter().map(|&h| order[h as usize]).min() {
            Some(c) => by_component[c].push(ri),
            None => constraints.push(ri),
        }
    }

    let mut out_rules: Vec<GroundRule> = Vec::new();
    let mut seen_rules: HashSet<GroundRule> = HashSet::new();
    let mut blocks: Vec<Vec<AtomId>> = Vec::new();
    let mut block_of: HashMap<AtomId, usize> = HashMap::new();
    let mut root_violations = Vec::new();
    let mut instances = Vec::new();

    let mut process = |table: &mut AtomTable,
                       comp_preds: Option<&HashSet<PredId>>,
                       rule_ids: &[usize],
                       round: usize,
                       lo: AtomId,
                       hi: AtomId|
     -> Result<(), SolveError> {
        for &ri in rule_ids {
            let rule = &compiled[ri];
            let plans: Vec<&Vec<Step>> = if round == 0 {
                vec![&rule.full]
            } else {
                rule.deltas
                    .iter()
                    .filter(|(i, _)| match &rule.lits[*i] {
                        CLit::Atom { pred, .. } => comp_preds.is_some_and(|c| c.contains(pred)),
                        _ => false,
                    })
                    .map(|(_, p)| p)
                    .collect()
            };
            for steps in plans {
                let mut gr = Grounder { table, nd: &nd, lo, hi };
                let mut b = vec![None; rule.var_names.len()];
                let mut partial = Partial::default();
                let mut emit = |gr: &mut Grounder, b: &[Option<Value>], p: &Partial| -> Result<(), SolveError> {
                    if options.record_instances {
                        let binding =
                            rule.var_names.iter().zip(b).filter_map(|(n, v)| v.clone().map(|v| (n.clone(), v))).collect();
                        instances.push((rule.index, binding));
                    }
                    match &rule.head {
                        CHead::Constraint => {
                            if p.is_empty() {
                                root_violations.push(format!("{} with {}", rules[rule.index], show_binding(&rule.var_names, b)));
                            } else {
                                let g = GroundRule { head: None, pos: p.pos.clone(), neg: p.neg.clone(), aggs: p.aggs.clone() };
                                if seen_rules.insert(g.clone()) {
                                    out_rules.push(g);
                                }
                            }
                        }
                        CHead::Atom { pred, args } => {
                            let Some(values) = Grounder::eval_args(args, b)? else { return Ok(()) };
                            if gr.nd[*pred as usize] {
                                let (id, _) = gr.table.intern(*pred, values, false);
                                let g = GroundRule { head: Some(id), pos: p.pos.clone(), neg: p.neg.clone(), aggs: p.aggs.clone() };
                                if seen_rules.insert(g.clone()) {
                                    out_rules.push(g);
                                }
                            } else {
                                debug_assert!(p.is_empty());
                                gr.table.intern(*pred, values, true);
                            }
                        }
                        CHead::Choice(elems) => {
                            if !p.is_empty() {
                                return Err(SolveError::BackendLimitation(format!(
                                    "choice rule body depends on a choice: `{}`",
                                    rules[rule.index]
                                )));
                            }
                            let mut block: Vec<AtomId> = Vec::new();
                            let mut b2 = b.to_vec();
                            for e in elems {
                                let mut found: Vec<Vec<Value>> = Vec::new();
                                let mut inner = Partial::default();
                                let mut limitation = false;
                                let args = e.args.clone();
                                let saved_hi = gr.hi;
                                gr.hi = gr.table.atoms.len() as AtomId;
                                gr.search(&e.cond, &e.plan, &mut b2, &mut inner, &mut |_, b, p| {
                                    if !p.is_empty() {
                                        limitation = true;
                                    } else if let Some(v) = Grounder::eval_args(&args, b)? {
                                        found.push(v);
                                    }
                                    Ok(())
                                })?;
                                gr.hi = saved_hi;
                                if limitation {
                                    return Err(SolveError::BackendLimitation(format!(
                                        "choice condition depends on a choice: `{}`",
                                        rules[rule.index]
                                    )));
                                }
                                for v in found {
                                    let (id, _) = gr.table.intern(e.pred, v, false);
                                    if !block.contains(&id) {
                                        block.push(id);
                                    }
                                }
                            }
                            if let Some(&existing) = block.first().and_then(|a| block_of.get(a)) {
                                if blocks[existing] == block {
                                    return Ok(());
                                }
                            }
                            if let Some(a) = block.iter().find(|a| block_of.contains_key(a)) {
                                return Err(SolveError::BackendLimitation(format!(
                                    "atom {} belongs to two choice blocks",
                                    gr.table.ground_atom(*a)
                                )));
                            }
                            for &a in &block {
                                block_of.insert(a, blocks.len());
                            }
                            blocks.push(block);
                        }
                    }
                    Ok(())
                };
                gr.search(&rule.lits, steps, &mut b, &mut partial, &mut emit)?;
            }
        }
        Ok(())
    };

    for (ci, rule_ids) in by_component.iter().enumerate() {
        if rule_ids.is_empty() {
            continue;
        }
        let preds: HashSet<PredId> = sccs[ci].iter().map(|n| n.index() as PredId).collect();
        // Choice rules first so their atoms feed the rest of the component.
        let (choices, normal): (Vec<usize>, Vec<usize>) =
            rule_ids.iter().partition(|&&ri| matches!(compiled[ri].head, CHead::Choice(_)));
        if !choices.is_empty() {
            let hi = table.atoms.len() as AtomId;
            for &ri in &choices {
                if has_component_dependency(&compiled[ri], &preds) {
                    return Err(SolveError::BackendLimitation(format!(
                        "recursion through a choice rule: `{}`",
                        rules[compiled[ri].index]
                    )));
                }
            }
            process(&mut table, Some(&preds), &choices, 0, 0, hi)?;
        }
        let mut lo: AtomId = 0;
        let mut round = 0;
        loop {
            let hi = table.atoms.len() as AtomId;
            if round > 0 && hi == lo {
                break;
            }
            process(&mut table, Some(&preds), &normal, round, lo, hi)?;
            lo = hi;
            round += 1;
            let recursive = normal.iter().any(|&ri| !compiled[ri].deltas.is_empty());
            if !recursive {
                break;
            }
        }
    }
    let hi = table.atoms.len() as AtomId;
    process(&mut table, None, &constraints, 0, 0, hi)?;

    let atom_order = table.atoms.iter().map(|(p, _)| order[*p as usize]).collect();
    Ok(GroundProgram { table, rules: out_rules, blocks, atom_order, root_violations, instances })
}

fn has_component_dependency(rule: &CRule, preds: &HashSet<PredId>) -> bool {
    let hit = |lits: &[CLit]| {
        lits.iter().any(|l| match l {
            CLit::Atom { pred, .. } => preds.contains(pred),
            CLit::Agg(a) => a.cond.iter().any(|c| matches!(c, CLit::Atom { pred, .. } if preds.contains(pred))),
            CLit::Cmp { .. } => false,
        })
    };
    hit(&rule.lits) || matches!(&rule.head, CHead::Choice(es) if es.iter().any(|e| hit(&e.cond)))
}

fn show_binding(names: &[String], b: &[Option<Value>]) -> String {
    let parts: Vec<String> =
        names.iter().zip(b).filter_map(|(n, v)| v.as_ref().map(|v| format!("{n}={v}"))).collect();
    if parts.is_empty() {
        "no variables".into()
    } else {
        parts.join(", ")
    }
}
