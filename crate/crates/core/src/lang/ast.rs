//! Abstract syntax shared by sketches, meta-programs and completed programs.
//!
//! Sketched constructs (`?p(..)`, `?=`, `?+`, `?not`, `?#`) are ordinary variants of
//! the same tree. A program is *standard* when none of them occur.

use std::collections::BTreeSet;
use std::fmt;

/// Predicate name plus arity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredSig {
    pub name: String,
    pub arity: usize,
}

impl PredSig {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        PredSig { name: name.into(), arity }
    }
}

impl fmt::Display for PredSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    /// `|a - b|`
    Dist,
}

impl ArithOp {
    pub const ALL: [ArithOp; 5] = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div, ArithOp::Dist];

    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Dist => "dist",
        }
    }

    pub fn constant(self) -> &'static str {
        match self {
            ArithOp::Add => "plus",
            ArithOp::Sub => "minus",
            ArithOp::Mul => "times",
            ArithOp::Div => "div",
            ArithOp::Dist => "dist",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Ge,
    Le,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Gt, CmpOp::Ge, CmpOp::Le];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
        }
    }

    pub fn constant(self) -> &'static str {
        match self {
            CmpOp::Eq => "eq",
            CmpOp::Ne => "neq",
            CmpOp::Lt => "lt",
            CmpOp::Gt => "gt",
            CmpOp::Ge => "geq",
            CmpOp::Le => "leq",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AggFn {
    Max,
    Min,
    Count,
    Sum,
}

impl AggFn {
    pub const ALL: [AggFn; 4] = [AggFn::Max, AggFn::Min, AggFn::Count, AggFn::Sum];

    pub fn name(self) -> &'static str {
        match self {
            AggFn::Max => "max",
            AggFn::Min => "min",
            AggFn::Count => "count",
            AggFn::Sum => "sum",
        }
    }
}

/// Arithmetic operator position: concrete or a sketched `?+` occurrence (by id).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ArithRef {
    Op(ArithOp),
    Sketched(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CmpRef {
    Op(CmpOp),
    Sketched(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AggRef {
    Fn(AggFn),
    Sketched(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Int(i64),
    Sym(String),
    Var(String),
    Arith(Box<Term>, ArithRef, Box<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn sym(name: impl Into<String>) -> Term {
        Term::Sym(name.into())
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Int(_) | Term::Sym(_) => true,
            Term::Var(_) => false,
            Term::Arith(l, _, r) => l.is_ground() && r.is_ground(),
        }
    }

    /// Plain terms are constants and variables; arithmetic is restricted to comparisons.
    pub fn is_simple(&self) -> bool {
        !matches!(self, Term::Arith(..))
    }

    pub fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Term::Var(v) => {
                out.insert(v.as_str());
            }
            Term::Arith(l, _, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Term::Int(_) | Term::Sym(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom { predicate: predicate.into(), args }
    }

    pub fn sig(&self) -> PredSig {
        PredSig::new(self.predicate.clone(), self.args.len())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }
}

/// An atom in a body position: a real predicate or a sketched predicate variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AtomRef {
    Plain(Atom),
    Sketched { var: String, args: Vec<Term> },
}

impl AtomRef {
    pub fn args(&self) -> &[Term] {
        match self {
            AtomRef::Plain(a) => &a.args,
            AtomRef::Sketched { args, .. } => args,
        }
    }
}

/// Polarity of an atom literal. `Sketched` is a `?not` wrapper with its occurrence id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Sign {
    Pos,
    Neg,
    Sketched(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AtomLiteral {
    pub sign: Sign,
    pub atom: AtomRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Comparison {
    pub lhs: Term,
    pub op: CmpRef,
    pub rhs: Term,
}

/// `Result = #fn{ tuple : condition }`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Aggregate {
    pub result: String,
    pub func: AggRef,
    pub tuple: Vec<Term>,
    pub condition: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Atom(AtomLiteral),
    Cmp(Comparison),
    Agg(Aggregate),
}

impl Literal {
    pub fn pos(atom: Atom) -> Literal {
        Literal::Atom(AtomLiteral { sign: Sign::Pos, atom: AtomRef::Plain(atom) })
    }

    pub fn neg(atom: Atom) -> Literal {
        Literal::Atom(AtomLiteral { sign: Sign::Neg, atom: AtomRef::Plain(atom) })
    }

    pub fn cmp(lhs: Term, op: CmpOp, rhs: Term) -> Literal {
        Literal::Cmp(Comparison { lhs, op: CmpRef::Op(op), rhs })
    }

    pub fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Literal::Atom(a) => a.atom.args().iter().for_each(|t| t.collect_vars(out)),
            Literal::Cmp(c) => {
                c.lhs.collect_vars(out);
                c.rhs.collect_vars(out);
            }
            Literal::Agg(a) => {
                out.insert(a.result.as_str());
                a.tuple.iter().for_each(|t| t.collect_vars(out));
                a.condition.iter().for_each(|l| l.collect_vars(out));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChoiceElement {
    pub atom: Atom,
    pub condition: Vec<Literal>,
}

/// `lower { elements } upper`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Choice {
    pub lower: Option<u32>,
    pub upper: Option<u32>,
    pub elements: Vec<ChoiceElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Head {
    Constraint,
    Atom(Atom),
    Choice(Choice),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub head: Head,
    pub body: Vec<Literal>,
    /// 1-based source line, 0 when synthesized.
    pub line: usize,
}

impl Rule {
    pub fn new(head: Head, body: Vec<Literal>) -> Self {
        Rule { head, body, line: 0 }
    }

    pub fn fact(atom: Atom) -> Self {
        Rule::new(Head::Atom(atom), Vec::new())
    }

    pub fn is_constraint(&self) -> bool {
        matches!(self.head, Head::Constraint)
    }

    /// True when no sketched construct occurs anywhere in the rule.
    pub fn is_standard(&self) -> bool {
        fn term_ok(t: &Term) -> bool {
            match t {
                Term::Arith(l, op, r) => matches!(op, ArithRef::Op(_)) && term_ok(l) && term_ok(r),
                _ => true,
            }
        }
        fn lit_ok(l: &Literal) -> bool {
            match l {
                Literal::Atom(a) => {
                    !matches!(a.sign, Sign::Sketched(_))
                        && matches!(a.atom, AtomRef::Plain(_))
                        && a.atom.args().iter().all(term_ok)
                }
                Literal::Cmp(c) => matches!(c.op, CmpRef::Op(_)) && term_ok(&c.lhs) && term_ok(&c.rhs),
                Literal::Agg(a) => {
                    matches!(a.func, AggRef::Fn(_))
                        && a.tuple.iter().all(term_ok)
                        && a.condition.iter().all(lit_ok)
                }
            }
        }
        self.body.iter().all(lit_ok)
            && match &self.head {
                Head::Choice(c) => c.elements.iter().all(|e| e.condition.iter().all(lit_ok)),
                _ => true,
            }
    }
}
