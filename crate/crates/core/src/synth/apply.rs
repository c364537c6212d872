//! Turning a sketch plus a substitution into a standard program.

use std::collections::HashMap;

use crate::lang::{
    Aggregate, AggRef, ArithRef, Atom, AtomLiteral, AtomRef, Candidate, CmpRef, Comparison, Head, Literal, Rule,
    Sign, SketchProgram, SketchVar, Term,
};

use super::{Substitution, SynthError};

struct Lookup<'a> {
    by_id: HashMap<&'a str, &'a Candidate>,
}

impl<'a> Lookup<'a> {
    fn new(vars: &'a [SketchVar], theta: &Substitution) -> Result<Self, SynthError> {
        if theta.choices.len() != vars.len() {
            return Err(SynthError::NotTotal(format!(
                "{} values for {} sketched variables",
                theta.choices.len(),
                vars.len()
            )));
        }
        let mut by_id = HashMap::new();
        for (v, &c) in vars.iter().zip(&theta.choices) {
            let cand = v.domain.get(c).ok_or_else(|| SynthError::NotTotal(format!("{} has no candidate #{c}", v.id)))?;
            by_id.insert(v.id.as_str(), cand);
        }
        Ok(Lookup { by_id })
    }

    fn get(&self, id: &str) -> Result<&'a Candidate, SynthError> {
        self.by_id.get(id).copied().ok_or_else(|| SynthError::NotTotal(format!("no value for {id}")))
    }

    fn term(&self, t: &Term) -> Result<Term, SynthError> {
        Ok(match t {
            Term::Arith(l, op, r) => {
                let op = match op {
                    ArithRef::Op(o) => ArithRef::Op(*o),
                    ArithRef::Sketched(id) => match self.get(id)? {
                        Candidate::Arith(o) => ArithRef::Op(*o),
                        c => return Err(mismatch(id, c)),
                    },
                };
                Term::Arith(Box::new(self.term(l)?), op, Box::new(self.term(r)?))
            }
            other => other.clone(),
        })
    }

    /// `None` when the literal disappears (a comparison resolved to the always-true candidate).
    fn literal(&self, l: &Literal) -> Result<Option<Literal>, SynthError> {
        Ok(Some(match l {
            Literal::Atom(AtomLiteral { sign, atom }) => {
                let sign = match sign {
                    Sign::Sketched(id) => match self.get(id)? {
                        Candidate::Pos => Sign::Pos,
                        Candidate::Neg => Sign::Neg,
                        c => return Err(mismatch(id, c)),
                    },
                    s => s.clone(),
                };
                let atom = match atom {
                    AtomRef::Plain(a) => Atom::new(a.predicate.clone(), a.args.iter().map(|t| self.term(t)).collect::<Result<_, _>>()?),
                    AtomRef::Sketched { var, args } => match self.get(var)? {
                        Candidate::Pred(p) => Atom::new(p.clone(), args.iter().map(|t| self.term(t)).collect::<Result<_, _>>()?),
                        c => return Err(mismatch(var, c)),
                    },
                };
                Literal::Atom(AtomLiteral { sign, atom: AtomRef::Plain(atom) })
            }
            Literal::Cmp(c) => {
                let op = match &c.op {
                    CmpRef::Op(o) => CmpRef::Op(*o),
                    CmpRef::Sketched(id) => match self.get(id)? {
                        Candidate::Cmp(o) => CmpRef::Op(*o),
                        Candidate::Top => return Ok(None),
                        other => return Err(mismatch(id, other)),
                    },
                };
                Literal::Cmp(Comparison { lhs: self.term(&c.lhs)?, op, rhs: self.term(&c.rhs)? })
            }
            Literal::Agg(a) => {
                let func = match &a.func {
                    AggRef::Fn(f) => AggRef::Fn(*f),
                    AggRef::Sketched(id) => match self.get(id)? {
                        Candidate::Agg(f) => AggRef::Fn(*f),
                        c => return Err(mismatch(id, c)),
                    },
                };
                Literal::Agg(Aggregate {
                    result: a.result.clone(),
                    func,
                    tuple: a.tuple.iter().map(|t| self.term(t)).collect::<Result<_, _>>()?,
                    condition: self.body(&a.condition)?,
                })
            }
        }))
    }

    fn body(&self, lits: &[Literal]) -> Result<Vec<Literal>, SynthError> {
        let mut out = Vec::with_capacity(lits.len());
        for l in lits {
            if let Some(l) = self.literal(l)? {
                out.push(l);
            }
        }
        Ok(out)
    }
}

fn mismatch(id: &str, c: &Candidate) -> SynthError {
    SynthError::NotTotal(format!("candidate {c} does not fit {id}"))
}

/// The rules of the sketch with every sketched construct resolved.
pub fn instantiate(program: &SketchProgram, vars: &[SketchVar], theta: &Substitution) -> Result<Vec<Rule>, SynthError> {
    let lookup = Lookup::new(vars, theta)?;
    program
        .rules
        .iter()
        .map(|r| {
            let head = match &r.head {
                Head::Atom(a) => Head::Atom(Atom::new(a.predicate.clone(), a.args.iter().map(|t| lookup.term(t)).collect::<Result<_, _>>()?)),
                h => h.clone(),
            };
            Ok(Rule { head, body: lookup.body(&r.body)?, line: r.line })
        })
        .collect()
}

/// The completed program as text, one rule per line.
pub fn apply_substitution(program: &SketchProgram, vars: &[SketchVar], theta: &Substitution) -> Result<String, SynthError> {
    let mut out = String::new();
    for r in instantiate(program, vars, theta)? {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    Ok(out)
}
