//! `Display` implementations. Printed rules re-parse to the same tree.

use std::fmt;

use super::ast::*;
use super::program::SketchProgram;

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(n) => write!(f, "{n}"),
            Term::Sym(s) | Term::Var(s) => f.write_str(s),
            Term::Arith(l, ArithRef::Op(ArithOp::Dist), r) => write!(f, "|{}-{}|", Operand(l), Operand(r)),
            Term::Arith(l, ArithRef::Op(op), r) => write!(f, "{}{}{}", Operand(l), op.symbol(), Operand(r)),
            Term::Arith(l, ArithRef::Sketched(_), r) => write!(f, "{} ?+ {}", Operand(l), Operand(r)),
        }
    }
}

/// Parenthesizes nested arithmetic.
struct Operand<'a>(&'a Term);

impl fmt::Display for Operand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Term::Arith(_, ArithRef::Op(ArithOp::Dist), _) => write!(f, "{}", self.0),
            Term::Arith(..) => write!(f, "({})", self.0),
            t => write!(f, "{t}"),
        }
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Term]) -> fmt::Result {
    if args.is_empty() {
        return Ok(());
    }
    f.write_str("(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{a}")?;
    }
    f.write_str(")")
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        write_args(f, &self.args)
    }
}

impl fmt::Display for AtomRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomRef::Plain(a) => write!(f, "{a}"),
            AtomRef::Sketched { var, args } => {
                f.write_str(var)?;
                write_args(f, args)
            }
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Atom(a) => match a.sign {
                Sign::Pos => write!(f, "{}", a.atom),
                Sign::Neg => write!(f, "not {}", a.atom),
                Sign::Sketched(_) => write!(f, "?not {}", a.atom),
            },
            Literal::Cmp(c) => {
                let op = match &c.op {
                    CmpRef::Op(op) => op.symbol(),
                    CmpRef::Sketched(_) => "?=",
                };
                write!(f, "{} {op} {}", c.lhs, c.rhs)
            }
            Literal::Agg(a) => {
                match &a.func {
                    AggRef::Fn(func) => write!(f, "{} = #{}{{ ", a.result, func.name())?,
                    AggRef::Sketched(_) => write!(f, "{} = ?#{{ ", a.result)?,
                }
                write_list(f, &a.tuple, ",")?;
                f.write_str(" : ")?;
                write_list(f, &a.condition, ", ")?;
                f.write_str(" }")
            }
        }
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T], sep: &str) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.lower {
            write!(f, "{l} ")?;
        }
        f.write_str("{ ")?;
        for (i, e) in self.elements.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}", e.atom)?;
            if !e.condition.is_empty() {
                f.write_str(" : ")?;
                write_list(f, &e.condition, ", ")?;
            }
        }
        f.write_str(" }")?;
        if let Some(u) = self.upper {
            write!(f, " {u}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.head {
            Head::Constraint => {}
            Head::Atom(a) => write!(f, "{a}")?,
            Head::Choice(c) => write!(f, "{c}")?,
        }
        if !self.body.is_empty() {
            if matches!(self.head, Head::Constraint) {
                f.write_str(":- ")?;
            } else {
                f.write_str(" :- ")?;
            }
            write_list(f, &self.body, ", ")?;
        }
        f.write_str(".")
    }
}

impl fmt::Display for SketchProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[SKETCH]")?;
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        if !self.declarations.is_empty() {
            writeln!(f, "[SKETCHEDVAR]")?;
            for d in &self.declarations {
                writeln!(f, "?{}/{} : {}", d.name, d.arity, d.candidates.join(", "))?;
            }
        }
        if !self.facts.is_empty() {
            writeln!(f, "[FACTS]")?;
            for a in &self.facts {
                writeln!(f, "{a}.")?;
            }
        }
        if !self.examples.is_empty() {
            writeln!(f, "[EXAMPLES]")?;
            for (label, set) in [("positive", &self.examples.positives), ("negative", &self.examples.negatives)] {
                for e in set {
                    write!(f, "{label}:")?;
                    for a in &e.atoms {
                        write!(f, " {a}.")?;
                    }
                    writeln!(f)?;
                }
            }
        }
        if !self.preferences.is_empty() {
            writeln!(f, "[PREFERENCES]")?;
            for p in &self.preferences {
                let values: Vec<String> = p.values.iter().map(|(c, v)| format!("{c}={v}")).collect();
                writeln!(f, "{} : {}", p.target, values.join(", "))?;
            }
        }
        Ok(())
    }
}
