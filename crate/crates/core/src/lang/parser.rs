//! Recursive-descent parser for the sketch format and for plain ASP programs.

use std::collections::BTreeMap;

use super::ast::*;
use super::lexer::{lex_line, Tok, Token};
use super::program::*;
use super::ParseError;

const SECTIONS: [&str; 5] = ["SKETCH", "SKETCHEDVAR", "FACTS", "EXAMPLES", "PREFERENCES"];

type Result<T> = std::result::Result<T, ParseError>;

/// Parse a sketch file. Syntax and declaration checks only; see [`super::validate`].
pub fn parse_sketch(text: &str) -> Result<SketchProgram> {
    let mut sections: BTreeMap<&'static str, Vec<(usize, &str)>> = BTreeMap::new();
    let mut current: Option<&'static str> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('%').next().unwrap_or("").trim();
        if content.starts_with('[') && content.ends_with(']') {
            let name = content[1..content.len() - 1].trim();
            match SECTIONS.iter().find(|s| **s == name) {
                Some(s) => current = Some(s),
                None => return Err(ParseError::UnknownSection { line: line_no, name: name.to_string() }),
            }
            continue;
        }
        if content.is_empty() {
            continue;
        }
        match current {
            Some(s) => sections.entry(s).or_default().push((line_no, raw)),
            None => {
                return Err(ParseError::Syntax {
                    line: line_no,
                    column: 1,
                    message: "text outside of any [SECTION]".into(),
                })
            }
        }
    }

    let mut program = SketchProgram::default();
    let mut uses = Vec::new();

    if let Some(lines) = sections.get("SKETCHEDVAR") {
        for &(line, raw) in lines {
            let decl = parse_declaration(line, raw)?;
            if program.declaration(&decl.name).is_some() {
                return Err(ParseError::DuplicateDeclaration { line, name: decl.name });
            }
            program.declarations.push(decl);
        }
    }
    if let Some(lines) = sections.get("SKETCH") {
        let mut p = Parser::new(lex_lines(lines)?, Mode::Sketch);
        while !p.at_end() {
            let rule = p.rule(program.rules.len() + 1)?;
            program.rules.push(rule);
        }
        uses = p.sketch_uses;
    }
    if let Some(lines) = sections.get("FACTS") {
        let mut p = Parser::new(lex_lines(lines)?, Mode::Standard);
        while !p.at_end() {
            let (line, column) = p.location();
            let atom = p.plain_atom()?;
            p.expect(&Tok::Dot)?;
            if !atom.is_ground() {
                return Err(ParseError::Syntax { line, column, message: format!("fact `{atom}` is not ground") });
            }
            program.facts.push(atom);
        }
    }
    if let Some(lines) = sections.get("EXAMPLES") {
        let mut p = Parser::new(lex_lines(lines)?, Mode::Standard);
        p.examples(&mut program.examples)?;
    }
    if let Some(lines) = sections.get("PREFERENCES") {
        for &(line, raw) in lines {
            program.preferences.push(parse_preference_line(line, raw)?);
        }
    }

    for (name, arity, line, column) in uses {
        match program.declaration(&name) {
            None => return Err(ParseError::UndeclaredSketchVar { line, column, name }),
            Some(d) if d.arity != arity => {
                return Err(ParseError::ArityMismatch { line, column, name, expected: d.arity, found: arity })
            }
            Some(_) => {}
        }
    }
    Ok(program)
}

/// Parse a plain (sketch-free) ASP program: facts, normal rules, constraints and
/// cardinality choice rules.
pub fn parse_program(text: &str) -> Result<Vec<Rule>> {
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l)).collect();
    let mut p = Parser::new(lex_lines(&lines)?, Mode::Standard);
    let mut rules = Vec::new();
    while !p.at_end() {
        rules.push(p.rule(rules.len() + 1)?);
    }
    Ok(rules)
}

/// Parse whitespace-separated ground atoms, as printed by a solver for one model.
pub fn parse_ground_atoms(text: &str) -> Result<Vec<Atom>> {
    let mut tokens = Vec::new();
    lex_line(text, 1, &mut tokens)?;
    let mut p = Parser::new(tokens, Mode::Standard);
    let mut atoms = Vec::new();
    while !p.at_end() {
        let (line, column) = p.location();
        let atom = p.plain_atom()?;
        if !atom.is_ground() {
            return Err(ParseError::Syntax { line, column, message: format!("`{atom}` is not ground") });
        }
        atoms.push(atom);
    }
    Ok(atoms)
}

/// Parse the body of a `[PREFERENCES]` section (the header line is optional).
pub fn parse_preferences(text: &str) -> Result<Vec<PreferenceEntry>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('%').next().unwrap_or("").trim();
        if content.is_empty() || content == "[PREFERENCES]" {
            continue;
        }
        out.push(parse_preference_line(idx + 1, raw)?);
    }
    Ok(out)
}

fn parse_preference_line(line: usize, raw: &str) -> Result<PreferenceEntry> {
    let content = raw.split('%').next().unwrap_or("").trim();
    let err = |message: String| ParseError::Syntax { line, column: 1, message };
    let (target, values) =
        content.split_once(" :").or_else(|| content.split_once(':')).ok_or_else(|| err("expected `?var : candidate=int, ...`".into()))?;
    let target = target.trim();
    if !target.starts_with('?') {
        return Err(err(format!("preference target `{target}` must start with `?`")));
    }
    let mut entries = Vec::new();
    for item in values.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (name, value) = item.rsplit_once('=').ok_or_else(|| err(format!("expected `candidate=int`, found `{item}`")))?;
        let name = name.trim();
        let value: i64 = value.trim().parse().map_err(|_| err(format!("`{}` is not an integer", value.trim())))?;
        if name.is_empty() {
            return Err(err(format!("missing candidate in `{item}`")));
        }
        entries.push((name.to_string(), value));
    }
    Ok(PreferenceEntry { target: target.to_string(), values: entries, line })
}

fn parse_declaration(line: usize, raw: &str) -> Result<PredicateDecl> {
    let mut tokens = Vec::new();
    lex_line(raw, line, &mut tokens)?;
    let mut p = Parser::new(tokens, Mode::Standard);
    let (l, c) = p.location();
    let name = match p.next() {
        Some(Tok::SketchName(n)) => n,
        _ => return Err(ParseError::Syntax { line: l, column: c, message: "expected `?name/arity : candidates`".into() }),
    };
    p.expect(&Tok::Slash)?;
    let arity = match p.next() {
        Some(Tok::Int(n)) => n as usize,
        _ => return Err(p.error_here("expected an arity")),
    };
    p.expect(&Tok::Colon)?;
    let mut candidates = Vec::new();
    loop {
        match p.next() {
            Some(Tok::Ident(c)) => candidates.push(c),
            _ => return Err(p.error_prev("expected a predicate name")),
        }
        if p.at_end() {
            break;
        }
        p.expect(&Tok::Comma)?;
    }
    Ok(PredicateDecl { name, arity, candidates, line })
}

fn lex_lines(lines: &[(usize, &str)]) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    for &(line, raw) in lines {
        lex_line(raw, line, &mut tokens)?;
    }
    Ok(tokens)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Sketch,
    Standard,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    mode: Mode,
    rule_index: usize,
    occurrence: usize,
    /// Sketched predicate uses: (name, arity, line, column).
    sketch_uses: Vec<(String, usize, usize, usize)>,
}

impl Parser {
    fn new(tokens: Vec<Token>, mode: Mode) -> Self {
        Parser { tokens, pos: 0, mode, rule_index: 0, occurrence: 0, sketch_uses: Vec::new() }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + offset).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn location(&self) -> (usize, usize) {
        match self.tokens.get(self.pos) {
            Some(t) => (t.line, t.column),
            None => self.tokens.last().map(|t| (t.line, t.column + 1)).unwrap_or((1, 1)),
        }
    }

    fn error_here(&self, message: &str) -> ParseError {
        let (line, column) = self.location();
        let found = match self.peek() {
            Some(t) => t.describe(),
            None => "end of section".into(),
        };
        ParseError::Syntax { line, column, message: format!("{message}, found {found}") }
    }

    fn error_prev(&self, message: &str) -> ParseError {
        let t = &self.tokens[self.pos.saturating_sub(1).min(self.tokens.len().saturating_sub(1))];
        ParseError::Syntax { line: t.line, column: t.column, message: format!("{message}, found {}", t.tok.describe()) }
    }

    fn expect(&mut self, tok: &Tok) -> Result<()> {
        if self.peek() == Some(tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error_here(&format!("expected {}", tok.describe())))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sketched_token(&mut self, kind: SketchKind) -> Result<String> {
        if self.mode != Mode::Sketch {
            return Err(self.error_here("sketched constructs are only allowed in [SKETCH]"));
        }
        self.pos += 1;
        let id = format!("{}@{}.{}", kind.token(), self.rule_index, self.occurrence);
        self.occurrence += 1;
        Ok(id)
    }

    fn rule(&mut self, index: usize) -> Result<Rule> {
        self.rule_index = index;
        self.occurrence = 0;
        let (line, _) = self.location();
        let head = if self.peek() == Some(&Tok::If) {
            Head::Constraint
        } else {
            self.head()?
        };
        let body = if self.eat(&Tok::If) { self.body()? } else { Vec::new() };
        if matches!(head, Head::Constraint) && body.is_empty() {
            return Err(self.error_here("an integrity constraint needs a body"));
        }
        self.expect(&Tok::Dot)?;
        Ok(Rule { head, body, line })
    }

    fn head(&mut self) -> Result<Head> {
        match self.peek() {
            Some(Tok::Int(_)) | Some(Tok::LBrace) => {
                if self.mode == Mode::Sketch {
                    return Err(self.error_here("choice rules are not allowed in sketches"));
                }
                Ok(Head::Choice(self.choice()?))
            }
            Some(Tok::SketchName(_)) => Err(self.error_here("sketched atoms are not allowed in rule heads")),
            Some(Tok::Ident(_)) => {
                let atom = self.plain_atom()?;
                if self.peek() == Some(&Tok::Semi) {
                    return Err(self.error_here("disjunctive heads are not supported"));
                }
                Ok(Head::Atom(atom))
            }
            _ => Err(self.error_here("expected a rule head or `:-`")),
        }
    }

    fn choice(&mut self) -> Result<Choice> {
        let lower = match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Some(u32::try_from(n).map_err(|_| self.error_prev("bound out of range"))?)
            }
            _ => None,
        };
        self.expect(&Tok::LBrace)?;
        let mut elements = Vec::new();
        if self.peek() != Some(&Tok::RBrace) {
            loop {
                let atom = self.plain_atom()?;
                let mut condition = Vec::new();
                if self.eat(&Tok::Colon) {
                    loop {
                        condition.push(self.literal()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                elements.push(ChoiceElement { atom, condition });
                if !self.eat(&Tok::Semi) {
                    break;
                }
            }
        }
        self.expect(&Tok::RBrace)?;
        let upper = match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Some(u32::try_from(n).map_err(|_| self.error_prev("bound out of range"))?)
            }
            _ => None,
        };
        Ok(Choice { lower, upper, elements })
    }

    fn body(&mut self) -> Result<Vec<Literal>> {
        let mut body = vec![self.literal()?];
        while self.eat(&Tok::Comma) {
            body.push(self.literal()?);
        }
        Ok(body)
    }

    fn literal(&mut self) -> Result<Literal> {
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                let atom = self.atom_ref()?;
                Ok(Literal::Atom(AtomLiteral { sign: Sign::Neg, atom }))
            }
            Some(Tok::SketchNot) => {
                let id = self.sketched_token(SketchKind::Negation)?;
                if self.peek() == Some(&Tok::Not) {
                    return Err(self.error_here("`?not` must wrap a positive atom"));
                }
                let atom = self.atom_ref()?;
                Ok(Literal::Atom(AtomLiteral { sign: Sign::Sketched(id), atom }))
            }
            Some(Tok::SketchName(_)) => {
                let atom = self.atom_ref()?;
                Ok(Literal::Atom(AtomLiteral { sign: Sign::Pos, atom }))
            }
            Some(Tok::Ident(name)) if !self.starts_term_expression(name) => {
                let atom = self.atom_ref()?;
                if self.peek_is_operator() {
                    return Err(self.error_here("function terms are not supported"));
                }
                Ok(Literal::Atom(AtomLiteral { sign: Sign::Pos, atom }))
            }
            Some(Tok::Var(_))
                if self.peek_at(1) == Some(&Tok::Cmp(CmpOp::Eq))
                    && matches!(self.peek_at(2), Some(Tok::AggFn(_)) | Some(Tok::SketchAgg)) =>
            {
                self.aggregate()
            }
            _ => {
                let lhs = self.expr()?;
                let op = match self.peek() {
                    Some(Tok::Cmp(op)) => {
                        let op = *op;
                        self.pos += 1;
                        CmpRef::Op(op)
                    }
                    Some(Tok::SketchCmp) => CmpRef::Sketched(self.sketched_token(SketchKind::Comparison)?),
                    _ => return Err(self.error_here("expected a comparison operator")),
                };
                let rhs = self.expr()?;
                Ok(Literal::Cmp(Comparison { lhs, op, rhs }))
            }
        }
    }

    /// An identifier starts an expression (not an atom) when used as a constant operand.
    fn starts_term_expression(&self, name: &str) -> bool {
        match self.peek_at(1) {
            Some(Tok::LParen) => name == "dist",
            Some(t) => is_operator(t),
            None => false,
        }
    }

    fn peek_is_operator(&self) -> bool {
        self.peek().is_some_and(is_operator)
    }

    fn aggregate(&mut self) -> Result<Literal> {
        let result = match self.next() {
            Some(Tok::Var(v)) => v,
            _ => return Err(self.error_prev("expected aggregate result variable")),
        };
        self.expect(&Tok::Cmp(CmpOp::Eq))?;
        let func = match self.peek() {
            Some(Tok::AggFn(f)) => {
                let f = *f;
                self.pos += 1;
                AggRef::Fn(f)
            }
            Some(Tok::SketchAgg) => AggRef::Sketched(self.sketched_token(SketchKind::Aggregate)?),
            _ => return Err(self.error_here("expected an aggregate function")),
        };
        self.expect(&Tok::LBrace)?;
        let mut tuple = vec![self.simple_term()?];
        while self.eat(&Tok::Comma) {
            tuple.push(self.simple_term()?);
        }
        self.expect(&Tok::Colon)?;
        let mut condition = vec![self.literal()?];
        while self.eat(&Tok::Comma) {
            condition.push(self.literal()?);
        }
        if self.peek() == Some(&Tok::Semi) {
            return Err(self.error_here("aggregates with several elements are not supported"));
        }
        self.expect(&Tok::RBrace)?;
        Ok(Literal::Agg(Aggregate { result, func, tuple, condition }))
    }

    fn atom_ref(&mut self) -> Result<AtomRef> {
        match self.peek() {
            Some(Tok::SketchName(name)) => {
                if self.mode != Mode::Sketch {
                    return Err(self.error_here("sketched constructs are only allowed in [SKETCH]"));
                }
                let name = name.clone();
                let (line, column) = self.location();
                self.pos += 1;
                let args = self.arguments()?;
                self.sketch_uses.push((name.clone(), args.len(), line, column));
                Ok(AtomRef::Sketched { var: format!("?{name}"), args })
            }
            Some(Tok::Ident(_)) => Ok(AtomRef::Plain(self.plain_atom()?)),
            _ => Err(self.error_here("expected an atom")),
        }
    }

    fn plain_atom(&mut self) -> Result<Atom> {
        let predicate = match self.peek() {
            Some(Tok::Ident(name)) => name.clone(),
            _ => return Err(self.error_here("expected an atom")),
        };
        self.pos += 1;
        let args = self.arguments()?;
        Ok(Atom { predicate, args })
    }

    fn arguments(&mut self) -> Result<Vec<Term>> {
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            args.push(self.simple_term()?);
            while self.eat(&Tok::Comma) {
                args.push(self.simple_term()?);
            }
            self.expect(&Tok::RParen)?;
        }
        Ok(args)
    }

    fn simple_term(&mut self) -> Result<Term> {
        let (line, column) = self.location();
        let t = self.expr()?;
        if t.is_simple() {
            Ok(t)
        } else {
            Err(ParseError::Syntax { line, column, message: "arithmetic is only allowed in comparisons".into() })
        }
    }

    fn expr(&mut self) -> Result<Term> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => ArithRef::Op(ArithOp::Add),
                Some(Tok::Minus) => ArithRef::Op(ArithOp::Sub),
                Some(Tok::SketchArith) => {
                    let id = self.sketched_token(SketchKind::Arithmetic)?;
                    let rhs = self.product()?;
                    lhs = Term::Arith(Box::new(lhs), ArithRef::Sketched(id), Box::new(rhs));
                    continue;
                }
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Term::Arith(Box::new(lhs), op, Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Term> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => ArithOp::Mul,
                Some(Tok::Slash) => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Term::Arith(Box::new(lhs), ArithRef::Op(op), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Term> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            if let Some(Tok::Int(n)) = self.peek() {
                let n = *n;
                self.pos += 1;
                return i64::try_from(-(n as i128)).map(Term::Int).map_err(|_| self.error_prev("integer literal out of range"));
            }
            let inner = self.unary()?;
            return Ok(Term::Arith(Box::new(Term::Int(0)), ArithRef::Op(ArithOp::Sub), Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Term> {
        match self.next() {
            Some(Tok::Int(n)) => i64::try_from(n).map(Term::Int).map_err(|_| self.error_prev("integer literal out of range")),
            Some(Tok::Var(v)) => Ok(Term::Var(v)),
            Some(Tok::Extremum(name)) => Ok(Term::Sym(name)),
            Some(Tok::Ident(name)) if name == "dist" && self.peek() == Some(&Tok::LParen) => {
                self.pos += 1;
                let a = self.expr()?;
                self.expect(&Tok::Comma)?;
                let b = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(Term::Arith(Box::new(a), ArithRef::Op(ArithOp::Dist), Box::new(b)))
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    return Err(self.error_here("function terms are not supported"));
                }
                Ok(Term::Sym(name))
            }
            Some(Tok::LParen) => {
                let t = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            Some(Tok::Pipe) => {
                let t = self.expr()?;
                self.expect(&Tok::Pipe)?;
                match t {
                    Term::Arith(l, ArithRef::Op(ArithOp::Sub), r) => Ok(Term::Arith(l, ArithRef::Op(ArithOp::Dist), r)),
                    _ => Err(self.error_prev("only `|A-B|` absolute differences are supported")),
                }
            }
            Some(_) => Err(self.error_prev("expected a term")),
            None => Err(self.error_here("expected a term")),
        }
    }

    fn examples(&mut self, out: &mut ExampleSet) -> Result<()> {
        while !self.at_end() {
            let (line, _) = self.location();
            let positive = match (self.peek(), self.peek_at(1)) {
                (Some(Tok::Ident(l)), Some(Tok::Colon)) if l == "positive" => true,
                (Some(Tok::Ident(l)), Some(Tok::Colon)) if l == "negative" => false,
                _ => return Err(self.error_here("expected `positive:` or `negative:`")),
            };
            self.pos += 2;
            let mut example = Example { atoms: Vec::new(), line };
            while !self.at_end() && !self.at_example_label() {
                example.atoms.push(self.plain_atom()?);
                self.expect(&Tok::Dot)?;
            }
            if positive {
                out.positives.push(example);
            } else {
                out.negatives.push(example);
            }
        }
        Ok(())
    }

    fn at_example_label(&self) -> bool {
        matches!((self.peek(), self.peek_at(1)), (Some(Tok::Ident(l)), Some(Tok::Colon)) if l == "positive" || l == "negative")
    }
}

fn is_operator(t: &Tok) -> bool {
    matches!(t, Tok::Cmp(_) | Tok::SketchCmp | Tok::SketchArith | Tok::Plus | Tok::Minus | Tok::Star | Tok::Slash)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_constraint_with_sketches() {
        let p = parse_sketch("[SKETCH]\n:- ?p(Y), ?not ?q(Y).\n[SKETCHEDVAR]\n?p/1 : node, reached\n?q/1 : node, reached\n").unwrap();
        assert_eq!(p.rules.len(), 1);
        let rule = &p.rules[0];
        assert!(rule.is_constraint());
        assert_eq!(rule.line, 2);
        match &rule.body[1] {
            Literal::Atom(AtomLiteral { sign: Sign::Sketched(id), atom: AtomRef::Sketched { var, .. } }) => {
                assert_eq!(id, "?not@1.0");
                assert_eq!(var, "?q");
            }
            other => panic!("unexpected literal {other:?}"),
        }
    }

    #[test]
    fn operator_ids_follow_text_order() {
        let p = parse_sketch("[SKETCH]\n:- queen(w,Rw,Cw), queen(b,Rb,Cb), Rw ?+ Rb ?= Cw ?+ Cb.\n").unwrap();
        let Literal::Cmp(c) = &p.rules[0].body[2] else { panic!() };
        assert_eq!(c.op, CmpRef::Sketched("?=@1.1".into()));
        let Term::Arith(_, ArithRef::Sketched(l), _) = &c.lhs else { panic!() };
        let Term::Arith(_, ArithRef::Sketched(r), _) = &c.rhs else { panic!() };
        assert_eq!((l.as_str(), r.as_str()), ("?+@1.0", "?+@1.2"));
    }

    #[test]
    fn aggregates_and_arithmetic() {
        let p = parse_sketch(
            "[SKETCH]\nn(N) :- N = ?#{ P : p(P) }.\n:- c(C), p(C), n(N), S = #count{P : k(P,C), p(P)}, S < N-1.\n",
        )
        .unwrap();
        let Literal::Agg(a) = &p.rules[0].body[0] else { panic!() };
        assert_eq!(a.func, AggRef::Sketched("?#@1.0".into()));
        let Literal::Cmp(c) = &p.rules[1].body[4] else { panic!() };
        assert_eq!(c.rhs, Term::Arith(Box::new(Term::var("N")), ArithRef::Op(ArithOp::Sub), Box::new(Term::Int(1))));
    }

    #[test]
    fn abs_difference_and_dist_call() {
        let rules = parse_program("q(Z) :- p(X), p(Y), Z = |X-Y|.\nr(Z) :- Z = dist(1,4), p(1).").unwrap();
        let Literal::Cmp(c) = &rules[0].body[2] else { panic!() };
        assert!(matches!(&c.rhs, Term::Arith(_, ArithRef::Op(ArithOp::Dist), _)));
        let Literal::Cmp(c) = &rules[1].body[0] else { panic!() };
        assert!(matches!(&c.rhs, Term::Arith(_, ArithRef::Op(ArithOp::Dist), _)));
    }

    #[test]
    fn choice_rules_only_outside_sketches() {
        let rules = parse_program("1 { cell(X,Y,N) : num(N) } 1 :- row(X), col(Y).\n1 { a ; b } 1.").unwrap();
        assert!(matches!(&rules[0].head, Head::Choice(c) if c.lower == Some(1) && c.elements.len() == 1));
        assert!(matches!(&rules[1].head, Head::Choice(c) if c.elements.len() == 2));
        let err = parse_sketch("[SKETCH]\n1 { a ; b } 1.").unwrap_err();
        assert!(err.to_string().contains("choice rules"), "{err}");
    }

    #[test]
    fn errors_carry_locations() {
        let err = parse_sketch("[SKETCH]\np(X) :- q(X)\nr.").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 3, column: 1, .. }), "{err:?}");
        assert!(matches!(parse_sketch("[BOGUS]\n"), Err(ParseError::UnknownSection { line: 1, .. })));
        let dup = parse_sketch("[SKETCHEDVAR]\n?p/1 : a\n?p/1 : b\n").unwrap_err();
        assert!(matches!(dup, ParseError::DuplicateDeclaration { line: 3, .. }));
        let arity = parse_sketch("[SKETCH]\n:- ?p(X,Y), q(X,Y).\n[SKETCHEDVAR]\n?p/1 : a\n").unwrap_err();
        assert!(matches!(arity, ParseError::ArityMismatch { expected: 1, found: 2, line: 2, column: 4, .. }), "{arity:?}");
        let undeclared = parse_sketch("[SKETCH]\n:- ?p(X), q(X).\n").unwrap_err();
        assert!(matches!(undeclared, ParseError::UndeclaredSketchVar { .. }));
        assert!(parse_sketch("[SKETCH]\np(X) :- q(X), ?not not r(X).\n").is_err());
        assert!(parse_sketch("[SKETCH]\n?p(X) :- q(X).\n[SKETCHEDVAR]\n?p/1 : r\n").is_err());
    }

    #[test]
    fn sections_repeat_and_reorder() {
        let p = parse_sketch(
            "[EXAMPLES]\npositive: a(1). a(2).\n[FACTS]\nb(1).\n[EXAMPLES]\nnegative: a(3).\npositive:\n  a(4).\n",
        )
        .unwrap();
        assert_eq!(p.examples.positives.len(), 2);
        assert_eq!(p.examples.negatives.len(), 1);
        assert_eq!(p.examples.positives[0].atoms.len(), 2);
        assert_eq!(p.facts.len(), 1);
    }

    #[test]
    fn preference_lines() {
        let entries = parse_preferences("?p : node=2, reached = -1\n?=@1.0 : != = 1, >= = 0\n").unwrap();
        assert_eq!(entries[0].values, vec![("node".to_string(), 2), ("reached".to_string(), -1)]);
        assert_eq!(entries[1].target, "?=@1.0");
        assert_eq!(entries[1].values, vec![("!=".to_string(), 1), (">=".to_string(), 0)]);
    }

    #[test]
    fn negative_integers() {
        let rules = parse_program("p(-3). q(X) :- p(X), X > -9223372036854775808.").unwrap();
        assert_eq!(rules[0].head, Head::Atom(Atom::new("p", vec![Term::Int(-3)])));
        assert!(parse_program("p(9223372036854775808).").is_err());
    }
}
