use super::ast::{AggFn, CmpOp};
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// `#inf` or `#sup`.
    Extremum(String),
    Var(String),
    /// Unsigned magnitude; range is checked once a sign is known.
    Int(u128),
    SketchName(String),
    SketchCmp,
    SketchArith,
    SketchNot,
    SketchAgg,
    AggFn(AggFn),
    Not,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Colon,
    Semi,
    If,
    Pipe,
    Cmp(CmpOp),
    Plus,
    Minus,
    Star,
    Slash,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Var(s) | Tok::Extremum(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::SketchName(s) => format!("`?{s}`"),
            Tok::SketchCmp => "`?=`".into(),
            Tok::SketchArith => "`?+`".into(),
            Tok::SketchNot => "`?not`".into(),
            Tok::SketchAgg => "`?#`".into(),
            Tok::AggFn(f) => format!("`#{}`", f.name()),
            Tok::Not => "`not`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::If => "`:-`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Cmp(op) => format!("`{}`", op.symbol()),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

/// Tokenize one source line. `%` starts a comment running to the end of the line.
pub fn lex_line(text: &str, line: usize, out: &mut Vec<Token>) -> Result<(), ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        let err = |message: String| ParseError::Syntax { line, column, message };
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '%' {
            break;
        }
        let mut push = |tok: Tok, len: usize, i: &mut usize| {
            out.push(Token { tok, line, column });
            *i += len;
        };
        let next = chars.get(i + 1).copied();
        match c {
            '(' => push(Tok::LParen, 1, &mut i),
            ')' => push(Tok::RParen, 1, &mut i),
            '{' => push(Tok::LBrace, 1, &mut i),
            '}' => push(Tok::RBrace, 1, &mut i),
            ',' => push(Tok::Comma, 1, &mut i),
            '.' => push(Tok::Dot, 1, &mut i),
            ';' => push(Tok::Semi, 1, &mut i),
            '|' => push(Tok::Pipe, 1, &mut i),
            '+' => push(Tok::Plus, 1, &mut i),
            '-' => push(Tok::Minus, 1, &mut i),
            '*' => push(Tok::Star, 1, &mut i),
            '/' => push(Tok::Slash, 1, &mut i),
            ':' if next == Some('-') => push(Tok::If, 2, &mut i),
            ':' => push(Tok::Colon, 1, &mut i),
            '=' if next == Some('=') => push(Tok::Cmp(CmpOp::Eq), 2, &mut i),
            '=' => push(Tok::Cmp(CmpOp::Eq), 1, &mut i),
            '!' if next == Some('=') => push(Tok::Cmp(CmpOp::Ne), 2, &mut i),
            '<' if next == Some('>') => push(Tok::Cmp(CmpOp::Ne), 2, &mut i),
            '<' if next == Some('=') => push(Tok::Cmp(CmpOp::Le), 2, &mut i),
            '<' => push(Tok::Cmp(CmpOp::Lt), 1, &mut i),
            '>' if next == Some('=') => push(Tok::Cmp(CmpOp::Ge), 2, &mut i),
            '>' => push(Tok::Cmp(CmpOp::Gt), 1, &mut i),
            '?' => match next {
                Some('=') => push(Tok::SketchCmp, 2, &mut i),
                Some('+') => push(Tok::SketchArith, 2, &mut i),
                Some('#') => push(Tok::SketchAgg, 2, &mut i),
                Some(n) if n.is_ascii_lowercase() => {
                    let start = i + 1;
                    let mut j = start;
                    while j < chars.len() && is_ident_char(chars[j]) {
                        j += 1;
                    }
                    let name: String = chars[start..j].iter().collect();
                    let len = j - i;
                    if name == "not" {
                        push(Tok::SketchNot, len, &mut i);
                    } else {
                        push(Tok::SketchName(name), len, &mut i);
                    }
                }
                _ => return Err(err("`?` must be followed by `=`, `+`, `#`, `not` or a lowercase name".into())),
            },
            '#' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                let word: String = chars[start..j].iter().collect();
                if word == "inf" || word == "sup" {
                    push(Tok::Extremum(format!("#{word}")), j - i, &mut i);
                    continue;
                }
                let f = match word.as_str() {
                    "count" => AggFn::Count,
                    "sum" => AggFn::Sum,
                    "min" => AggFn::Min,
                    "max" => AggFn::Max,
                    _ => return Err(err(format!("unsupported directive or aggregate `#{word}`"))),
                };
                push(Tok::AggFn(f), j - i, &mut i);
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let digits: String = chars[i..j].iter().collect();
                let value: u128 = digits
                    .parse()
                    .map_err(|_| err(format!("integer literal `{digits}` is out of range")))?;
                if value > i64::MAX as u128 + 1 {
                    return Err(err(format!("integer literal `{digits}` is out of range")));
                }
                push(Tok::Int(value), j - i, &mut i);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let tok = if c == '_' {
                    return Err(err(format!("anonymous or underscore-prefixed name `{word}` is not supported")));
                } else if word == "not" {
                    Tok::Not
                } else if c.is_ascii_uppercase() {
                    Tok::Var(word)
                } else {
                    Tok::Ident(word)
                };
                push(tok, j - i, &mut i);
            }
            other => return Err(err(format!("unexpected character `{other}`"))),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        let mut out = Vec::new();
        lex_line(s, 1, &mut out).unwrap();
        out.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn sketch_tokens() {
        assert_eq!(
            toks(":- ?p(Y), ?not ?q(Y)."),
            vec![
                Tok::If,
                Tok::SketchName("p".into()),
                Tok::LParen,
                Tok::Var("Y".into()),
                Tok::RParen,
                Tok::Comma,
                Tok::SketchNot,
                Tok::SketchName("q".into()),
                Tok::LParen,
                Tok::Var("Y".into()),
                Tok::RParen,
                Tok::Dot
            ]
        );
        assert_eq!(toks("X ?= Y ?+ Z"), vec![
            Tok::Var("X".into()),
            Tok::SketchCmp,
            Tok::Var("Y".into()),
            Tok::SketchArith,
            Tok::Var("Z".into())
        ]);
        assert_eq!(toks("S = ?#{"), vec![Tok::Var("S".into()), Tok::Cmp(CmpOp::Eq), Tok::SketchAgg, Tok::LBrace]);
        assert_eq!(toks("?nota"), vec![Tok::SketchName("nota".into())]);
    }

    #[test]
    fn comparison_spellings() {
        assert_eq!(toks("!= <> <= >= == < >"), vec![
            Tok::Cmp(CmpOp::Ne),
            Tok::Cmp(CmpOp::Ne),
            Tok::Cmp(CmpOp::Le),
            Tok::Cmp(CmpOp::Ge),
            Tok::Cmp(CmpOp::Eq),
            Tok::Cmp(CmpOp::Lt),
            Tok::Cmp(CmpOp::Gt)
        ]);
    }

    #[test]
    fn comments_and_overflow() {
        assert_eq!(toks("a. % b."), vec![Tok::Ident("a".into()), Tok::Dot]);
        let mut out = Vec::new();
        let err = lex_line("p(99999999999999999999).", 3, &mut out).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 3, column: 3, .. }), "{err:?}");
    }
}
