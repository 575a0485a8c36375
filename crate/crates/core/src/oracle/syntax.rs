//! Parser for the rule language.
//!
//! ```text
//! label: head(X, Y) :- body(X, Z), not other(Z), X != Y.
//! label: level(low; medium; high).
//! ```
//!
//! Variables start with an uppercase letter or `_` (a lone `_` is
//! anonymous); constants and predicate names are lowercase, and predicate
//! names may also start with `_`. `;` pools alternatives inside a fact.
//! `%` starts a comment.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred)?;
        if !self.args.is_empty() {
            let args: Vec<String> = self.args.iter().map(Term::to_string).collect();
            write!(f, "({})", args.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Cmp(Term, CmpOp, Term),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{a}"),
            Literal::Neg(a) => write!(f, "not {a}"),
            Literal::Cmp(l, CmpOp::Eq, r) => write!(f, "{l} == {r}"),
            Literal::Cmp(l, CmpOp::Ne, r) => write!(f, "{l} != {r}"),
        }
    }
}

/// One labelled statement. A pooled fact keeps all its expansions as heads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub label: String,
    pub heads: Vec<Atom>,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    /// Leading letters of the label: `ma6` is in group `ma`.
    pub fn group(&self) -> &str {
        self.label.trim_end_matches(|c: char| c.is_ascii_digit())
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let heads: Vec<String> = self.heads.iter().map(Atom::to_string).collect();
        write!(f, "{}: {}", self.label, heads.join("; "))?;
        if !self.body.is_empty() {
            let body: Vec<String> = self.body.iter().map(Literal::to_string).collect();
            write!(f, " :- {}", body.join(", "))?;
        }
        f.write_str(".")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Name(String),
    Var(String),
    LParen,
    RParen,
    Comma,
    Semi,
    Dot,
    If,
    Colon,
    Eq,
    Ne,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut line = 1;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            '\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            '%' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '(' | ')' | ',' | ';' | '.' => {
                toks.push((
                    match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        ',' => Tok::Comma,
                        ';' => Tok::Semi,
                        _ => Tok::Dot,
                    },
                    line,
                ));
                i += 1;
            }
            ':' if bytes.get(i + 1) == Some(&b'-') => {
                toks.push((Tok::If, line));
                i += 2;
            }
            ':' => {
                toks.push((Tok::Colon, line));
                i += 1;
            }
            '=' | '!' if bytes.get(i + 1) == Some(&b'=') => {
                toks.push((if c == '=' { Tok::Eq } else { Tok::Ne }, line));
                i += 2;
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                let first = word.as_bytes()[0];
                // `_name(` is a predicate; every other `_`-word is a variable.
                let is_var = first.is_ascii_uppercase()
                    || (first == b'_' && bytes.get(i) != Some(&b'('));
                toks.push((
                    if is_var {
                        Tok::Var(word.to_owned())
                    } else {
                        Tok::Name(word.to_owned())
                    },
                    line,
                ));
            }
            other => {
                return Err(Error::Program(format!("line {line}: unexpected character `{other}`")));
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    anon: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or(self.toks.last())
            .map_or(0, |(_, l)| *l)
    }

    fn err<T>(&self, msg: impl fmt::Display) -> Result<T> {
        Err(Error::Program(format!("line {}: {msg}", self.line())))
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        match self.next() {
            Some(t) if t == tok => Ok(()),
            Some(t) => {
                self.pos -= 1;
                self.err(format!("expected {tok:?}, found {t:?}"))
            }
            None => self.err(format!("expected {tok:?} at end of input")),
        }
    }

    fn term(&mut self) -> Result<Term> {
        match self.next() {
            Some(Tok::Var(v)) if v == "_" => {
                self.anon += 1;
                Ok(Term::Var(format!("_{}", self.anon)))
            }
            Some(Tok::Var(v)) => Ok(Term::Var(v)),
            Some(Tok::Name(n)) => Ok(Term::Const(n)),
            _ => {
                self.pos -= 1;
                self.err("expected a term")
            }
        }
    }

    /// An atom whose arguments may be pools; returns every expansion.
    fn pooled_atom(&mut self) -> Result<Vec<Atom>> {
        let pred = match self.next() {
            Some(Tok::Name(n)) => n,
            _ => {
                self.pos -= 1;
                return self.err("expected a predicate name");
            }
        };
        let mut columns: Vec<Vec<Term>> = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            self.next();
            loop {
                let mut pool = vec![self.term()?];
                while self.peek() == Some(&Tok::Semi) {
                    self.next();
                    pool.push(self.term()?);
                }
                columns.push(pool);
                match self.next() {
                    Some(Tok::Comma) => continue,
                    Some(Tok::RParen) => break,
                    _ => {
                        self.pos -= 1;
                        return self.err("expected `,` or `)`");
                    }
                }
            }
        }
        let mut atoms = vec![Vec::new()];
        for pool in columns {
            atoms = atoms
                .into_iter()
                .flat_map(|prefix: Vec<Term>| {
                    pool.iter().map(move |t| {
                        let mut args = prefix.clone();
                        args.push(t.clone());
                        args
                    })
                })
                .collect();
        }
        Ok(atoms
            .into_iter()
            .map(|args| Atom {
                pred: pred.clone(),
                args,
            })
            .collect())
    }

    fn atom(&mut self) -> Result<Atom> {
        let mut atoms = self.pooled_atom()?;
        if atoms.len() != 1 {
            return self.err("`;` pools are only allowed in facts");
        }
        Ok(atoms.pop().expect("one atom"))
    }

    fn literal(&mut self) -> Result<Literal> {
        if let Some(Tok::Name(n)) = self.peek() {
            if n == "not" && matches!(self.toks.get(self.pos + 1), Some((Tok::Name(_), _))) {
                self.next();
                return Ok(Literal::Neg(self.atom()?));
            }
        }
        let is_cmp = matches!(self.toks.get(self.pos + 1), Some((Tok::Eq | Tok::Ne, _)));
        if is_cmp {
            let l = self.term()?;
            let op = match self.next() {
                Some(Tok::Eq) => CmpOp::Eq,
                _ => CmpOp::Ne,
            };
            let r = self.term()?;
            return Ok(Literal::Cmp(l, op, r));
        }
        Ok(Literal::Pos(self.atom()?))
    }

    fn rule(&mut self) -> Result<Rule> {
        let label = match (self.toks.get(self.pos), self.toks.get(self.pos + 1)) {
            (Some((Tok::Name(n), _)), Some((Tok::Colon, _))) => {
                let n = n.clone();
                self.pos += 2;
                n
            }
            _ => return self.err("every statement needs a `label:` prefix"),
        };
        let heads = self.pooled_atom()?;
        let mut body = Vec::new();
        if self.peek() == Some(&Tok::If) {
            if heads.len() != 1 {
                return self.err("`;` pools are only allowed in facts");
            }
            self.next();
            loop {
                body.push(self.literal()?);
                match self.peek() {
                    Some(Tok::Comma) => {
                        self.next();
                    }
                    _ => break,
                }
            }
        }
        self.expect(Tok::Dot)?;
        Ok(Rule { label, heads, body })
    }
}

/// Parses a rule program.
pub fn parse_program(text: &str) -> Result<Vec<Rule>> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        anon: 0,
    };
    let mut rules = Vec::new();
    while p.peek().is_some() {
        rules.push(p.rule()?);
    }
    Ok(rules)
}
