//! Fact ingestion and the indexed knowledge store.
//!
//! A knowledge base is a set of `has(subject, slot, value).` statements. The
//! store keeps set semantics over the `(subject, slot, value)` triple; the
//! provenance recorded for a triple is the one from its first insertion.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::ident::{self, Ident};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Asserted { file: String, line: usize },
    Derived { rule: String },
}

impl Provenance {
    pub fn derived(rule: &str) -> Self {
        Provenance::Derived {
            rule: rule.to_owned(),
        }
    }

    pub fn is_derived(&self) -> bool {
        matches!(self, Provenance::Derived { .. })
    }

    pub fn rule(&self) -> Option<&str> {
        match self {
            Provenance::Derived { rule } => Some(rule),
            Provenance::Asserted { .. } => None,
        }
    }
}

/// `(subject, slot, value)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: Ident,
    pub slot: Ident,
    pub value: Ident,
}

impl Triple {
    pub fn new(subject: Ident, slot: Ident, value: Ident) -> Self {
        Triple {
            subject,
            slot,
            value,
        }
    }

    /// Convenience constructor from literals; panics on malformed identifiers.
    pub fn of(subject: &str, slot: &str, value: &str) -> Self {
        Triple::new(ident::id(subject), ident::id(slot), ident::id(value))
    }
}

impl std::fmt::Display for Triple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "has({}, {}, {})", self.subject, self.slot, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    pub subject: Ident,
    pub slot: Ident,
    pub value: Ident,
    pub provenance: Provenance,
}

impl Fact {
    pub fn triple(&self) -> Triple {
        Triple::new(
            self.subject.clone(),
            self.slot.clone(),
            self.value.clone(),
        )
    }
}

/// A query pattern; `None` positions are wildcards.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Pattern<'a> {
    pub subject: Option<&'a str>,
    pub slot: Option<&'a str>,
    pub value: Option<&'a str>,
}

impl<'a> Pattern<'a> {
    pub fn any() -> Self {
        Pattern::default()
    }

    pub fn new(subject: Option<&'a str>, slot: Option<&'a str>, value: Option<&'a str>) -> Self {
        Pattern {
            subject,
            slot,
            value,
        }
    }

    pub fn subject(mut self, subject: &'a str) -> Self {
        self.subject = Some(subject);
        self
    }

    pub fn slot(mut self, slot: &'a str) -> Self {
        self.slot = Some(slot);
        self
    }

    pub fn value(mut self, value: &'a str) -> Self {
        self.value = Some(value);
        self
    }

    fn matches(&self, t: &Triple) -> bool {
        self.subject.is_none_or(|s| t.subject == s)
            && self.slot.is_none_or(|s| t.slot == s)
            && self.value.is_none_or(|v| t.value == v)
    }
}

type Index = BTreeMap<Ident, BTreeSet<Triple>>;

#[derive(Debug, Clone, Default)]
pub struct KnowledgeStore {
    facts: BTreeMap<Triple, Provenance>,
    by_subject: Index,
    by_slot: Index,
    by_value: Index,
    by_subject_slot: BTreeMap<(Ident, Ident), BTreeSet<Triple>>,
}

impl PartialEq for KnowledgeStore {
    /// Stores are equal when they hold the same triples, whatever their provenance.
    fn eq(&self, other: &Self) -> bool {
        self.facts.keys().eq(other.facts.keys())
    }
}

impl Eq for KnowledgeStore {}

impl KnowledgeStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.facts.contains_key(triple)
    }

    pub fn has(&self, subject: &str, slot: &str, value: &str) -> bool {
        !self
            .matching(Pattern::new(Some(subject), Some(slot), Some(value)))
            .is_empty()
    }

    pub fn provenance(&self, triple: &Triple) -> Option<&Provenance> {
        self.facts.get(triple)
    }

    /// Inserts a triple; returns `true` when the store grew.
    pub fn insert(&mut self, triple: Triple, provenance: Provenance) -> bool {
        if self.facts.contains_key(&triple) {
            return false;
        }
        self.by_subject
            .entry(triple.subject.clone())
            .or_default()
            .insert(triple.clone());
        self.by_slot
            .entry(triple.slot.clone())
            .or_default()
            .insert(triple.clone());
        self.by_value
            .entry(triple.value.clone())
            .or_default()
            .insert(triple.clone());
        self.by_subject_slot
            .entry((triple.subject.clone(), triple.slot.clone()))
            .or_default()
            .insert(triple.clone());
        self.facts.insert(triple, provenance);
        true
    }

    /// Adds a rule-derived fact. A triple already present (asserted or
    /// derived) leaves the store unchanged.
    pub fn add_derived(&mut self, triple: Triple, rule_id: &str) -> bool {
        self.insert(triple, Provenance::derived(rule_id))
    }

    pub fn iter(&self) -> impl Iterator<Item = Fact> + '_ {
        self.facts.iter().map(|(t, p)| Fact {
            subject: t.subject.clone(),
            slot: t.slot.clone(),
            value: t.value.clone(),
            provenance: p.clone(),
        })
    }

    pub fn triples(&self) -> impl Iterator<Item = &Triple> + '_ {
        self.facts.keys()
    }

    pub fn derived(&self) -> impl Iterator<Item = Fact> + '_ {
        self.iter().filter(|f| f.provenance.is_derived())
    }

    /// All facts matching the bound positions of `pattern`, in canonical
    /// `(subject, slot, value)` order.
    pub fn query(&self, pattern: Pattern<'_>) -> Vec<Fact> {
        self.matching(pattern)
            .into_iter()
            .map(|t| Fact {
                provenance: self.facts[t].clone(),
                subject: t.subject.clone(),
                slot: t.slot.clone(),
                value: t.value.clone(),
            })
            .collect()
    }

    /// Like [`query`](Self::query) but borrows the matching triples.
    pub fn matching(&self, pattern: Pattern<'_>) -> Vec<&Triple> {
        let candidates: Box<dyn Iterator<Item = &Triple>> = match pattern {
            Pattern {
                subject: Some(s),
                slot: Some(p),
                ..
            } => match (ident::Ident::new(s), ident::Ident::new(p)) {
                (Ok(s), Ok(p)) => match self.by_subject_slot.get(&(s, p)) {
                    Some(set) => Box::new(set.iter()),
                    None => return Vec::new(),
                },
                _ => return Vec::new(),
            },
            Pattern {
                subject: Some(s), ..
            } => index_iter(&self.by_subject, s),
            Pattern { value: Some(v), .. } => index_iter(&self.by_value, v),
            Pattern { slot: Some(p), .. } => index_iter(&self.by_slot, p),
            _ => Box::new(self.facts.keys()),
        };
        candidates.filter(|t| pattern.matches(t)).collect()
    }

    /// Values `v` such that `has(subject, slot, v)` holds.
    pub fn values(&self, subject: &str, slot: &str) -> Vec<&Ident> {
        self.matching(Pattern::any().subject(subject).slot(slot))
            .into_iter()
            .map(|t| &t.value)
            .collect()
    }

    /// Subjects `s` such that `has(s, slot, value)` holds.
    pub fn subjects(&self, slot: &str, value: &str) -> Vec<&Ident> {
        self.matching(Pattern::any().slot(slot).value(value))
            .into_iter()
            .map(|t| &t.subject)
            .collect()
    }

    /// Every triple with the given slot.
    pub fn with_slot(&self, slot: &str) -> Vec<&Triple> {
        self.matching(Pattern::any().slot(slot))
    }

    /// Merges all facts of `other` into this store, keeping existing provenance.
    pub fn extend_from(&mut self, other: &KnowledgeStore) -> usize {
        let mut grown = 0;
        for (t, p) in &other.facts {
            if self.insert(t.clone(), p.clone()) {
                grown += 1;
            }
        }
        grown
    }

    /// A new store holding only the triples accepted by `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&Triple) -> bool) -> KnowledgeStore {
        let mut out = KnowledgeStore::new();
        for (t, p) in &self.facts {
            if keep(t) {
                out.insert(t.clone(), p.clone());
            }
        }
        out
    }

    /// Line-oriented fact-file text; derived facts carry their rule id in a
    /// trailing comment.
    pub fn to_fact_file(&self) -> String {
        render_facts(self.iter())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.iter().collect::<Vec<_>>()).expect("facts serialize")
    }
}

fn index_iter<'a>(index: &'a Index, key: &str) -> Box<dyn Iterator<Item = &'a Triple> + 'a> {
    match index.get(key) {
        Some(set) => Box::new(set.iter()),
        None => Box::new(std::iter::empty()),
    }
}

/// Renders facts in fact-file syntax, one statement per line.
pub fn render_facts(facts: impl IntoIterator<Item = Fact>) -> String {
    let mut out = String::new();
    for f in facts {
        let _ = write!(out, "has({}, {}, {}).", f.subject, f.slot, f.value);
        if let Provenance::Derived { rule } = &f.provenance {
            let _ = write!(out, " % derived: {rule}");
        }
        out.push('\n');
    }
    out
}

/// Parses fact-file text into a fresh store.
pub fn parse_fact_file(text: &str, source_name: &str) -> Result<KnowledgeStore, ParseError> {
    let mut store = KnowledgeStore::new();
    parse_into(&mut store, text, source_name)?;
    Ok(store)
}

/// Parses fact-file text, adding every statement to `store` as asserted.
/// Returns the number of statements read (repeats included).
pub fn parse_into(
    store: &mut KnowledgeStore,
    text: &str,
    source_name: &str,
) -> Result<usize, ParseError> {
    let mut lexer = Lexer::new(text, source_name);
    let mut statements = 0;
    while let Some(tok) = lexer.next_token()? {
        let (line, column) = (tok.line, tok.column);
        match tok.kind {
            TokKind::Word(w) if w == "has" => {}
            other => return Err(lexer.error_at(line, column, format!("expected `has`, found {other}"))),
        }
        lexer.expect(TokKind::LParen)?;
        let mut args = Vec::with_capacity(3);
        loop {
            let tok = lexer.require()?;
            let ident = match tok.kind {
                TokKind::Word(w) => Ident::new(&w).map_err(|e| lexer.error_at(tok.line, tok.column, e.to_string()))?,
                other => {
                    return Err(lexer.error_at(tok.line, tok.column, format!("expected identifier, found {other}")));
                }
            };
            args.push(ident);
            let sep = lexer.require()?;
            match sep.kind {
                TokKind::Comma => continue,
                TokKind::RParen => break,
                other => {
                    return Err(lexer.error_at(sep.line, sep.column, format!("expected `,` or `)`, found {other}")));
                }
            }
        }
        if args.len() != 3 {
            return Err(lexer.error_at(
                line,
                column,
                format!("`has` takes 3 arguments, found {}", args.len()),
            ));
        }
        lexer.expect(TokKind::Dot)?;
        let value = args.pop().expect("3 args");
        let slot = args.pop().expect("3 args");
        let subject = args.pop().expect("3 args");
        store.insert(
            Triple::new(subject, slot, value),
            Provenance::Asserted {
                file: source_name.to_owned(),
                line,
            },
        );
        statements += 1;
    }
    Ok(statements)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokKind {
    Word(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Other(char),
}

impl std::fmt::Display for TokKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TokKind::Word(w) => write!(f, "`{w}`"),
            TokKind::LParen => f.write_str("`(`"),
            TokKind::RParen => f.write_str("`)`"),
            TokKind::Comma => f.write_str("`,`"),
            TokKind::Dot => f.write_str("`.`"),
            TokKind::Other(c) => write!(f, "`{c}`"),
        }
    }
}

struct Token {
    kind: TokKind,
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
    source_name: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str, source_name: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
            source_name,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error_at(&self, line: usize, column: usize, message: String) -> ParseError {
        ParseError {
            source_name: self.source_name.to_owned(),
            line,
            column,
            message,
        }
    }

    fn next_token(&mut self) -> Result<Option<Token>, ParseError> {
        loop {
            match self.chars.peek() {
                None => return Ok(None),
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(&c) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some(_) => break,
            }
        }
        let (line, column) = (self.line, self.column);
        let c = self.bump().expect("peeked");
        let kind = match c {
            '(' => TokKind::LParen,
            ')' => TokKind::RParen,
            ',' => TokKind::Comma,
            '.' => TokKind::Dot,
            c if c.is_alphanumeric() || c == '_' => {
                let mut word = String::from(c);
                while let Some(&n) = self.chars.peek() {
                    if n.is_alphanumeric() || n == '_' {
                        word.push(n);
                        self.bump();
                    } else {
                        break;
                    }
                }
                TokKind::Word(word)
            }
            c => TokKind::Other(c),
        };
        Ok(Some(Token { kind, line, column }))
    }

    fn require(&mut self) -> Result<Token, ParseError> {
        let (line, column) = (self.line, self.column);
        self.next_token()?
            .ok_or_else(|| self.error_at(line, column, "unexpected end of input".into()))
    }

    fn expect(&mut self, kind: TokKind) -> Result<(), ParseError> {
        let tok = self.require()?;
        if tok.kind == kind {
            Ok(())
        } else {
            Err(self.error_at(tok.line, tok.column, format!("expected {kind}, found {}", tok.kind)))
        }
    }
}
