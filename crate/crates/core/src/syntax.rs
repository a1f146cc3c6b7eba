//! Formulas, structural terms, sequents and the translations between
//! sequents and (in)equations.
//!
//! Concrete syntax (fully parenthesized, ASCII):
//!
//! ```text
//! formula := IDENT | "1" | "bot" | "top"
//!          | "(" formula ("*" | "&" | "|") formula ")"
//!          | ("dia" | "box") formula
//! struct  := formula | "e" | "(" struct ("o" | "n") struct ")" | "<" struct ">"
//! sequent := struct "|-" formula
//! ```
//!
//! The words `e o n dia box bot top` are keywords and cannot name variables.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    Var(String),
    One,
    Bot,
    Top,
    Prod(Box<Formula>, Box<Formula>),
    Meet(Box<Formula>, Box<Formula>),
    Join(Box<Formula>, Box<Formula>),
    Dia(Box<Formula>),
    BBox(Box<Formula>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StructuralTerm {
    Atom(Formula),
    Eps,
    /// `∘`
    Comma(Box<StructuralTerm>, Box<StructuralTerm>),
    /// `⊓`
    Cap(Box<StructuralTerm>, Box<StructuralTerm>),
    /// `⟨·⟩`
    Angle(Box<StructuralTerm>),
}

/// Child-index path into a structural term. Unary nodes use index 0.
pub type Position = Vec<u8>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sequent {
    pub ant: StructuralTerm,
    pub succ: Formula,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Inequation {
    pub lhs: Formula,
    pub rhs: Formula,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Equation {
    pub lhs: Formula,
    pub rhs: Formula,
}

/// Either kind of identity, for `flat`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Identity {
    Leq(Inequation),
    Eq(Equation),
}

pub fn var(name: &str) -> Formula {
    Formula::Var(name.to_string())
}

impl Formula {
    pub fn prod(a: Formula, b: Formula) -> Formula {
        Formula::Prod(Box::new(a), Box::new(b))
    }
    pub fn meet(a: Formula, b: Formula) -> Formula {
        Formula::Meet(Box::new(a), Box::new(b))
    }
    pub fn join(a: Formula, b: Formula) -> Formula {
        Formula::Join(Box::new(a), Box::new(b))
    }
    pub fn dia(a: Formula) -> Formula {
        Formula::Dia(Box::new(a))
    }
    pub fn bbox(a: Formula) -> Formula {
        Formula::BBox(Box::new(a))
    }

    /// Variables in order of first occurrence.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Formula::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Formula::One | Formula::Bot | Formula::Top => {}
            Formula::Prod(a, b) | Formula::Meet(a, b) | Formula::Join(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Dia(a) | Formula::BBox(a) => a.collect_vars(out),
        }
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl StructuralTerm {
    pub fn atom(f: Formula) -> StructuralTerm {
        StructuralTerm::Atom(f)
    }
    pub fn comma(a: StructuralTerm, b: StructuralTerm) -> StructuralTerm {
        StructuralTerm::Comma(Box::new(a), Box::new(b))
    }
    pub fn cap(a: StructuralTerm, b: StructuralTerm) -> StructuralTerm {
        StructuralTerm::Cap(Box::new(a), Box::new(b))
    }
    pub fn angle(a: StructuralTerm) -> StructuralTerm {
        StructuralTerm::Angle(Box::new(a))
    }

    pub fn children(&self) -> Vec<&StructuralTerm> {
        match self {
            StructuralTerm::Atom(_) | StructuralTerm::Eps => vec![],
            StructuralTerm::Comma(a, b) | StructuralTerm::Cap(a, b) => vec![a, b],
            StructuralTerm::Angle(a) => vec![a],
        }
    }

    fn child(&self, i: u8) -> Option<&StructuralTerm> {
        match (self, i) {
            (StructuralTerm::Comma(a, _), 0) | (StructuralTerm::Cap(a, _), 0) => Some(a),
            (StructuralTerm::Comma(_, b), 1) | (StructuralTerm::Cap(_, b), 1) => Some(b),
            (StructuralTerm::Angle(a), 0) => Some(a),
            _ => None,
        }
    }

    fn child_mut(&mut self, i: u8) -> Option<&mut StructuralTerm> {
        match (self, i) {
            (StructuralTerm::Comma(a, _), 0) | (StructuralTerm::Cap(a, _), 0) => Some(a),
            (StructuralTerm::Comma(_, b), 1) | (StructuralTerm::Cap(_, b), 1) => Some(b),
            (StructuralTerm::Angle(a), 0) => Some(a),
            _ => None,
        }
    }

    pub fn subterm_at(&self, p: &[u8]) -> Option<&StructuralTerm> {
        let mut cur = self;
        for &i in p {
            cur = cur.child(i)?;
        }
        Some(cur)
    }

    pub fn subterm_at_mut(&mut self, p: &[u8]) -> Option<&mut StructuralTerm> {
        let mut cur = self;
        for &i in p {
            cur = cur.child_mut(i)?;
        }
        Some(cur)
    }

    /// All node positions in preorder.
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.walk(&mut path, &mut |p, _| out.push(p.to_vec()));
        out
    }

    pub fn walk<'a, F: FnMut(&[u8], &'a StructuralTerm)>(&'a self, path: &mut Vec<u8>, f: &mut F) {
        f(path, self);
        for (i, c) in self.children().into_iter().enumerate() {
            path.push(i as u8);
            c.walk(path, f);
            path.pop();
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Formulas at the atomic leaves, left to right.
    pub fn leaf_formulas(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.walk(&mut path, &mut |_, t| {
            if let StructuralTerm::Atom(f) = t {
                out.push(f);
            }
        });
        out
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl Sequent {
    pub fn new(ant: StructuralTerm, succ: Formula) -> Sequent {
        Sequent { ant, succ }
    }

    pub fn render(&self) -> String {
        self.to_string()
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        for f in self.ant.leaf_formulas() {
            f.collect_vars(&mut out);
        }
        self.succ.collect_vars(&mut out);
        out
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Var(v) => write!(f, "{v}"),
            Formula::One => write!(f, "1"),
            Formula::Bot => write!(f, "bot"),
            Formula::Top => write!(f, "top"),
            Formula::Prod(a, b) => write!(f, "({a} * {b})"),
            Formula::Meet(a, b) => write!(f, "({a} & {b})"),
            Formula::Join(a, b) => write!(f, "({a} | {b})"),
            Formula::Dia(a) => write!(f, "dia {a}"),
            Formula::BBox(a) => write!(f, "box {a}"),
        }
    }
}

impl fmt::Display for StructuralTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructuralTerm::Atom(a) => write!(f, "{a}"),
            StructuralTerm::Eps => write!(f, "e"),
            StructuralTerm::Comma(a, b) => write!(f, "({a} o {b})"),
            StructuralTerm::Cap(a, b) => write!(f, "({a} n {b})"),
            StructuralTerm::Angle(a) => write!(f, "<{a}>"),
        }
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} |- {}", self.ant, self.succ)
    }
}

impl fmt::Display for Inequation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <= {}", self.lhs, self.rhs)
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Identity::Leq(i) => i.fmt(f),
            Identity::Eq(e) => e.fmt(f),
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    One,
    Bot,
    Top,
    Dia,
    BBox,
    Eps,
    O,
    N,
    LParen,
    RParen,
    Star,
    Amp,
    Bar,
    Lt,
    Gt,
    Turnstile,
    Leq,
    EqSign,
}

const KEYWORDS: [&str; 7] = ["e", "o", "n", "dia", "box", "bot", "top"];

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') && !KEYWORDS.contains(&s)
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'*' => Tok::Star,
            b'&' => Tok::Amp,
            b'>' => Tok::Gt,
            b'=' => Tok::EqSign,
            b'1' => Tok::One,
            b'|' => {
                if bytes.get(i + 1) == Some(&b'-') {
                    i += 1;
                    Tok::Turnstile
                } else {
                    Tok::Bar
                }
            }
            b'<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 1;
                    Tok::Leq
                } else {
                    Tok::Lt
                }
            }
            b'a'..=b'z' => {
                let mut j = i + 1;
                while j < bytes.len() && (bytes[j].is_ascii_lowercase() || bytes[j].is_ascii_digit() || bytes[j] == b'_') {
                    j += 1;
                }
                let word = &text[i..j];
                i = j - 1;
                match word {
                    "e" => Tok::Eps,
                    "o" => Tok::O,
                    "n" => Tok::N,
                    "dia" => Tok::Dia,
                    "box" => Tok::BBox,
                    "bot" => Tok::Bot,
                    "top" => Tok::Top,
                    _ => Tok::Ident(word.to_string()),
                }
            }
            _ => {
                return Err(ParseError {
                    pos: i,
                    msg: format!("unexpected character {:?}", c as char),
                })
            }
        };
        i += 1;
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    len: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            at: 0,
            len: text.len(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.len)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.at += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn end(&self) -> Result<(), ParseError> {
        if self.at < self.toks.len() {
            self.err("trailing input")
        } else {
            Ok(())
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        match self.bump() {
            Some(Tok::Ident(v)) => Ok(Formula::Var(v)),
            Some(Tok::One) => Ok(Formula::One),
            Some(Tok::Bot) => Ok(Formula::Bot),
            Some(Tok::Top) => Ok(Formula::Top),
            Some(Tok::Dia) => Ok(Formula::dia(self.formula()?)),
            Some(Tok::BBox) => Ok(Formula::bbox(self.formula()?)),
            Some(Tok::LParen) => {
                let a = self.formula()?;
                let build: fn(Formula, Formula) -> Formula = match self.peek() {
                    Some(Tok::Star) => Formula::prod,
                    Some(Tok::Amp) => Formula::meet,
                    Some(Tok::Bar) => Formula::join,
                    _ => return self.err("expected binary formula operator '*', '&' or '|'"),
                };
                self.bump();
                let b = self.formula()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(build(a, b))
            }
            _ => {
                self.at = self.at.saturating_sub(1);
                self.err("expected formula")
            }
        }
    }

    fn structure(&mut self) -> Result<StructuralTerm, ParseError> {
        match self.peek() {
            Some(Tok::Eps) => {
                self.at += 1;
                Ok(StructuralTerm::Eps)
            }
            Some(Tok::Lt) => {
                self.at += 1;
                let a = self.structure()?;
                self.expect(Tok::Gt, "'>'")?;
                Ok(StructuralTerm::angle(a))
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let a = self.structure()?;
                let op_pos = self.pos();
                match self.bump() {
                    Some(Tok::O) => {
                        let b = self.structure()?;
                        self.expect(Tok::RParen, "')'")?;
                        Ok(StructuralTerm::comma(a, b))
                    }
                    Some(Tok::N) => {
                        let b = self.structure()?;
                        self.expect(Tok::RParen, "')'")?;
                        Ok(StructuralTerm::cap(a, b))
                    }
                    Some(op @ (Tok::Star | Tok::Amp | Tok::Bar)) => {
                        let a = match a {
                            StructuralTerm::Atom(f) => f,
                            _ => {
                                return Err(ParseError {
                                    pos: op_pos,
                                    msg: "formula operator applied to a structure".into(),
                                })
                            }
                        };
                        let b = self.formula()?;
                        self.expect(Tok::RParen, "')'")?;
                        let f = match op {
                            Tok::Star => Formula::prod(a, b),
                            Tok::Amp => Formula::meet(a, b),
                            _ => Formula::join(a, b),
                        };
                        Ok(StructuralTerm::Atom(f))
                    }
                    _ => Err(ParseError {
                        pos: op_pos,
                        msg: "expected operator 'o', 'n', '*', '&' or '|'".into(),
                    }),
                }
            }
            _ => Ok(StructuralTerm::Atom(self.formula()?)),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    p.end()?;
    Ok(f)
}

pub fn parse_struct(text: &str) -> Result<StructuralTerm, ParseError> {
    let mut p = Parser::new(text)?;
    let s = p.structure()?;
    p.end()?;
    Ok(s)
}

pub fn parse_sequent(text: &str) -> Result<Sequent, ParseError> {
    let mut p = Parser::new(text)?;
    let ant = p.structure()?;
    p.expect(Tok::Turnstile, "'|-'")?;
    let succ = p.formula()?;
    p.end()?;
    Ok(Sequent { ant, succ })
}

/// `lhs <= rhs` or `lhs = rhs`.
pub fn parse_identity(text: &str) -> Result<Identity, ParseError> {
    let mut p = Parser::new(text)?;
    let lhs = p.formula()?;
    let kind = p.bump();
    let rhs = p.formula()?;
    p.end()?;
    match kind {
        Some(Tok::Leq) => Ok(Identity::Leq(Inequation { lhs, rhs })),
        Some(Tok::EqSign) => Ok(Identity::Eq(Equation { lhs, rhs })),
        _ => Err(ParseError {
            pos: 0,
            msg: "expected '<=' or '='".into(),
        }),
    }
}

// ---------------------------------------------------------------------------
// Measures and translations

pub fn cp(f: &Formula) -> usize {
    match f {
        Formula::Var(_) | Formula::One | Formula::Bot | Formula::Top => 0,
        Formula::Prod(a, b) | Formula::Meet(a, b) | Formula::Join(a, b) => cp(a) + cp(b) + 1,
        Formula::Dia(a) | Formula::BBox(a) => cp(a) + 1,
    }
}

pub fn cp_s(t: &StructuralTerm) -> usize {
    match t {
        StructuralTerm::Atom(_) | StructuralTerm::Eps => 0,
        StructuralTerm::Comma(a, b) | StructuralTerm::Cap(a, b) => cp_s(a) + cp_s(b) + 1,
        StructuralTerm::Angle(a) => cp_s(a) + 1,
    }
}

/// Formula translation of a structural term.
pub fn natural(t: &StructuralTerm) -> Formula {
    match t {
        StructuralTerm::Atom(f) => f.clone(),
        StructuralTerm::Eps => Formula::One,
        StructuralTerm::Comma(a, b) => Formula::prod(natural(a), natural(b)),
        StructuralTerm::Cap(a, b) => Formula::meet(natural(a), natural(b)),
        StructuralTerm::Angle(a) => Formula::dia(natural(a)),
    }
}

pub fn sharp(s: &Sequent) -> Inequation {
    Inequation {
        lhs: natural(&s.ant),
        rhs: s.succ.clone(),
    }
}

pub fn flat(e: &Identity) -> Vec<Sequent> {
    let seq = |a: &Formula, b: &Formula| Sequent::new(StructuralTerm::Atom(a.clone()), b.clone());
    match e {
        Identity::Leq(i) => vec![seq(&i.lhs, &i.rhs)],
        Identity::Eq(q) => {
            let a = seq(&q.lhs, &q.rhs);
            let b = seq(&q.rhs, &q.lhs);
            if a == b {
                vec![a]
            } else {
                vec![a, b]
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Positions

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PositionError {
    #[error("position {0:?} does not address a node")]
    Invalid(Position),
    #[error("positions {0:?} and {1:?} overlap")]
    Overlap(Position, Position),
}

/// Atomic-leaf positions whose formula is exactly `f`.
pub fn occurrences_of(t: &StructuralTerm, f: &Formula) -> Vec<Position> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    t.walk(&mut path, &mut |p, node| {
        if let StructuralTerm::Atom(g) = node {
            if g == f {
                out.push(p.to_vec());
            }
        }
    });
    out
}

pub fn is_prefix(a: &[u8], b: &[u8]) -> bool {
    a.len() <= b.len() && &b[..a.len()] == a
}

/// Simultaneous replacement of the subterms at `ps` by `r`.
pub fn replace_at(t: &StructuralTerm, ps: &[Position], r: &StructuralTerm) -> Result<StructuralTerm, PositionError> {
    for (i, p) in ps.iter().enumerate() {
        if t.subterm_at(p).is_none() {
            return Err(PositionError::Invalid(p.clone()));
        }
        for q in &ps[i + 1..] {
            if is_prefix(p, q) || is_prefix(q, p) {
                return Err(PositionError::Overlap(p.clone(), q.clone()));
            }
        }
    }
    let mut out = t.clone();
    for p in ps {
        *out.subterm_at_mut(p).expect("checked above") = r.clone();
    }
    Ok(out)
}

/// Replace a single subterm; returns `None` when `p` is not a node.
pub fn replace_one(t: &StructuralTerm, p: &[u8], r: StructuralTerm) -> Option<StructuralTerm> {
    let mut out = t.clone();
    *out.subterm_at_mut(p)? = r;
    Some(out)
}

// ---------------------------------------------------------------------------
// Random terms

const GEN_VARS: [&str; 4] = ["x", "y", "z", "w"];

pub fn random_formula<R: Rng>(rng: &mut R, depth: usize) -> Formula {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return match rng.gen_range(0..7) {
            0 => Formula::One,
            1 => Formula::Bot,
            2 => Formula::Top,
            _ => var(GEN_VARS[rng.gen_range(0..GEN_VARS.len())]),
        };
    }
    match rng.gen_range(0..5) {
        0 => Formula::prod(random_formula(rng, depth - 1), random_formula(rng, depth - 1)),
        1 => Formula::meet(random_formula(rng, depth - 1), random_formula(rng, depth - 1)),
        2 => Formula::join(random_formula(rng, depth - 1), random_formula(rng, depth - 1)),
        3 => Formula::dia(random_formula(rng, depth - 1)),
        _ => Formula::bbox(random_formula(rng, depth - 1)),
    }
}

pub fn random_struct<R: Rng>(rng: &mut R, depth: usize) -> StructuralTerm {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return if rng.gen_bool(0.15) {
            StructuralTerm::Eps
        } else {
            let d = rng.gen_range(0..3);
            StructuralTerm::Atom(random_formula(rng, d))
        };
    }
    match rng.gen_range(0..3) {
        0 => StructuralTerm::comma(random_struct(rng, depth - 1), random_struct(rng, depth - 1)),
        1 => StructuralTerm::cap(random_struct(rng, depth - 1), random_struct(rng, depth - 1)),
        _ => StructuralTerm::angle(random_struct(rng, depth - 1)),
    }
}

pub fn random_sequent<R: Rng>(rng: &mut R, depth: usize) -> Sequent {
    Sequent::new(random_struct(rng, depth), random_formula(rng, depth))
}

/// Distinct variables of a set of formulas, sorted.
pub fn vars_of<'a, I: IntoIterator<Item = &'a Formula>>(fs: I) -> Vec<String> {
    let mut set = BTreeSet::new();
    for f in fs {
        for v in f.vars() {
            set.insert(v);
        }
    }
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Formula {
        var("x")
    }
    fn y() -> Formula {
        var("y")
    }
    fn at(f: Formula) -> StructuralTerm {
        StructuralTerm::Atom(f)
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_sequent("x |- x").unwrap(), Sequent::new(at(x()), x()));
        assert_eq!(
            parse_sequent("(<x> o e) |- dia x").unwrap(),
            Sequent::new(
                StructuralTerm::comma(StructuralTerm::angle(at(x())), StructuralTerm::Eps),
                Formula::dia(x())
            )
        );
        let s = parse_sequent("((x & y) n z) |- top").unwrap();
        assert_eq!(
            s,
            Sequent::new(StructuralTerm::cap(at(Formula::meet(x(), y())), at(var("z"))), Formula::Top)
        );
    }

    #[test]
    fn parse_whitespace_insensitive() {
        assert_eq!(
            parse_sequent("(<x>o e)|-dia x").unwrap(),
            parse_sequent("  ( < x >  o  e )  |-  dia   x ").unwrap()
        );
    }

    #[test]
    fn parse_errors_carry_positions() {
        let e = parse_sequent("x |- (x * y").unwrap_err();
        assert_eq!(e.pos, 11);
        let e = parse_sequent("(x o y) |- (x o y)").unwrap_err();
        assert_eq!(e.pos, 14);
        assert!(parse_formula("e").is_err());
        assert!(parse_sequent("(<x> * y) |- x").is_err());
        assert!(parse_sequent("x |- x y").is_err());
    }

    #[test]
    fn render_examples() {
        assert_eq!(Formula::dia(x()).render(), "dia x");
        assert_eq!(StructuralTerm::Eps.render(), "e");
        assert_eq!(
            Sequent::new(StructuralTerm::angle(at(x())), Formula::dia(x())).render(),
            "<x> |- dia x"
        );
    }

    #[test]
    fn cp_examples() {
        assert_eq!(cp(&x()), 0);
        assert_eq!(cp(&Formula::meet(Formula::dia(x()), y())), 2);
        assert_eq!(cp(&Formula::bbox(Formula::dia(Formula::One))), 2);
        assert_eq!(cp_s(&at(Formula::meet(x(), y()))), 0);
        assert_eq!(cp_s(&StructuralTerm::comma(StructuralTerm::angle(at(x())), StructuralTerm::Eps)), 2);
        assert_eq!(cp_s(&StructuralTerm::Eps), 0);
    }

    #[test]
    fn natural_examples() {
        assert_eq!(natural(&StructuralTerm::Eps), Formula::One);
        assert_eq!(
            natural(&StructuralTerm::comma(at(x()), StructuralTerm::angle(at(y())))),
            Formula::prod(x(), Formula::dia(y()))
        );
        assert_eq!(
            natural(&StructuralTerm::cap(at(Formula::join(x(), y())), StructuralTerm::Eps)),
            Formula::meet(Formula::join(x(), y()), Formula::One)
        );
    }

    #[test]
    fn sharp_examples() {
        let s = parse_sequent("(x o y) |- z").unwrap();
        assert_eq!(
            sharp(&s),
            Inequation {
                lhs: Formula::prod(x(), y()),
                rhs: var("z")
            }
        );
        let s = parse_sequent("e |- 1").unwrap();
        assert_eq!(
            sharp(&s),
            Inequation {
                lhs: Formula::One,
                rhs: Formula::One
            }
        );
        let s = parse_sequent("<x> |- dia x").unwrap();
        assert_eq!(sharp(&s).lhs, Formula::dia(x()));
    }

    #[test]
    fn flat_examples() {
        let i = Identity::Leq(Inequation {
            lhs: x(),
            rhs: Formula::dia(x()),
        });
        assert_eq!(flat(&i), vec![parse_sequent("x |- dia x").unwrap()]);
        let e = Identity::Eq(Equation {
            lhs: Formula::dia(Formula::dia(x())),
            rhs: Formula::dia(x()),
        });
        assert_eq!(flat(&e).len(), 2);
        let e = Identity::Eq(Equation { lhs: x(), rhs: x() });
        assert_eq!(flat(&e), vec![parse_sequent("x |- x").unwrap()]);
    }

    #[test]
    fn occurrences_examples() {
        let t = StructuralTerm::comma(at(x()), at(x()));
        assert_eq!(occurrences_of(&t, &x()), vec![vec![0], vec![1]]);
        assert!(occurrences_of(&at(Formula::meet(x(), y())), &x()).is_empty());
        assert_eq!(occurrences_of(&StructuralTerm::angle(at(x())), &x()), vec![vec![0]]);
    }

    #[test]
    fn replace_examples() {
        let t = StructuralTerm::comma(at(x()), at(x()));
        assert_eq!(
            replace_at(&t, &[vec![0], vec![1]], &StructuralTerm::Eps).unwrap(),
            StructuralTerm::comma(StructuralTerm::Eps, StructuralTerm::Eps)
        );
        assert_eq!(replace_at(&t, &[vec![]], &StructuralTerm::Eps).unwrap(), StructuralTerm::Eps);
        assert_eq!(
            replace_at(&t, &[vec![0]], &StructuralTerm::Eps).unwrap(),
            StructuralTerm::comma(StructuralTerm::Eps, at(x()))
        );
        assert!(matches!(
            replace_at(&t, &[vec![], vec![0]], &StructuralTerm::Eps),
            Err(PositionError::Overlap(..))
        ));
        assert!(matches!(
            replace_at(&t, &[vec![0, 0]], &StructuralTerm::Eps),
            Err(PositionError::Invalid(..))
        ));
    }

    #[test]
    fn identities_parse() {
        assert_eq!(
            parse_identity("dia dia x = dia x").unwrap(),
            Identity::Eq(Equation {
                lhs: Formula::dia(Formula::dia(x())),
                rhs: Formula::dia(x())
            })
        );
        assert!(matches!(parse_identity("x <= dia x").unwrap(), Identity::Leq(_)));
    }
}
