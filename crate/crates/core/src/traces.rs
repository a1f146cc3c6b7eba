//! Finite traces of labelled transition systems.
//!
//! A trace is a word over `Σ = S × Act`. Properties are explicit finite sets
//! of words, always read against a bounded universe `Σ^≤L`, so liveness can
//! only be checked in its bounded form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("malformed LTS: {0}")]
    Lts(String),
    #[error("enumeration would exceed {limit} traces")]
    TooLarge { limit: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair {
    pub state: String,
    pub action: String,
}

impl Pair {
    pub fn new(state: &str, action: &str) -> Pair {
        Pair {
            state: state.to_string(),
            action: action.to_string(),
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.state, self.action)
    }
}

pub type Trace = Vec<Pair>;

pub fn render_trace(w: &[Pair]) -> String {
    if w.is_empty() {
        return "eps".into();
    }
    w.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts {
    pub states: BTreeSet<String>,
    pub actions: BTreeSet<String>,
    pub transitions: BTreeSet<(String, String, String)>,
    pub initial: String,
}

impl Lts {
    pub fn new(states: &[&str], transitions: &[(&str, &str, &str)], initial: &str) -> Result<Lts, TraceError> {
        let lts = Lts {
            states: states.iter().map(|s| s.to_string()).collect(),
            actions: transitions.iter().map(|t| t.1.to_string()).collect(),
            transitions: transitions
                .iter()
                .map(|(s, a, t)| (s.to_string(), a.to_string(), t.to_string()))
                .collect(),
            initial: initial.to_string(),
        };
        lts.validate()?;
        Ok(lts)
    }

    fn validate(&self) -> Result<(), TraceError> {
        if !self.states.contains(&self.initial) {
            return Err(TraceError::Lts(format!("initial state '{}' is not declared", self.initial)));
        }
        for (s, a, t) in &self.transitions {
            for x in [s, t] {
                if !self.states.contains(x) {
                    return Err(TraceError::Lts(format!("transition {s} -{a}-> {t} uses undeclared state '{x}'")));
                }
            }
        }
        Ok(())
    }

    pub fn has(&self, s: &str, a: &str, t: &str) -> bool {
        self.transitions.contains(&(s.to_string(), a.to_string(), t.to_string()))
    }

    pub fn enabled(&self, s: &str, a: &str) -> bool {
        self.transitions.iter().any(|(x, b, _)| x == s && b == a)
    }

    pub fn successors<'a>(&'a self, s: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.transitions
            .iter()
            .filter(move |(x, _, _)| x == s)
            .map(|(_, a, t)| (a.as_str(), t.as_str()))
    }

    /// `Σ = S × Act` in lexicographic order.
    pub fn sigma(&self) -> Vec<Pair> {
        let mut out = Vec::new();
        for s in &self.states {
            for a in &self.actions {
                out.push(Pair::new(s, a));
            }
        }
        out
    }

    pub fn universe(&self, max_len: usize) -> Universe<Pair> {
        Universe::new(self.sigma(), max_len)
    }
}

impl fmt::Display for Lts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.states {
            writeln!(f, "state {s}")?;
        }
        writeln!(f, "init {}", self.initial)?;
        for (s, a, t) in &self.transitions {
            writeln!(f, "trans {s} {a} {t}")?;
        }
        Ok(())
    }
}

/// The request-response protocol: connect, send, then acknowledge or
/// reject; after an acknowledgement the client may end or request again.
pub fn running_example() -> Lts {
    Lts::new(
        &["s0", "s1", "s2", "s3", "s4"],
        &[
            ("s0", "conn", "s1"),
            ("s1", "snd", "s2"),
            ("s2", "nack", "s3"),
            ("s2", "ack", "s4"),
            ("s3", "end", "s0"),
            ("s4", "end", "s0"),
            ("s4", "req", "s1"),
        ],
        "s0",
    )
    .expect("well-formed")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Validity {
    /// Adjacent pairs follow transitions; the last action is unconstrained.
    #[default]
    Literal,
    /// Additionally the last action is enabled at its state.
    Strict,
}

pub fn is_valid(lts: &Lts, w: &[Pair], mode: Validity) -> bool {
    let linked = w.windows(2).all(|p| lts.has(&p[0].state, &p[0].action, &p[1].state));
    linked
        && match (mode, w.last()) {
            (Validity::Strict, Some(p)) => lts.enabled(&p.state, &p.action),
            _ => true,
        }
}

pub const MAX_ENUMERATION: usize = 2_000_000;

/// All valid traces of length at most `max_len` (the empty trace included).
pub fn valid_traces(lts: &Lts, max_len: usize, rooted: bool, mode: Validity) -> Result<FProperty<Pair>, TraceError> {
    let mut out = BTreeSet::new();
    out.insert(Vec::new());
    let starts: Vec<Pair> = lts.sigma().into_iter().filter(|p| !rooted || p.state == lts.initial).collect();
    // frontier holds traces whose last action has a successor to extend with
    let mut frontier: Vec<Trace> = Vec::new();
    for p in starts {
        if max_len >= 1 {
            let w = vec![p];
            if is_valid(lts, &w, mode) {
                out.insert(w.clone());
            }
            frontier.push(w);
        }
    }
    for _ in 2..=max_len {
        let mut next = Vec::new();
        for w in &frontier {
            let last = w.last().unwrap();
            for (a, t) in lts.successors(&last.state) {
                if a != last.action {
                    continue;
                }
                for b in &lts.actions {
                    let mut v = w.clone();
                    v.push(Pair::new(t, b));
                    if is_valid(lts, &v, mode) {
                        out.insert(v.clone());
                    }
                    next.push(v);
                }
            }
        }
        if out.len() + next.len() > MAX_ENUMERATION {
            return Err(TraceError::TooLarge { limit: MAX_ENUMERATION });
        }
        frontier = next;
    }
    Ok(FProperty { words: out })
}

/// A path `s0 -a0-> s1 ... -a(n-1)-> sn`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Path {
    pub states: Vec<String>,
    pub actions: Vec<String>,
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.states[0])?;
        for (a, s) in self.actions.iter().zip(&self.states[1..]) {
            write!(f, " -{a}-> {s}")?;
        }
        Ok(())
    }
}

/// The path traversed by a valid non-empty trace; its last action is not
/// part of the path.
pub fn trace_path(lts: &Lts, w: &[Pair]) -> Option<Path> {
    if w.is_empty() || !is_valid(lts, w, Validity::Literal) {
        return None;
    }
    Some(Path {
        states: w.iter().map(|p| p.state.clone()).collect(),
        actions: w[..w.len() - 1].iter().map(|p| p.action.clone()).collect(),
    })
}

/// Inverse of [`trace_path`] given the trailing action.
pub fn path_trace(path: &Path, last_action: &str) -> Trace {
    let mut w: Trace = path.states.iter().zip(&path.actions).map(|(s, a)| Pair::new(s, a)).collect();
    w.push(Pair::new(path.states.last().unwrap(), last_action));
    w
}

/// All paths with `n` transitions.
pub fn paths(lts: &Lts, n: usize, rooted: bool) -> Vec<Path> {
    let mut cur: Vec<Path> = lts
        .states
        .iter()
        .filter(|s| !rooted || **s == lts.initial)
        .map(|s| Path {
            states: vec![s.clone()],
            actions: vec![],
        })
        .collect();
    for _ in 0..n {
        let mut next = Vec::new();
        for p in &cur {
            for (a, t) in lts.successors(p.states.last().unwrap()) {
                let mut q = p.clone();
                q.actions.push(a.to_string());
                q.states.push(t.to_string());
                next.push(q);
            }
        }
        cur = next;
    }
    cur
}

// ---------------------------------------------------------------------------
// Finite properties

/// `Σ^≤max_len` over an explicit alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Universe<T> {
    pub alphabet: Vec<T>,
    pub max_len: usize,
}

impl<T: Clone + Ord> Universe<T> {
    pub fn new(alphabet: Vec<T>, max_len: usize) -> Universe<T> {
        Universe { alphabet, max_len }
    }

    pub fn contains(&self, w: &[T]) -> bool {
        w.len() <= self.max_len && w.iter().all(|c| self.alphabet.contains(c))
    }

    /// Number of words, if it fits.
    pub fn size(&self) -> Option<u128> {
        let k = self.alphabet.len() as u128;
        let mut total: u128 = 0;
        let mut pow: u128 = 1;
        for _ in 0..=self.max_len {
            total = total.checked_add(pow)?;
            pow = pow.checked_mul(k)?;
        }
        Some(total)
    }

    pub fn words(&self) -> Result<Vec<Vec<T>>, TraceError> {
        match self.size() {
            Some(n) if n <= MAX_ENUMERATION as u128 => {}
            _ => return Err(TraceError::TooLarge { limit: MAX_ENUMERATION }),
        }
        let mut out = vec![Vec::new()];
        let mut layer = vec![Vec::new()];
        for _ in 0..self.max_len {
            let mut next = Vec::new();
            for w in &layer {
                for c in &self.alphabet {
                    let mut v: Vec<T> = w.clone();
                    v.push(c.clone());
                    next.push(v);
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FProperty<T: Ord> {
    pub words: BTreeSet<Vec<T>>,
}

impl<T: Ord + Clone> FProperty<T> {
    pub fn empty() -> FProperty<T> {
        FProperty { words: BTreeSet::new() }
    }

    pub fn from_words<I: IntoIterator<Item = Vec<T>>>(it: I) -> FProperty<T> {
        FProperty {
            words: it.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, w: &[T]) -> bool {
        self.words.contains(w)
    }

    pub fn is_subset(&self, other: &FProperty<T>) -> bool {
        self.words.is_subset(&other.words)
    }

    pub fn union(&self, other: &FProperty<T>) -> FProperty<T> {
        FProperty {
            words: self.words.union(&other.words).cloned().collect(),
        }
    }

    pub fn intersection(&self, other: &FProperty<T>) -> FProperty<T> {
        FProperty {
            words: self.words.intersection(&other.words).cloned().collect(),
        }
    }
}

/// `◇P`: every prefix of every member.
pub fn prefix_closure<T: Ord + Clone>(p: &FProperty<T>) -> FProperty<T> {
    let mut out = BTreeSet::new();
    for w in &p.words {
        for k in 0..=w.len() {
            out.insert(w[..k].to_vec());
        }
    }
    FProperty { words: out }
}

/// `◻P`: the words of the universe whose prefixes all lie in `P`.
pub fn box_interior<T: Ord + Clone>(p: &FProperty<T>, universe: &Universe<T>) -> FProperty<T> {
    // a word of ◻P is its own prefix, so candidates come from P
    FProperty {
        words: p
            .words
            .iter()
            .filter(|w| universe.contains(w) && (0..w.len()).all(|k| p.words.contains(&w[..k])))
            .cloned()
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Classification {
    /// `◇P = P`.
    pub safety: bool,
    /// `◇P` covers the whole bounded universe; the finite stand-in for
    /// `◇P = Σ*`.
    pub liveness_bounded: bool,
}

pub fn classify<T: Ord + Clone>(p: &FProperty<T>, universe: &Universe<T>) -> Classification {
    let closed = prefix_closure(p);
    let covered = closed.words.iter().filter(|w| universe.contains(w)).count() as u128;
    Classification {
        safety: closed == *p,
        liveness_bounded: universe.size() == Some(covered),
    }
}

/// Safety through the interior: `◻P = P`.
pub fn safety_via_box<T: Ord + Clone>(p: &FProperty<T>, universe: &Universe<T>) -> bool {
    box_interior(p, universe) == *p
}

// ---------------------------------------------------------------------------
// Policies of the running example

fn action(p: &Pair) -> &str {
    p.action.as_str()
}

/// Every adjacent pair whose first action is `ack`/`nack` is preceded by a
/// `snd`.
pub fn policy_p1(w: &[Pair]) -> bool {
    (1..w.len()).all(|i| !matches!(action(&w[i - 1]), "ack" | "nack") || (1..i).any(|j| action(&w[j - 1]) == "snd"))
}

/// Every adjacent pair whose first action is `snd` is followed by an
/// `ack`/`nack`.
pub fn policy_p2(w: &[Pair]) -> bool {
    (1..w.len()).all(|i| action(&w[i - 1]) != "snd" || (i + 1..=w.len()).any(|j| matches!(action(&w[j - 1]), "ack" | "nack")))
}

// ---------------------------------------------------------------------------
// Files

fn significant(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap().trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// `state <name>`, `init <name>` and `trans <s> <act> <s'>` lines; `#`
/// starts a comment.
pub fn parse_lts(text: &str) -> Result<Lts, TraceError> {
    let mut states = BTreeSet::new();
    let mut transitions = BTreeSet::new();
    let mut initial: Option<String> = None;
    for (line, l) in significant(text) {
        let parts: Vec<&str> = l.split_whitespace().collect();
        let err = |msg: &str| TraceError::Parse {
            line,
            msg: msg.to_string(),
        };
        match parts.as_slice() {
            ["state", names @ ..] if !names.is_empty() => {
                states.extend(names.iter().map(|s| s.to_string()));
            }
            ["init", s] => {
                if initial.replace(s.to_string()).is_some() {
                    return Err(err("second init line"));
                }
            }
            ["trans", s, a, t] => {
                transitions.insert((s.to_string(), a.to_string(), t.to_string()));
            }
            _ => return Err(err(&format!("unrecognised line '{l}'"))),
        }
    }
    let initial = initial.ok_or_else(|| TraceError::Lts("no init line".into()))?;
    let lts = Lts {
        actions: transitions.iter().map(|t| t.1.clone()).collect(),
        states,
        transitions,
        initial,
    };
    lts.validate()?;
    Ok(lts)
}

/// Comma-separated `(s,a)` pairs; `eps` is the empty trace.
pub fn parse_trace(text: &str) -> Result<Trace, String> {
    let t = text.trim();
    if t == "eps" || t == "ε" {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut rest = t;
    while !rest.is_empty() {
        let open = rest.strip_prefix('(').ok_or_else(|| format!("expected '(' at '{rest}'"))?;
        let close = open.find(')').ok_or("unclosed pair")?;
        let inner = &open[..close];
        let (s, a) = inner.split_once(',').ok_or_else(|| format!("pair '{inner}' needs a comma"))?;
        let (s, a) = (s.trim(), a.trim());
        if s.is_empty() || a.is_empty() || a.contains(',') {
            return Err(format!("malformed pair '({inner})'"));
        }
        out.push(Pair::new(s, a));
        rest = open[close + 1..].trim_start();
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
            if rest.is_empty() {
                return Err("trailing comma".into());
            }
        } else if !rest.is_empty() {
            return Err(format!("expected ',' at '{rest}'"));
        }
    }
    Ok(out)
}

/// One trace per line.
pub fn parse_property(text: &str) -> Result<FProperty<Pair>, TraceError> {
    let mut words = BTreeSet::new();
    for (line, l) in significant(text) {
        words.insert(parse_trace(l).map_err(|msg| TraceError::Parse { line, msg })?);
    }
    Ok(FProperty { words })
}

pub fn render_property(p: &FProperty<Pair>) -> String {
    p.words.iter().map(|w| render_trace(w) + "\n").collect()
}

/// Counts of the members of `p` by length.
pub fn length_profile<T: Ord>(p: &FProperty<T>) -> BTreeMap<usize, usize> {
    let mut m = BTreeMap::new();
    for w in &p.words {
        *m.entry(w.len()).or_insert(0) += 1;
    }
    m
}
