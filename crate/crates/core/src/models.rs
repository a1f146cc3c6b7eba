//! Finite closure l-monoids.
//!
//! Powerset models are built over a finite base `0..n` (n ≤ 20) carrying a
//! partial multiplication and a preorder; subsets are `u64` bitmasks. The
//! truncated-language models and the preorder models over monoid tables are
//! both instances. [`TableModel`] holds explicit operation tables and is used
//! for small hand-made (or deliberately broken) algebras.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{self, words_upto, FiniteMonoid, RdpWitness};
use crate::calculus::{apply_rule, Aux, RuleApp, RuleId};
use crate::syntax::{natural, var, Formula, Inequation, Position, Sequent, StructuralTerm};

pub type Elem = u64;
pub type Assignment = BTreeMap<String, Elem>;

/// Largest base allowed for powerset models.
pub const MAX_BASE: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("base of {0} points exceeds the limit of {MAX_BASE}")]
    TooLarge(usize),
    #[error("empty alphabet")]
    EmptyAlphabet,
    #[error("monoid: {0}")]
    Monoid(#[from] algebra::AlgebraError),
    #[error("relation is not a preorder")]
    NotPreorder,
    #[error("RDP fails: {b} below {a1}·{a2} has no decomposition")]
    Rdp { b: String, a1: String, a2: String },
    #[error("unbound variable {0}")]
    Unbound(String),
    #[error("exhaustive check needs {0} assignments, budget is {1}")]
    Budget(u128, u64),
    #[error("model description: {0}")]
    Description(String),
}

#[derive(Clone, Debug)]
pub struct PowersetModel {
    pub name: String,
    pub base: Vec<String>,
    pub unit: usize,
    /// `None` where the product falls outside the base (truncation).
    pub mult: Vec<Vec<Option<usize>>>,
    /// `down[b]` is the set of points below `b`.
    pub down: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct TableModel {
    pub name: String,
    pub names: Vec<String>,
    pub meet: Vec<Vec<usize>>,
    pub join: Vec<Vec<usize>>,
    pub prod: Vec<Vec<usize>>,
    pub dia: Vec<usize>,
    pub bbox: Vec<usize>,
    pub one: usize,
    pub bot: usize,
    pub top: usize,
}

#[derive(Clone, Debug)]
pub enum Model {
    Powerset(PowersetModel),
    Table(TableModel),
}

impl PowersetModel {
    fn full(&self) -> u64 {
        if self.base.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.base.len()) - 1
        }
    }

    fn prod(&self, a: u64, b: u64) -> u64 {
        let mut out = 0;
        let mut x = a;
        while x != 0 {
            let i = x.trailing_zeros() as usize;
            x &= x - 1;
            let row = &self.mult[i];
            let mut y = b;
            while y != 0 {
                let j = y.trailing_zeros() as usize;
                y &= y - 1;
                if let Some(k) = row[j] {
                    out |= 1 << k;
                }
            }
        }
        out
    }

    fn dia(&self, a: u64) -> u64 {
        let mut out = 0;
        let mut x = a;
        while x != 0 {
            let i = x.trailing_zeros() as usize;
            x &= x - 1;
            out |= self.down[i];
        }
        out
    }

    fn bbox(&self, a: u64) -> u64 {
        let mut out = 0;
        for (b, &d) in self.down.iter().enumerate() {
            if d & !a == 0 {
                out |= 1 << b;
            }
        }
        out
    }

    pub fn point(&self, name: &str) -> Option<usize> {
        self.base.iter().position(|n| n == name)
    }

    /// The subset with the named points.
    pub fn subset(&self, names: &[&str]) -> Option<u64> {
        names.iter().try_fold(0u64, |acc, n| self.point(n).map(|i| acc | 1 << i))
    }
}

impl Model {
    pub fn name(&self) -> &str {
        match self {
            Model::Powerset(p) => &p.name,
            Model::Table(t) => &t.name,
        }
    }

    pub fn size(&self) -> u64 {
        match self {
            Model::Powerset(p) => 1u64 << p.base.len(),
            Model::Table(t) => t.names.len() as u64,
        }
    }

    pub fn meet(&self, a: Elem, b: Elem) -> Elem {
        match self {
            Model::Powerset(_) => a & b,
            Model::Table(t) => t.meet[a as usize][b as usize] as Elem,
        }
    }

    pub fn join(&self, a: Elem, b: Elem) -> Elem {
        match self {
            Model::Powerset(_) => a | b,
            Model::Table(t) => t.join[a as usize][b as usize] as Elem,
        }
    }

    pub fn prod(&self, a: Elem, b: Elem) -> Elem {
        match self {
            Model::Powerset(p) => p.prod(a, b),
            Model::Table(t) => t.prod[a as usize][b as usize] as Elem,
        }
    }

    pub fn dia(&self, a: Elem) -> Elem {
        match self {
            Model::Powerset(p) => p.dia(a),
            Model::Table(t) => t.dia[a as usize] as Elem,
        }
    }

    pub fn bbox(&self, a: Elem) -> Elem {
        match self {
            Model::Powerset(p) => p.bbox(a),
            Model::Table(t) => t.bbox[a as usize] as Elem,
        }
    }

    pub fn one(&self) -> Elem {
        match self {
            Model::Powerset(p) => 1 << p.unit,
            Model::Table(t) => t.one as Elem,
        }
    }

    pub fn bot(&self) -> Elem {
        match self {
            Model::Powerset(_) => 0,
            Model::Table(t) => t.bot as Elem,
        }
    }

    pub fn top(&self) -> Elem {
        match self {
            Model::Powerset(p) => p.full(),
            Model::Table(t) => t.top as Elem,
        }
    }

    pub fn leq(&self, a: Elem, b: Elem) -> bool {
        self.meet(a, b) == a
    }

    pub fn render(&self, e: Elem) -> String {
        match self {
            Model::Powerset(p) => {
                let members: Vec<&str> = (0..p.base.len()).filter(|i| e >> i & 1 == 1).map(|i| p.base[i].as_str()).collect();
                format!("{{{}}}", members.join(","))
            }
            Model::Table(t) => t.names[e as usize].clone(),
        }
    }

    pub fn render_assignment(&self, a: &Assignment) -> String {
        if a.is_empty() {
            return "(no variables)".into();
        }
        let parts: Vec<String> = a.iter().map(|(k, v)| format!("{k}↦{}", self.render(*v))).collect();
        parts.join(", ")
    }

    /// Explicit tables; only sensible for small carriers.
    pub fn to_table(&self) -> TableModel {
        let n = self.size() as usize;
        let names = (0..n as Elem).map(|e| self.render(e)).collect();
        let bin = |f: &dyn Fn(Elem, Elem) -> Elem| -> Vec<Vec<usize>> {
            (0..n as Elem).map(|a| (0..n as Elem).map(|b| f(a, b) as usize).collect()).collect()
        };
        TableModel {
            name: format!("{} (tables)", self.name()),
            names,
            meet: bin(&|a, b| self.meet(a, b)),
            join: bin(&|a, b| self.join(a, b)),
            prod: bin(&|a, b| self.prod(a, b)),
            dia: (0..n as Elem).map(|a| self.dia(a) as usize).collect(),
            bbox: (0..n as Elem).map(|a| self.bbox(a) as usize).collect(),
            one: self.one() as usize,
            bot: self.bot() as usize,
            top: self.top() as usize,
        }
    }

    /// Model description: `truncated alphabet=<syms> L=<n>` or a monoid
    /// table block (see [`parse_model_description`]).
    pub fn describe(&self) -> String {
        match self {
            Model::Powerset(p) => {
                let mut s = format!("model {}\npoints {}\n", p.name, p.base.join(" "));
                for (b, d) in p.down.iter().enumerate() {
                    let below: Vec<&str> = (0..p.base.len()).filter(|i| d >> i & 1 == 1).map(|i| p.base[i].as_str()).collect();
                    s.push_str(&format!("below {}: {}\n", p.base[b], below.join(" ")));
                }
                s
            }
            Model::Table(t) => format!("model {} ({} elements)\n", t.name, t.names.len()),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

pub fn build_truncated_model(alphabet: &[char], max_len: usize) -> Result<Model, ModelError> {
    if alphabet.is_empty() {
        return Err(ModelError::EmptyAlphabet);
    }
    // Guard before materialising the word list.
    let mut count: usize = 0;
    let mut layer: usize = 1;
    for _ in 0..=max_len {
        count = count.saturating_add(layer);
        if count > MAX_BASE {
            return Err(ModelError::TooLarge(count));
        }
        layer = layer.saturating_mul(alphabet.len());
    }
    let words = words_upto(alphabet, max_len);
    let n = words.len();
    let index = |w: &str| words.iter().position(|x| x == w);
    let mult = words
        .iter()
        .map(|u| words.iter().map(|v| index(&format!("{u}{v}"))).collect())
        .collect();
    let down = words
        .iter()
        .map(|w| {
            (0..n)
                .filter(|&i| w.starts_with(words[i].as_str()))
                .fold(0u64, |acc, i| acc | 1 << i)
        })
        .collect();
    let alpha: String = alphabet.iter().collect();
    Ok(Model::Powerset(PowersetModel {
        name: format!("truncated alphabet={alpha} L={max_len}"),
        base: words
            .iter()
            .map(|w| if w.is_empty() { "ε".to_string() } else { w.clone() })
            .collect(),
        unit: 0,
        mult,
        down,
    }))
}

/// `rel[b][a]` means `b ≼ a`.
pub fn build_preorder_model(m: &FiniteMonoid, rel: &[Vec<bool>]) -> Result<Model, ModelError> {
    let n = m.size();
    if n > MAX_BASE {
        return Err(ModelError::TooLarge(n));
    }
    if rel.len() != n || rel.iter().any(|r| r.len() != n) || !algebra::is_preorder(rel) {
        return Err(ModelError::NotPreorder);
    }
    if let Err(RdpWitness { b, a1, a2 }) = algebra::check_rdp(m, rel) {
        return Err(ModelError::Rdp {
            b: m.names[b].clone(),
            a1: m.names[a1].clone(),
            a2: m.names[a2].clone(),
        });
    }
    let down = (0..n)
        .map(|b| (0..n).filter(|&a| rel[a][b]).fold(0u64, |acc, a| acc | 1 << a))
        .collect();
    Ok(Model::Powerset(PowersetModel {
        name: format!("preorder model on {} points", n),
        base: m.names.clone(),
        unit: m.unit,
        mult: m.table.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect(),
        down,
    }))
}

fn named(mut m: Model, name: &str) -> Model {
    if let Model::Powerset(p) = &mut m {
        p.name = name.to_string();
    }
    m
}

pub fn z2_total() -> Model {
    named(
        build_preorder_model(&FiniteMonoid::z2(), &[vec![true, true], vec![true, true]]).unwrap(),
        "Z2-total",
    )
}

pub fn z2_discrete() -> Model {
    named(
        build_preorder_model(&FiniteMonoid::z2(), &[vec![true, false], vec![false, true]]).unwrap(),
        "Z2-discrete",
    )
}

/// The bundled models: truncated Σ={a} with L ≤ 3, Σ={a,b} with L ≤ 2,
/// and the two preorders on Z2.
pub fn bundled_models() -> Vec<Model> {
    let mut out = Vec::new();
    for l in 0..=3 {
        out.push(build_truncated_model(&['a'], l).unwrap());
    }
    for l in 0..=2 {
        out.push(build_truncated_model(&['a', 'b'], l).unwrap());
    }
    out.push(z2_total());
    out.push(z2_discrete());
    out
}

/// Parses a model description.
///
/// ```text
/// truncated alphabet=ab L=2
/// z2-total | z2-discrete
/// elements 1 a
/// unit 1
/// table 1 a a 1        (row-major products)
/// preorder 1 1 1 1     (row-major; entry (i,j) = 1 iff e_i ≼ e_j)
/// ```
pub fn parse_model_description(text: &str) -> Result<Model, ModelError> {
    let err = |m: &str| ModelError::Description(m.to_string());
    let lines: Vec<&str> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .collect();
    let first = *lines.first().ok_or_else(|| err("empty description"))?;
    match first {
        "z2-total" => return Ok(z2_total()),
        "z2-discrete" => return Ok(z2_discrete()),
        _ => {}
    }
    if let Some(rest) = first.strip_prefix("truncated") {
        let mut alphabet = None;
        let mut len = None;
        for kv in rest.split_whitespace() {
            match kv.split_once('=') {
                Some(("alphabet", v)) => alphabet = Some(v.chars().collect::<Vec<char>>()),
                Some(("L", v)) => len = Some(v.parse::<usize>().map_err(|_| err("bad L"))?),
                _ => return Err(err(&format!("unknown field {kv}"))),
            }
        }
        return build_truncated_model(
            &alphabet.ok_or_else(|| err("missing alphabet"))?,
            len.ok_or_else(|| err("missing L"))?,
        );
    }
    let (m, rel) = parse_monoid_description(text)?;
    let rel = rel.unwrap_or_else(|| (0..m.size()).map(|i| (0..m.size()).map(|j| i == j).collect()).collect());
    build_preorder_model(&m, &rel)
}

/// The `elements`/`unit`/`table`/`preorder` form of a description: the
/// monoid, and the preorder when one is given.
pub fn parse_monoid_description(text: &str) -> Result<(FiniteMonoid, Option<Vec<Vec<bool>>>), ModelError> {
    let err = |m: &str| ModelError::Description(m.to_string());
    let lines: Vec<&str> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .collect();
    let mut names: Vec<String> = Vec::new();
    let mut unit = None;
    let mut table = None;
    let mut order = None;
    for line in lines {
        let mut words = line.split_whitespace();
        let key = words.next().unwrap_or("");
        let vals: Vec<&str> = words.collect();
        match key {
            "elements" => names = vals.iter().map(|s| s.to_string()).collect(),
            "unit" => unit = vals.first().map(|s| s.to_string()),
            "table" => table = Some(vals.iter().map(|s| s.to_string()).collect::<Vec<_>>()),
            "preorder" => order = Some(vals.iter().map(|s| *s == "1").collect::<Vec<bool>>()),
            _ => return Err(err(&format!("unknown line '{line}'"))),
        }
    }
    let n = names.len();
    if n == 0 {
        return Err(err("no elements"));
    }
    let idx = |s: &str| {
        names
            .iter()
            .position(|x| x == s)
            .ok_or_else(|| err(&format!("unknown element {s}")))
    };
    let unit = idx(&unit.ok_or_else(|| err("missing unit"))?)?;
    let cells = table.ok_or_else(|| err("missing table"))?;
    if cells.len() != n * n {
        return Err(err("table needs n*n entries"));
    }
    let mut t = vec![vec![0; n]; n];
    for (k, c) in cells.iter().enumerate() {
        t[k / n][k % n] = idx(c)?;
    }
    let rel = match order {
        Some(o) if o.len() == n * n => Some((0..n).map(|i| o[i * n..(i + 1) * n].to_vec()).collect()),
        Some(_) => return Err(err("preorder needs n*n entries")),
        None => None,
    };
    Ok((FiniteMonoid::new(names, t, unit)?, rel))
}

// ---------------------------------------------------------------------------
// Evaluation

/// A formula with variables resolved to slots.
#[derive(Clone, Debug)]
pub enum Compiled {
    Slot(usize),
    One,
    Bot,
    Top,
    Prod(Box<Compiled>, Box<Compiled>),
    Meet(Box<Compiled>, Box<Compiled>),
    Join(Box<Compiled>, Box<Compiled>),
    Dia(Box<Compiled>),
    BBox(Box<Compiled>),
}

impl Compiled {
    pub fn new(f: &Formula, vars: &[String]) -> Result<Compiled, ModelError> {
        let b = |g: &Formula| Compiled::new(g, vars).map(Box::new);
        Ok(match f {
            Formula::Var(v) => Compiled::Slot(vars.iter().position(|x| x == v).ok_or_else(|| ModelError::Unbound(v.clone()))?),
            Formula::One => Compiled::One,
            Formula::Bot => Compiled::Bot,
            Formula::Top => Compiled::Top,
            Formula::Prod(x, y) => Compiled::Prod(b(x)?, b(y)?),
            Formula::Meet(x, y) => Compiled::Meet(b(x)?, b(y)?),
            Formula::Join(x, y) => Compiled::Join(b(x)?, b(y)?),
            Formula::Dia(x) => Compiled::Dia(b(x)?),
            Formula::BBox(x) => Compiled::BBox(b(x)?),
        })
    }

    pub fn eval(&self, m: &Model, vals: &[Elem]) -> Elem {
        match self {
            Compiled::Slot(i) => vals[*i],
            Compiled::One => m.one(),
            Compiled::Bot => m.bot(),
            Compiled::Top => m.top(),
            Compiled::Prod(a, b) => m.prod(a.eval(m, vals), b.eval(m, vals)),
            Compiled::Meet(a, b) => m.meet(a.eval(m, vals), b.eval(m, vals)),
            Compiled::Join(a, b) => m.join(a.eval(m, vals), b.eval(m, vals)),
            Compiled::Dia(a) => m.dia(a.eval(m, vals)),
            Compiled::BBox(a) => m.bbox(a.eval(m, vals)),
        }
    }
}

pub fn eval(m: &Model, a: &Assignment, f: &Formula) -> Result<Elem, ModelError> {
    Ok(match f {
        Formula::Var(v) => *a.get(v).ok_or_else(|| ModelError::Unbound(v.clone()))?,
        Formula::One => m.one(),
        Formula::Bot => m.bot(),
        Formula::Top => m.top(),
        Formula::Prod(x, y) => m.prod(eval(m, a, x)?, eval(m, a, y)?),
        Formula::Meet(x, y) => m.meet(eval(m, a, x)?, eval(m, a, y)?),
        Formula::Join(x, y) => m.join(eval(m, a, x)?, eval(m, a, y)?),
        Formula::Dia(x) => m.dia(eval(m, a, x)?),
        Formula::BBox(x) => m.bbox(eval(m, a, x)?),
    })
}

pub fn eval_struct(m: &Model, a: &Assignment, t: &StructuralTerm) -> Result<Elem, ModelError> {
    eval(m, a, &natural(t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// All assignments, provided there are at most `budget` of them.
    Exhaustive {
        budget: u64,
    },
    Random {
        samples: u64,
        seed: u64,
    },
}

pub const DEFAULT_BUDGET: u64 = 1 << 24;

impl Strategy {
    pub fn exhaustive() -> Strategy {
        Strategy::Exhaustive { budget: DEFAULT_BUDGET }
    }
}

fn decode(mut idx: u64, size: u64, k: usize) -> Vec<Elem> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = idx % size;
        idx /= size;
    }
    out
}

fn total_assignments(size: u64, k: usize) -> u128 {
    (size as u128).pow(k as u32)
}

/// First value vector (in canonical order, or in sampling order) for which
/// `fails` holds.
fn search_assignments<F>(m: &Model, k: usize, strategy: Strategy, fails: F) -> Result<Option<Vec<Elem>>, ModelError>
where
    F: Fn(&[Elem]) -> bool + Sync,
{
    let size = m.size();
    match strategy {
        Strategy::Exhaustive { budget } => {
            let total = total_assignments(size, k);
            if total > budget as u128 {
                return Err(ModelError::Budget(total, budget));
            }
            let total = total as u64;
            Ok((0..total)
                .into_par_iter()
                .map(|i| decode(i, size, k))
                .find_first(|vals| fails(vals)))
        }
        Strategy::Random { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                let vals: Vec<Elem> = (0..k).map(|_| rng.gen_range(0..size)).collect();
                if fails(&vals) {
                    return Ok(Some(vals));
                }
            }
            Ok(None)
        }
    }
}

fn to_assignment(vars: &[String], vals: &[Elem]) -> Assignment {
    vars.iter().cloned().zip(vals.iter().copied()).collect()
}

/// `Ok(None)` when the inequation holds on every checked assignment.
pub fn check_inequation(m: &Model, ineq: &Inequation, strategy: Strategy) -> Result<Option<Assignment>, ModelError> {
    let vars = crate::syntax::vars_of([&ineq.lhs, &ineq.rhs]);
    let l = Compiled::new(&ineq.lhs, &vars)?;
    let r = Compiled::new(&ineq.rhs, &vars)?;
    let hit = search_assignments(m, vars.len(), strategy, |v| !m.leq(l.eval(m, v), r.eval(m, v)))?;
    Ok(hit.map(|v| to_assignment(&vars, &v)))
}

pub fn check_sequent(m: &Model, s: &Sequent, strategy: Strategy) -> Result<Option<Assignment>, ModelError> {
    check_inequation(m, &crate::syntax::sharp(s), strategy)
}

// ---------------------------------------------------------------------------
// Axiom verification

type LawFn = fn(&Model, &[Elem]) -> bool;

/// A law checked over all values of its variables.
pub struct Law {
    pub name: &'static str,
    pub arity: usize,
    pub holds: LawFn,
}

macro_rules! law {
    ($name:expr, $arity:expr, |$m:ident, $v:ident| $body:expr) => {
        Law {
            name: $name,
            arity: $arity,
            holds: |$m: &Model, $v: &[Elem]| $body,
        }
    };
}

/// Bounded distributive lattice, l-monoid, the seven defining identities,
/// then the derived laws (i)–(xv).
pub fn laws() -> Vec<Law> {
    vec![
        law!("meet associative", 3, |m, v| m.meet(m.meet(v[0], v[1]), v[2])
            == m.meet(v[0], m.meet(v[1], v[2]))),
        law!("join associative", 3, |m, v| m.join(m.join(v[0], v[1]), v[2])
            == m.join(v[0], m.join(v[1], v[2]))),
        law!("meet commutative", 2, |m, v| m.meet(v[0], v[1]) == m.meet(v[1], v[0])),
        law!("join commutative", 2, |m, v| m.join(v[0], v[1]) == m.join(v[1], v[0])),
        law!("absorption x&(x|y)=x", 2, |m, v| m.meet(v[0], m.join(v[0], v[1])) == v[0]),
        law!("absorption x|(x&y)=x", 2, |m, v| m.join(v[0], m.meet(v[0], v[1])) == v[0]),
        law!("distributive", 3, |m, v| m.meet(v[0], m.join(v[1], v[2]))
            == m.join(m.meet(v[0], v[1]), m.meet(v[0], v[2]))),
        law!("bottom", 1, |m, v| m.meet(m.bot(), v[0]) == m.bot()),
        law!("top", 1, |m, v| m.join(m.top(), v[0]) == m.top()),
        law!("product associative", 3, |m, v| m.prod(m.prod(v[0], v[1]), v[2])
            == m.prod(v[0], m.prod(v[1], v[2]))),
        law!("unit", 1, |m, v| m.prod(m.one(), v[0]) == v[0] && m.prod(v[0], m.one()) == v[0]),
        law!("product distributes over join (left)", 3, |m, v| m.prod(v[0], m.join(v[1], v[2]))
            == m.join(m.prod(v[0], v[1]), m.prod(v[0], v[2]))),
        law!("product distributes over join (right)", 3, |m, v| m.prod(m.join(v[1], v[2]), v[0])
            == m.join(m.prod(v[1], v[0]), m.prod(v[2], v[0]))),
        law!("bottom absorbing", 1, |m, v| m.prod(v[0], m.bot()) == m.bot()
            && m.prod(m.bot(), v[0]) == m.bot()),
        law!("(1) x <= dia x", 1, |m, v| m.leq(v[0], m.dia(v[0]))),
        law!("(2) dia dia x = dia x", 1, |m, v| m.dia(m.dia(v[0])) == m.dia(v[0])),
        law!("(3) dia (x|y) = dia x | dia y", 2, |m, v| m.dia(m.join(v[0], v[1]))
            == m.join(m.dia(v[0]), m.dia(v[1]))),
        law!("(4) box (x&y) = box x & box y", 2, |m, v| m.bbox(m.meet(v[0], v[1]))
            == m.meet(m.bbox(v[0]), m.bbox(v[1]))),
        law!("(5) dia (x*y) <= dia x * dia y", 2, |m, v| m
            .leq(m.dia(m.prod(v[0], v[1])), m.prod(m.dia(v[0]), m.dia(v[1])))),
        law!("(6) dia box x <= x", 1, |m, v| m.leq(m.dia(m.bbox(v[0])), v[0])),
        law!("(7) x <= box dia x", 1, |m, v| m.leq(v[0], m.bbox(m.dia(v[0])))),
        law!("(i) box x <= x", 1, |m, v| m.leq(m.bbox(v[0]), v[0])),
        law!("(ii) box box x = box x", 1, |m, v| m.bbox(m.bbox(v[0])) == m.bbox(v[0])),
        law!("(iii) box (box x * box y) = box x * box y", 2, |m, v| {
            let p = m.prod(m.bbox(v[0]), m.bbox(v[1]));
            m.bbox(p) == p
        }),
        law!("(iv) dia box x = box x", 1, |m, v| m.dia(m.bbox(v[0])) == m.bbox(v[0])),
        law!("(v) dia bot = bot", 0, |m, _v| m.dia(m.bot()) == m.bot()),
        law!("(vi) dia top = top", 0, |m, _v| m.dia(m.top()) == m.top()),
        law!("(vii) box bot = bot", 0, |m, _v| m.bbox(m.bot()) == m.bot()),
        law!("(viii) box top = top", 0, |m, _v| m.bbox(m.top()) == m.top()),
        law!("(ix) dia (x&y) <= dia x & dia y", 2, |m, v| m
            .leq(m.dia(m.meet(v[0], v[1])), m.meet(m.dia(v[0]), m.dia(v[1])))),
        law!("(x) box x | box y <= box (x|y)", 2, |m, v| m
            .leq(m.join(m.bbox(v[0]), m.bbox(v[1])), m.bbox(m.join(v[0], v[1])))),
        law!("(xi) box dia x = dia x", 1, |m, v| m.bbox(m.dia(v[0])) == m.dia(v[0])),
        law!("(xii) dia (dia x * dia y) = dia x * dia y", 2, |m, v| {
            let p = m.prod(m.dia(v[0]), m.dia(v[1]));
            m.dia(p) == p
        }),
        law!("(xiii) dia (dia x & dia y) = dia x & dia y", 2, |m, v| {
            let p = m.meet(m.dia(v[0]), m.dia(v[1]));
            m.dia(p) == p
        }),
        law!("(xiv) box (box x | box y) = box x | box y", 2, |m, v| {
            let p = m.join(m.bbox(v[0]), m.bbox(v[1]));
            m.bbox(p) == p
        }),
        law!("(xv) box x * box y <= box (x*y)", 2, |m, v| m
            .leq(m.prod(m.bbox(v[0]), m.bbox(v[1])), m.bbox(m.prod(v[0], v[1])))),
    ]
}

#[derive(Clone, Debug)]
pub struct LawResult {
    pub name: &'static str,
    /// First failing values in canonical order.
    pub counterexample: Option<Vec<Elem>>,
}

#[derive(Clone, Debug)]
pub struct AxiomReport {
    pub model: String,
    pub results: Vec<LawResult>,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.counterexample.is_none())
    }

    pub fn failures(&self) -> Vec<&LawResult> {
        self.results.iter().filter(|r| r.counterexample.is_some()).collect()
    }

    pub fn render(&self, m: &Model) -> String {
        let mut out = String::new();
        for r in &self.results {
            match &r.counterexample {
                None => out.push_str(&format!("pass {}\n", r.name)),
                Some(v) => {
                    let vals: Vec<String> = v.iter().map(|e| m.render(*e)).collect();
                    out.push_str(&format!("FAIL {} at ({})\n", r.name, vals.join(", ")));
                }
            }
        }
        out
    }
}

pub fn verify_axioms(m: &Model) -> AxiomReport {
    let results = laws()
        .iter()
        .map(|law| {
            let cex = search_assignments(m, law.arity, Strategy::Exhaustive { budget: u64::MAX }, |v| !(law.holds)(m, v))
                .expect("unbounded budget");
            LawResult {
                name: law.name,
                counterexample: cex,
            }
        })
        .collect();
    AxiomReport {
        model: m.name().to_string(),
        results,
    }
}

/// First pair with `dia a <= b` and `a <= box b` disagreeing.
pub fn residuation_counterexample(m: &Model) -> Option<(Elem, Elem)> {
    let n = m.size();
    (0..n * n)
        .into_par_iter()
        .map(|i| (i / n, i % n))
        .find_first(|&(a, b)| m.leq(m.dia(a), b) != m.leq(a, m.bbox(b)))
}

// ---------------------------------------------------------------------------
// Rule soundness

/// A rule schema to sweep: a primitive rule, or the planted unsound
/// reading of K.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schema {
    Rule(RuleId),
    InvertedK,
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schema::Rule(r) => write!(f, "{}", r.name()),
            Schema::InvertedK => write!(f, "K-inverted"),
        }
    }
}

/// A context `Γ{·}`: a term with a placeholder leaf at `hole`.
#[derive(Clone, Debug)]
pub struct Context {
    pub term: StructuralTerm,
    pub hole: Position,
}

impl Context {
    pub fn plug(&self, t: StructuralTerm) -> StructuralTerm {
        crate::syntax::replace_one(&self.term, &self.hole, t).expect("hole is valid")
    }
}

fn at(v: &str) -> StructuralTerm {
    StructuralTerm::Atom(var(v))
}

/// Contexts of depth at most 2 over the context variables `c1`, `c2`.
pub fn contexts() -> Vec<Context> {
    let hole = || Context {
        term: StructuralTerm::Eps,
        hole: vec![],
    };
    let wrap = |inner: &Context, cv: &str| -> Vec<Context> {
        let t = inner.term.clone();
        let with = |term: StructuralTerm, first: u8| {
            let mut p = vec![first];
            p.extend(inner.hole.iter().copied());
            Context { term, hole: p }
        };
        vec![
            with(StructuralTerm::comma(t.clone(), at(cv)), 0),
            with(StructuralTerm::comma(at(cv), t.clone()), 1),
            with(StructuralTerm::cap(t.clone(), at(cv)), 0),
            with(StructuralTerm::cap(at(cv), t.clone()), 1),
            with(StructuralTerm::angle(t), 0),
        ]
    };
    let mut out = vec![hole()];
    let depth1 = wrap(&hole(), "c1");
    out.extend(depth1.iter().cloned());
    for inner in &depth1 {
        let uses_c1 = inner.term.leaf_formulas().iter().any(|f| **f == var("c1"));
        out.extend(wrap(inner, if uses_c1 { "c2" } else { "c1" }));
    }
    out
}

/// One instance of a schema: premises and conclusion.
#[derive(Clone, Debug)]
pub struct Instance {
    pub premises: Vec<Sequent>,
    pub conclusion: Sequent,
}

fn seq(ant: StructuralTerm, succ: Formula) -> Sequent {
    Sequent::new(ant, succ)
}

fn sub_pos(base: &[u8], rest: &[u8]) -> Position {
    let mut p = base.to_vec();
    p.extend_from_slice(rest);
    p
}

/// Instantiates a schema in context `c` with atomic metavariables
/// `d1 d2 d3` (structures) and `p q r` (formulas).
pub fn instantiate(schema: Schema, c: &Context) -> Instance {
    let r = var("r");
    let (p, q) = (var("p"), var("q"));
    let sa = |v: &str| at(v);
    let app = |rule: RuleId, ctx: Position| RuleApp::new(rule, ctx);
    let hole = c.hole.clone();
    let unary = |rule: RuleId, pattern: StructuralTerm| -> Instance {
        let prem = seq(c.plug(pattern), r.clone());
        let mut a = app(rule, hole.clone());
        if rule == RuleId::CapW1 {
            a.aux = Some(Aux::Struct(sa("d2")));
        }
        let concl = apply_rule(&a, std::slice::from_ref(&prem)).expect("schema instance");
        Instance {
            premises: vec![prem],
            conclusion: concl,
        }
    };
    let gamma = c.plug(sa("d1"));
    let root_unary = |rule: RuleId, prem: Sequent, aux: Option<Aux>| -> Instance {
        let mut a = app(rule, vec![]);
        a.aux = aux;
        let concl = apply_rule(&a, std::slice::from_ref(&prem)).expect("schema instance");
        Instance {
            premises: vec![prem],
            conclusion: concl,
        }
    };
    let rule = match schema {
        Schema::InvertedK => {
            let prem = seq(c.plug(StructuralTerm::angle(StructuralTerm::comma(sa("d1"), sa("d2")))), r.clone());
            let concl = seq(
                c.plug(StructuralTerm::comma(
                    StructuralTerm::angle(sa("d1")),
                    StructuralTerm::angle(sa("d2")),
                )),
                r,
            );
            return Instance {
                premises: vec![prem],
                conclusion: concl,
            };
        }
        Schema::Rule(rule) => rule,
    };
    use RuleId::*;
    use StructuralTerm as S;
    match rule {
        OAL2r => unary(rule, S::comma(S::comma(sa("d1"), sa("d2")), sa("d3"))),
        OAR2l => unary(rule, S::comma(sa("d1"), S::comma(sa("d2"), sa("d3")))),
        CapAL2r => unary(rule, S::cap(S::cap(sa("d1"), sa("d2")), sa("d3"))),
        CapAR2l => unary(rule, S::cap(sa("d1"), S::cap(sa("d2"), sa("d3")))),
        OEps | EpsO | CapW1 | BboxL => unary(rule, sa("d1")),
        CapE => unary(rule, S::cap(sa("d1"), sa("d2"))),
        CapC => unary(rule, S::cap(sa("d1"), sa("d1"))),
        K => unary(rule, S::comma(S::angle(sa("d1")), S::angle(sa("d2")))),
        T | Four => unary(rule, S::angle(sa("d1"))),
        ProdL => unary(rule, S::comma(S::Atom(p), S::Atom(q))),
        MeetL => unary(rule, S::cap(S::Atom(p), S::Atom(q))),
        DiaL => unary(rule, S::angle(S::Atom(p))),
        OneL => unary(rule, S::Eps),
        JoinL => {
            let p1 = seq(c.plug(S::Atom(p)), r.clone());
            let p2 = seq(c.plug(S::Atom(q)), r);
            let concl = apply_rule(&app(JoinL, hole), &[p1.clone(), p2.clone()]).expect("schema instance");
            Instance {
                premises: vec![p1, p2],
                conclusion: concl,
            }
        }
        Cut | Mix => {
            let left = seq(sa("d1"), p.clone());
            let (right, occ) = if rule == Cut {
                (seq(c.plug(S::Atom(p)), r), vec![hole])
            } else {
                (
                    seq(c.plug(S::comma(S::Atom(p.clone()), S::Atom(p))), r),
                    vec![sub_pos(&hole, &[0]), sub_pos(&hole, &[1])],
                )
            };
            let mut a = app(rule, vec![]);
            a.occ = occ;
            let concl = apply_rule(&a, &[left.clone(), right.clone()]).expect("schema instance");
            Instance {
                premises: vec![left, right],
                conclusion: concl,
            }
        }
        ProdR => {
            let p1 = seq(gamma, p);
            let p2 = seq(sa("d2"), q);
            let concl = apply_rule(&app(ProdR, vec![]), &[p1.clone(), p2.clone()]).expect("schema instance");
            Instance {
                premises: vec![p1, p2],
                conclusion: concl,
            }
        }
        MeetR => {
            let p1 = seq(gamma.clone(), p);
            let p2 = seq(gamma, q);
            let concl = apply_rule(&app(MeetR, vec![]), &[p1.clone(), p2.clone()]).expect("schema instance");
            Instance {
                premises: vec![p1, p2],
                conclusion: concl,
            }
        }
        JoinR1 | JoinR2 => root_unary(rule, seq(gamma, p), Some(Aux::Formula(q))),
        DiaR | ProdOne | OneProd => root_unary(rule, seq(gamma, p), None),
        BboxR => root_unary(rule, seq(S::angle(gamma), p), None),
        Init => Instance {
            premises: vec![],
            conclusion: seq(S::Atom(p.clone()), p),
        },
        OneR => Instance {
            premises: vec![],
            conclusion: seq(S::Eps, Formula::One),
        },
        TopR => Instance {
            premises: vec![],
            conclusion: seq(gamma, Formula::Top),
        },
        BotL => Instance {
            premises: vec![],
            conclusion: seq(c.plug(S::Atom(Formula::Bot)), r),
        },
    }
}

#[derive(Clone, Debug)]
pub struct SoundnessFailure {
    pub instance: Instance,
    pub assignment: Assignment,
}

#[derive(Clone, Debug)]
pub struct SoundnessReport {
    pub schema: Schema,
    pub instances: usize,
    pub assignments: u64,
    pub failure: Option<SoundnessFailure>,
}

impl SoundnessReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

fn instance_vars(inst: &Instance) -> Vec<String> {
    let mut vars = Vec::new();
    for s in inst.premises.iter().chain(std::iter::once(&inst.conclusion)) {
        for v in s.vars() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
    }
    vars
}

/// Premises holding under an assignment must make the conclusion hold under
/// the same assignment, for every context of [`contexts`].
pub fn check_rule_soundness(m: &Model, schema: Schema, strategy: Strategy) -> Result<SoundnessReport, ModelError> {
    let ctxs = contexts();
    let mut assignments = 0u64;
    for (ci, c) in ctxs.iter().enumerate() {
        let inst = instantiate(schema, c);
        let vars = instance_vars(&inst);
        let compile = |s: &Sequent| -> Result<(Compiled, Compiled), ModelError> {
            Ok((Compiled::new(&natural(&s.ant), &vars)?, Compiled::new(&s.succ, &vars)?))
        };
        let prems: Vec<(Compiled, Compiled)> = inst.premises.iter().map(compile).collect::<Result<_, _>>()?;
        let concl = compile(&inst.conclusion)?;
        let strat = match strategy {
            Strategy::Random { samples, seed } => Strategy::Random {
                samples,
                seed: seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(ci as u64),
            },
            s => s,
        };
        assignments += match strat {
            Strategy::Exhaustive { .. } => total_assignments(m.size(), vars.len()) as u64,
            Strategy::Random { samples, .. } => samples,
        };
        let hit = search_assignments(m, vars.len(), strat, |v| {
            prems.iter().all(|(l, r)| m.leq(l.eval(m, v), r.eval(m, v))) && !m.leq(concl.0.eval(m, v), concl.1.eval(m, v))
        })?;
        if let Some(v) = hit {
            return Ok(SoundnessReport {
                schema,
                instances: ci + 1,
                assignments,
                failure: Some(SoundnessFailure {
                    instance: inst,
                    assignment: to_assignment(&vars, &v),
                }),
            });
        }
    }
    Ok(SoundnessReport {
        schema,
        instances: ctxs.len(),
        assignments,
        failure: None,
    })
}

// ---------------------------------------------------------------------------
// Countermodel search

#[derive(Clone, Debug)]
pub struct Countermodel {
    pub model: Model,
    pub assignment: Assignment,
    /// Monoid size for preorder models, `None` for truncated ones.
    pub monoid_size: Option<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct SearchStats {
    pub models_tried: usize,
    pub skipped_for_budget: usize,
}

/// Tries truncated models (Σ={a} then Σ={a,b}, L up to `max_len`), then
/// preorder models over every monoid of size up to `max_monoid_size` with
/// every RDP preorder, densest first. Models whose exhaustive check would
/// exceed `budget` assignments are skipped.
pub fn countermodel_search(ineq: &Inequation, max_monoid_size: usize, max_len: usize, budget: u64) -> (Option<Countermodel>, SearchStats) {
    let mut stats = SearchStats::default();
    let strategy = Strategy::Exhaustive { budget };
    let try_model = |m: Model, size: Option<usize>, stats: &mut SearchStats| -> Option<Countermodel> {
        stats.models_tried += 1;
        match check_inequation(&m, ineq, strategy) {
            Ok(Some(a)) => Some(Countermodel {
                model: m,
                assignment: a,
                monoid_size: size,
            }),
            Ok(None) => None,
            Err(_) => {
                stats.skipped_for_budget += 1;
                None
            }
        }
    };
    for alphabet in [&['a'][..], &['a', 'b'][..]] {
        for l in 0..=max_len {
            if let Ok(m) = build_truncated_model(alphabet, l) {
                if let Some(c) = try_model(m, None, &mut stats) {
                    return (Some(c), stats);
                }
            }
        }
    }
    for n in 1..=max_monoid_size.min(MAX_BASE) {
        let monoids = if n <= 3 {
            algebra::enumerate_monoids_up_to_iso(n)
        } else {
            algebra::enumerate_monoids(n)
        };
        let preorders = algebra::enumerate_preorders(n);
        for mon in &monoids {
            for rel in &preorders {
                if let Ok(m) = build_preorder_model(mon, rel) {
                    let m = named(m, &preorder_model_name(mon, rel));
                    if let Some(c) = try_model(m, Some(n), &mut stats) {
                        return (Some(c), stats);
                    }
                }
            }
        }
    }
    (None, stats)
}

fn preorder_model_name(mon: &FiniteMonoid, rel: &[Vec<bool>]) -> String {
    let z2 = FiniteMonoid::z2();
    if mon.table == z2.table && mon.unit == z2.unit {
        if rel.iter().flatten().all(|b| *b) {
            return "Z2-total".into();
        }
        if rel
            .iter()
            .enumerate()
            .all(|(i, r)| r.iter().enumerate().all(|(j, b)| *b == (i == j)))
        {
            return "Z2-discrete".into();
        }
    }
    format!("monoid {} / preorder {}", table_label(mon), relation_label(rel))
}

fn table_label(m: &FiniteMonoid) -> String {
    m.table
        .iter()
        .map(|r| r.iter().map(|&v| m.names[v].as_str()).collect::<Vec<_>>().join(""))
        .collect::<Vec<_>>()
        .join("|")
}

fn relation_label(rel: &[Vec<bool>]) -> String {
    rel.iter()
        .map(|r| r.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>())
        .collect::<Vec<_>>()
        .join("|")
}
