//! Finite monoids: divisibility, the Riesz decomposition property,
//! cancellativity and conicality, and the integer self-map witnesses used to
//! separate the prefix-closure algebra from the whole variety.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("table is not {0}x{0}")]
    Shape(usize),
    #[error("table entry out of range at ({0},{1})")]
    Range(usize, usize),
    #[error("unit law fails at element {0}")]
    Unit(usize),
    #[error("associativity fails at ({0},{1},{2})")]
    Assoc(usize, usize, usize),
}

/// A monoid given by its multiplication table over `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteMonoid {
    pub names: Vec<String>,
    pub table: Vec<Vec<usize>>,
    pub unit: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl FiniteMonoid {
    pub fn new(names: Vec<String>, table: Vec<Vec<usize>>, unit: usize) -> Result<Self, AlgebraError> {
        let n = names.len();
        if table.len() != n || table.iter().any(|r| r.len() != n) || unit >= n {
            return Err(AlgebraError::Shape(n));
        }
        for (i, row) in table.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v >= n {
                    return Err(AlgebraError::Range(i, j));
                }
            }
        }
        let m = FiniteMonoid { names, table, unit };
        m.check_laws()?;
        Ok(m)
    }

    fn check_laws(&self) -> Result<(), AlgebraError> {
        let n = self.size();
        for a in 0..n {
            if self.mul(self.unit, a) != a || self.mul(a, self.unit) != a {
                return Err(AlgebraError::Unit(a));
            }
        }
        for a in 0..n {
            for b in 0..n {
                let ab = self.mul(a, b);
                for c in 0..n {
                    if self.mul(ab, c) != self.mul(a, self.mul(b, c)) {
                        return Err(AlgebraError::Assoc(a, b, c));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// `({1,a}, xor)`.
    pub fn z2() -> FiniteMonoid {
        FiniteMonoid::new(vec!["1".into(), "a".into()], vec![vec![0, 1], vec![1, 0]], 0).unwrap()
    }

    /// Two-element join-semilattice with zero as unit.
    pub fn semilattice_with_zero() -> FiniteMonoid {
        FiniteMonoid::new(vec!["0".into(), "1".into()], vec![vec![0, 1], vec![1, 1]], 0).unwrap()
    }

    pub fn trivial() -> FiniteMonoid {
        FiniteMonoid::new(vec!["1".into()], vec![vec![0]], 0).unwrap()
    }

    /// Words of length at most `max_len` over `alphabet` plus an absorbing
    /// overflow element `#` that stands for every longer word.
    pub fn truncated_free(alphabet: &[char], max_len: usize) -> FiniteMonoid {
        let words = words_upto(alphabet, max_len);
        let n = words.len() + 1;
        let over = words.len();
        let mut table = vec![vec![over; n]; n];
        for (i, u) in words.iter().enumerate() {
            for (j, v) in words.iter().enumerate() {
                let uv = format!("{u}{v}");
                if let Some(k) = words.iter().position(|w| *w == uv) {
                    table[i][j] = k;
                }
            }
        }
        let mut names: Vec<String> = words
            .iter()
            .map(|w| if w.is_empty() { "ε".to_string() } else { w.clone() })
            .collect();
        names.push("#".into());
        FiniteMonoid::new(names, table, 0).unwrap()
    }

    /// `rel[b][a]` holds iff `b` divides `a` on the given side.
    pub fn divisibility(&self, side: Side) -> Vec<Vec<bool>> {
        let n = self.size();
        (0..n).map(|b| (0..n).map(|a| divides(self, side, b, a)).collect()).collect()
    }
}

impl fmt::Display for FiniteMonoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "elements {}", self.names.join(" "))?;
        writeln!(f, "unit {}", self.names[self.unit])?;
        let cells: Vec<&str> = self.table.iter().flatten().map(|&v| self.names[v].as_str()).collect();
        write!(f, "table {}", cells.join(" "))
    }
}

/// All words over `alphabet` of length at most `max_len`, shortlex order.
pub fn words_upto(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut layer = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for c in alphabet {
                next.push(format!("{w}{c}"));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// `a` divides `b`: on the left, `b = a·c`; on the right, `b = c·a`.
pub fn divides(m: &FiniteMonoid, side: Side, a: usize, b: usize) -> bool {
    (0..m.size()).any(|c| match side {
        Side::Left => m.mul(a, c) == b,
        Side::Right => m.mul(c, a) == b,
    })
}

pub fn is_prefix_str(a: &str, b: &str) -> bool {
    b.starts_with(a)
}

/// For `w` a prefix of `uv`, the split `w = u'v'` with `u'` a prefix of `u`,
/// `v'` a prefix of `v` and `u'` as long as possible.
pub fn rdp_decompose(u: &str, v: &str, w: &str) -> Option<(String, String)> {
    let uv = format!("{u}{v}");
    if !uv.starts_with(w) {
        return None;
    }
    let cut = w.len().min(u.len());
    Some((w[..cut].to_string(), w[cut..].to_string()))
}

/// Every split of `w` into a prefix of `u` followed by a prefix of `v`.
pub fn rdp_all_splits(u: &str, v: &str, w: &str) -> Vec<(String, String)> {
    (0..=w.len())
        .filter(|&i| w.is_char_boundary(i))
        .map(|i| (&w[..i], &w[i..]))
        .filter(|(a, b)| u.starts_with(a) && v.starts_with(b))
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

pub fn is_preorder(rel: &[Vec<bool>]) -> bool {
    let n = rel.len();
    (0..n).all(|i| rel[i][i]) && (0..n).all(|i| (0..n).all(|j| !rel[i][j] || (0..n).all(|k| !rel[j][k] || rel[i][k])))
}

/// A triple `b ≼ a1·a2` with no decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RdpWitness {
    pub b: usize,
    pub a1: usize,
    pub a2: usize,
}

/// `rel[b][a]` means `b ≼ a`. Checks `b ≼ a1·a2 ⇒ ∃ b1 ≼ a1, b2 ≼ a2 with b = b1·b2`.
pub fn check_rdp(m: &FiniteMonoid, rel: &[Vec<bool>]) -> Result<(), RdpWitness> {
    let n = m.size();
    for a1 in 0..n {
        for a2 in 0..n {
            let p = m.mul(a1, a2);
            for b in 0..n {
                if !rel[b][p] {
                    continue;
                }
                let ok = (0..n).any(|b1| rel[b1][a1] && (0..n).any(|b2| rel[b2][a2] && m.mul(b1, b2) == b));
                if !ok {
                    return Err(RdpWitness { b, a1, a2 });
                }
            }
        }
    }
    Ok(())
}

/// (cancellative, conical).
pub fn cancellative_conical(m: &FiniteMonoid) -> (bool, bool) {
    let n = m.size();
    let mut canc = true;
    'outer: for z in 0..n {
        for x in 0..n {
            for y in 0..n {
                if x != y && (m.mul(z, x) == m.mul(z, y) || m.mul(x, z) == m.mul(y, z)) {
                    canc = false;
                    break 'outer;
                }
            }
        }
    }
    let conical = (0..n).all(|x| (0..n).all(|y| m.mul(x, y) != m.unit || (x == m.unit && y == m.unit)));
    (canc, conical)
}

/// Monoids on `0..n` with unit 0, in lexicographic order of the non-unit
/// products (row-major, smallest value first).
pub fn enumerate_monoids(n: usize) -> Vec<FiniteMonoid> {
    if n == 0 {
        return vec![];
    }
    let free = (n - 1) * (n - 1);
    let names: Vec<String> = (0..n).map(default_name).collect();
    let mut out = Vec::new();
    let mut digits = vec![0usize; free];
    loop {
        let mut table = vec![vec![0; n]; n];
        for (i, row) in table.iter_mut().enumerate() {
            row[0] = i;
        }
        for j in 0..n {
            table[0][j] = j;
        }
        for (k, &d) in digits.iter().enumerate() {
            table[1 + k / (n - 1)][1 + k % (n - 1)] = d;
        }
        if let Ok(m) = FiniteMonoid::new(names.clone(), table, 0) {
            out.push(m);
        }
        // Increment with the first entry most significant.
        let mut pos = free;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < n {
                break;
            }
            digits[pos] = 0;
        }
    }
}

fn default_name(i: usize) -> String {
    match i {
        0 => "1".into(),
        1 => "a".into(),
        2 => "b".into(),
        3 => "c".into(),
        _ => format!("m{i}"),
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Smallest relabelled table over unit-fixing permutations.
pub fn canonical_table(m: &FiniteMonoid) -> Vec<Vec<usize>> {
    let n = m.size();
    let rest: Vec<usize> = (1..n).collect();
    let mut best: Option<Vec<Vec<usize>>> = None;
    for p in permutations(&rest) {
        let mut perm = vec![0];
        perm.extend(p);
        // perm maps old -> new
        let mut inv = vec![0; n];
        for (old, &new) in perm.iter().enumerate() {
            inv[new] = old;
        }
        let t: Vec<Vec<usize>> = (0..n).map(|i| (0..n).map(|j| perm[m.mul(inv[i], inv[j])]).collect()).collect();
        if best.as_ref().map_or(true, |b| t < *b) {
            best = Some(t);
        }
    }
    best.unwrap_or_default()
}

/// `enumerate_monoids` with isomorphic copies removed (first representative kept).
pub fn enumerate_monoids_up_to_iso(n: usize) -> Vec<FiniteMonoid> {
    let mut seen = HashSet::new();
    enumerate_monoids(n)
        .into_iter()
        .filter(|m| seen.insert(canonical_table(m)))
        .collect()
}

/// Preorders on `0..n` that are reflexive and transitive, densest first.
pub fn enumerate_preorders(n: usize) -> Vec<Vec<Vec<bool>>> {
    let off: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    let total = 1u64 << off.len();
    // Counting down from all-ones visits denser relations first within the
    // bitmask order; a stable sort by density then fixes the order exactly.
    for mask in (0..total).rev() {
        let mut rel = vec![vec![false; n]; n];
        for (i, row) in rel.iter_mut().enumerate() {
            row[i] = true;
        }
        for (k, &(i, j)) in off.iter().enumerate() {
            if mask >> k & 1 == 1 {
                rel[i][j] = true;
            }
        }
        if is_preorder(&rel) {
            out.push((mask.count_ones(), rel));
        }
    }
    out.sort_by(|a, b| b.0.cmp(&a.0));
    out.into_iter().map(|(_, r)| r).collect()
}

// ---------------------------------------------------------------------------
// Integer self-maps

/// An integer function tabulated on `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct IntFunction {
    pub tag: &'static str,
    pub lo: i64,
    pub values: Vec<i64>,
}

impl IntFunction {
    pub fn tabulate(tag: &'static str, lo: i64, hi: i64, f: impl Fn(i64) -> i64) -> IntFunction {
        IntFunction {
            tag,
            lo,
            values: (lo..=hi).map(f).collect(),
        }
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn apply(&self, n: i64) -> Option<i64> {
        if n < self.lo || n > self.hi() {
            return None;
        }
        Some(self.values[(n - self.lo) as usize])
    }

    /// `self ∘ inner`, defined where the inner value stays in range.
    pub fn compose(&self, inner: &IntFunction) -> Vec<Option<i64>> {
        (inner.lo..=inner.hi())
            .map(|n| inner.apply(n).and_then(|m| self.apply(m)))
            .collect()
    }

    pub fn image(&self) -> BTreeSet<i64> {
        self.values.iter().copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndzReport {
    pub lo: i64,
    pub hi: i64,
    pub fg_constant_one: bool,
    pub kk_constant_one: bool,
    pub image_f: BTreeSet<i64>,
    pub image_k: BTreeSet<i64>,
    /// `k ∘ k' = f ∘ g` on the sample, so `k` left-divides `f ∘ g` there.
    pub k_divides_fg: bool,
    /// `image(f) ⊄ image(k)`, so no `h` has `k ∘ h = f`.
    pub no_h_with_kh_eq_f: bool,
    /// `image(k) ⊄ image(f)`, so no `m` has `k = f ∘ m`.
    pub no_m_with_k_eq_fm: bool,
}

impl EndzReport {
    pub fn all_pass(&self) -> bool {
        self.fg_constant_one
            && self.kk_constant_one
            && self.image_f == BTreeSet::from([1, 2])
            && self.image_k == BTreeSet::from([0, 1])
            && self.k_divides_fg
            && self.no_h_with_kh_eq_f
            && self.no_m_with_k_eq_fm
    }
}

pub fn endz_f(lo: i64, hi: i64) -> IntFunction {
    IntFunction::tabulate("f", lo, hi, |n| if n <= 0 { 1 } else { 2 })
}
pub fn endz_g(lo: i64, hi: i64) -> IntFunction {
    IntFunction::tabulate("g", lo, hi, |_| -1)
}
pub fn endz_k(lo: i64, hi: i64) -> IntFunction {
    IntFunction::tabulate("k", lo, hi, |n| if n <= 0 { 0 } else { 1 })
}
pub fn endz_k_prime(lo: i64, hi: i64) -> IntFunction {
    IntFunction::tabulate("k'", lo, hi, |_| 2)
}

/// Sample-level evidence on `[lo, hi]`; the interval must contain -1, 1 and 2.
pub fn endz_witness_check(lo: i64, hi: i64) -> EndzReport {
    let (f, g, k, kp) = (endz_f(lo, hi), endz_g(lo, hi), endz_k(lo, hi), endz_k_prime(lo, hi));
    let fg = f.compose(&g);
    let kk = k.compose(&kp);
    let image_f = f.image();
    let image_k = k.image();
    EndzReport {
        lo,
        hi,
        fg_constant_one: fg.iter().all(|v| *v == Some(1)),
        kk_constant_one: kk.iter().all(|v| *v == Some(1)),
        k_divides_fg: fg == kk,
        no_h_with_kh_eq_f: !image_f.is_subset(&image_k),
        no_m_with_k_eq_fm: !image_k.is_subset(&image_f),
        image_f,
        image_k,
    }
}
