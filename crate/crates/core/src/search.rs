//! Bounded backward proof search for the cut-free calculus.
//!
//! Iterative deepening over derivation height. At each sequent: axioms;
//! then the first applicable invertible rule (left logical rules, ∧R, ◻R),
//! committing to it; otherwise right rules, structural rules read
//! backwards, T and finally ⊓C. A branch never revisits a sequent on its own
//! ancestor path.

use std::collections::{HashMap, HashSet};

use crate::calculus::{backward_instances, BackwardLimits, Derivation, RuleApp, RuleId};
use crate::syntax::{flat, Identity, Sequent};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_depth: usize,
    /// Backward ⊓C steps allowed on one branch.
    pub max_capc: usize,
    /// Backward T steps allowed on one branch.
    pub max_t: usize,
    pub t_focus: bool,
    pub max_nodes: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_depth: 12,
            max_capc: 1,
            max_t: 3,
            t_focus: true,
            max_nodes: 500_000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes: usize,
    /// Deepest iteration bound completed or reached.
    pub depth_reached: usize,
    /// The node budget ran out before the depth bound did.
    pub node_limit_hit: bool,
}

#[derive(Clone, Debug)]
pub enum SearchResult {
    Found(Derivation, SearchStats),
    Exhausted(SearchStats),
}

impl SearchResult {
    pub fn derivation(&self) -> Option<&Derivation> {
        match self {
            SearchResult::Found(d, _) => Some(d),
            SearchResult::Exhausted(_) => None,
        }
    }

    pub fn stats(&self) -> &SearchStats {
        match self {
            SearchResult::Found(_, s) | SearchResult::Exhausted(s) => s,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, SearchResult::Found(..))
    }
}

const AXIOMS: [RuleId; 4] = [RuleId::Init, RuleId::OneR, RuleId::TopR, RuleId::BotL];
const INVERTIBLE_LEFT: [RuleId; 5] = [RuleId::ProdL, RuleId::MeetL, RuleId::DiaL, RuleId::OneL, RuleId::JoinL];
const RIGHT: [RuleId; 6] = [
    RuleId::ProdR,
    RuleId::JoinR1,
    RuleId::JoinR2,
    RuleId::DiaR,
    RuleId::ProdOne,
    RuleId::OneProd,
];
const STRUCTURAL: [RuleId; 11] = [
    RuleId::K,
    RuleId::BboxL,
    RuleId::Four,
    RuleId::CapW1,
    RuleId::CapE,
    RuleId::OEps,
    RuleId::EpsO,
    RuleId::OAL2r,
    RuleId::OAR2l,
    RuleId::CapAL2r,
    RuleId::CapAR2l,
];

struct Searcher {
    budget: SearchBudget,
    limits: BackwardLimits,
    nodes: usize,
    out_of_nodes: bool,
    path: HashSet<Sequent>,
    failed: HashMap<(Sequent, usize, usize, usize), ()>,
}

impl Searcher {
    fn new(budget: SearchBudget) -> Searcher {
        Searcher {
            budget,
            limits: BackwardLimits {
                t_focus: budget.t_focus,
                allow_capc: true,
            },
            nodes: 0,
            out_of_nodes: false,
            path: HashSet::new(),
            failed: HashMap::new(),
        }
    }

    /// A derivation of `s` of height at most `depth`.
    fn dfs(&mut self, s: &Sequent, depth: usize, t_left: usize, c_left: usize) -> Option<Derivation> {
        if depth == 0 || self.out_of_nodes {
            return None;
        }
        self.nodes += 1;
        if self.nodes > self.budget.max_nodes {
            self.out_of_nodes = true;
            return None;
        }
        for r in AXIOMS {
            if let Some((app, _)) = backward_instances(s, r, self.limits).into_iter().next() {
                return Some(leaf(s, app));
            }
        }
        if depth == 1 {
            return None;
        }
        let key = (s.clone(), depth, t_left, c_left);
        if self.failed.contains_key(&key) {
            return None;
        }
        self.path.insert(s.clone());
        let found = self.expand(s, depth, t_left, c_left);
        self.path.remove(s);
        if found.is_none() && !self.out_of_nodes {
            self.failed.insert(key, ());
        }
        found
    }

    fn expand(&mut self, s: &Sequent, depth: usize, t_left: usize, c_left: usize) -> Option<Derivation> {
        // Invertible rules: commit to the first instance.
        let mut eager: Option<(RuleApp, Vec<Sequent>)> = None;
        for r in INVERTIBLE_LEFT {
            let inst = backward_instances(s, r, self.limits);
            if let Some(first) = inst.into_iter().min_by(|a, b| a.0.ctx.cmp(&b.0.ctx)) {
                if eager.as_ref().map_or(true, |e| first.0.ctx < e.0.ctx) {
                    eager = Some(first);
                }
            }
        }
        if eager.is_none() {
            for r in [RuleId::MeetR, RuleId::BboxR] {
                if let Some(first) = backward_instances(s, r, self.limits).into_iter().next() {
                    eager = Some(first);
                    break;
                }
            }
        }
        if let Some((app, prem)) = eager {
            return self.try_instance(s, app, prem, depth, t_left, c_left);
        }
        for r in RIGHT.iter().chain(STRUCTURAL.iter()) {
            for (app, prem) in backward_instances(s, *r, self.limits) {
                if let Some(d) = self.try_instance(s, app, prem, depth, t_left, c_left) {
                    return Some(d);
                }
                if self.out_of_nodes {
                    return None;
                }
            }
        }
        if t_left > 0 {
            for (app, prem) in backward_instances(s, RuleId::T, self.limits) {
                if let Some(d) = self.try_instance(s, app, prem, depth, t_left - 1, c_left) {
                    return Some(d);
                }
            }
        }
        if c_left > 0 {
            for (app, prem) in backward_instances(s, RuleId::CapC, self.limits) {
                if let Some(d) = self.try_instance(s, app, prem, depth, t_left, c_left - 1) {
                    return Some(d);
                }
            }
        }
        None
    }

    fn try_instance(
        &mut self,
        s: &Sequent,
        app: RuleApp,
        prem: Vec<Sequent>,
        depth: usize,
        t_left: usize,
        c_left: usize,
    ) -> Option<Derivation> {
        if prem.iter().any(|p| self.path.contains(p)) {
            return None;
        }
        let mut subs = Vec::with_capacity(prem.len());
        for p in &prem {
            subs.push(self.dfs(p, depth - 1, t_left, c_left)?);
        }
        Some(Derivation {
            conclusion: s.clone(),
            app,
            premises: subs,
        })
    }
}

fn leaf(s: &Sequent, app: RuleApp) -> Derivation {
    Derivation {
        conclusion: s.clone(),
        app,
        premises: Vec::new(),
    }
}

/// Cut-free derivation of `s` within `b`, or the statistics of the failed
/// attempt. Exhaustion is not a proof of underivability.
pub fn prove(s: &Sequent, b: SearchBudget) -> SearchResult {
    let mut searcher = Searcher::new(b);
    let mut stats = SearchStats::default();
    for depth in 1..=b.max_depth {
        searcher.failed.clear();
        stats.depth_reached = depth;
        if let Some(d) = searcher.dfs(s, depth, b.max_t, b.max_capc) {
            stats.nodes = searcher.nodes;
            return SearchResult::Found(d, stats);
        }
        if searcher.out_of_nodes {
            break;
        }
    }
    stats.nodes = searcher.nodes;
    stats.node_limit_hit = searcher.out_of_nodes;
    SearchResult::Exhausted(stats)
}

/// Runs [`prove`] on each sequent of the identity's translation.
pub fn prove_equation(e: &Identity, b: SearchBudget) -> Vec<(Sequent, SearchResult)> {
    flat(e)
        .into_iter()
        .map(|s| {
            let r = prove(&s, b);
            (s, r)
        })
        .collect()
}

/// Whether some branch of `d` repeats a sequent already on its ancestor path.
pub fn repeats_on_branch(d: &Derivation) -> bool {
    fn go<'a>(d: &'a Derivation, path: &mut Vec<&'a Sequent>) -> bool {
        if path.contains(&&d.conclusion) {
            return true;
        }
        path.push(&d.conclusion);
        let r = d.premises.iter().any(|p| go(p, path));
        path.pop();
        r
    }
    go(d, &mut Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::check_derivation;
    use crate::syntax::{parse_identity, parse_sequent};

    fn found(s: &str) -> Derivation {
        let seq = parse_sequent(s).unwrap();
        match prove(&seq, SearchBudget::default()) {
            SearchResult::Found(d, _) => {
                check_derivation(&d).unwrap();
                assert_eq!(d.conclusion, seq);
                assert!(d.is_cut_free());
                assert!(!repeats_on_branch(&d));
                d
            }
            SearchResult::Exhausted(st) => panic!("{s}: exhausted {st:?}"),
        }
    }

    #[test]
    fn identity_is_a_leaf() {
        let d = found("x |- x");
        assert_eq!(d.height(), 1);
        assert_eq!(d.rule(), RuleId::Init);
    }

    #[test]
    fn finds_box_counit() {
        let d = found("dia box x |- x");
        assert_eq!(d.rules_preorder(), vec![RuleId::DiaL, RuleId::BboxL, RuleId::Init]);
    }

    #[test]
    fn finds_corpus_targets() {
        for s in [
            "x |- dia x",
            "dia dia x |- dia x",
            "dia (x * y) |- (dia x * dia y)",
            "(box x & box y) |- box (x & y)",
            "box (box x * box y) |- (box x * box y)",
            "(x & (y | z)) |- ((x & y) | (x & z))",
        ] {
            found(s);
        }
    }

    #[test]
    fn exhausts_on_dia_one() {
        let r = prove(&parse_sequent("dia 1 |- 1").unwrap(), SearchBudget::default());
        assert!(!r.is_found());
    }

    #[test]
    fn equation_directions() {
        let res = prove_equation(&parse_identity("dia 1 = 1").unwrap(), SearchBudget::default());
        assert_eq!(res.len(), 2);
        assert!(!res[0].1.is_found());
        assert!(res[1].1.is_found());
        let res = prove_equation(&parse_identity("box dia x = dia x").unwrap(), SearchBudget::default());
        assert!(res.iter().all(|(_, r)| r.is_found()));
    }

    #[test]
    fn repeats_detector() {
        let d = crate::calculus::builtin_corpus()["ax1"].clone();
        assert!(!repeats_on_branch(&d));
        let looped = Derivation {
            conclusion: d.conclusion.clone(),
            app: RuleApp::new(RuleId::CapE, vec![]),
            premises: vec![d.clone()],
        };
        assert!(repeats_on_branch(&looped));
    }
}
