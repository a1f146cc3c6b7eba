//! Cut and mix: interchange, rank, and mix elimination.
//!
//! Elimination works on uppermost mixes, leftmost first. For a mix of
//! `d1 : Δ ⊢ φ` into the occurrences `occ` of `d2 : Γ{φ}ₙ ⊢ ψ`:
//!
//! * occurrences that are not principal in the last rule of `d2` are traced
//!   into its premises, mixed there, and the rule is re-applied;
//! * a principal occurrence is handled by first clearing the others, then
//!   walking up `d1`: rules that do not decompose `φ` are re-applied below
//!   the mix inside the context, and a decomposing right rule meets the left
//!   rule of `d2` in a principal reduction on the immediate subformulas.
//!
//! Every mix instance spawned is checked to have strictly smaller rank than
//! the instance that spawned it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::calculus::{
    apply_rule, builtin_corpus, by, by_aux, check_derivation, derived, init, one_r, top_r, Aux, CheckError, Derivation, RuleApp, RuleError,
    RuleId,
};
use crate::syntax::{cp, is_prefix, occurrences_of, random_formula, replace_at, var, Formula, Position, Sequent, StructuralTerm};

/// `⟨cp(φ), p(d1), h(d1) + h(d2)⟩`, compared lexicographically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rank {
    pub cp: usize,
    pub p: u8,
    pub height_sum: usize,
}

impl std::fmt::Display for Rank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "<{},{},{}>", self.cp, self.p, self.height_sum)
    }
}

#[derive(Clone, Debug, Error)]
pub enum TransformError {
    #[error("not a mix node: {0}")]
    NotMix(RuleId),
    #[error("unmatched case({left}/{right}): {detail}")]
    UnmatchedCase { left: RuleId, right: RuleId, detail: String },
    #[error("rank did not decrease: {parent} -> {child} ({schema})")]
    RankNotDecreasing { parent: Rank, child: Rank, schema: String },
    #[error("step {schema} produced an invalid derivation: {err}")]
    InvalidStep { schema: String, err: CheckError },
    #[error("rule application failed during {schema}: {err}")]
    Rule { schema: String, err: RuleError },
}

/// Whether `rule` introduces the main connective of `phi` on the right.
pub fn decomposes(rule: RuleId, phi: &Formula) -> bool {
    use RuleId::*;
    matches!(
        (rule, phi),
        (ProdR | ProdOne | OneProd, Formula::Prod(..))
            | (MeetR, Formula::Meet(..))
            | (JoinR1 | JoinR2, Formula::Join(..))
            | (DiaR, Formula::Dia(_))
            | (BboxR, Formula::BBox(_))
            | (OneR, Formula::One)
            | (TopR, Formula::Top)
    )
}

fn rank_of(d1: &Derivation, d2: &Derivation) -> Rank {
    let phi = &d1.conclusion.succ;
    Rank {
        cp: cp(phi),
        p: if decomposes(d1.app.rule, phi) { 0 } else { 1 },
        height_sum: d1.height() + d2.height(),
    }
}

pub fn rank(node: &Derivation) -> Result<Rank, TransformError> {
    match node.app.rule {
        RuleId::Mix | RuleId::Cut => Ok(rank_of(&node.premises[0], &node.premises[1])),
        r => Err(TransformError::NotMix(r)),
    }
}

/// Replaces every cut by a mix on the same single occurrence.
pub fn cut_as_mix(d: &Derivation) -> Derivation {
    let premises = d.premises.iter().map(cut_as_mix).collect();
    let mut app = d.app.clone();
    if app.rule == RuleId::Cut {
        app.rule = RuleId::Mix;
    }
    Derivation {
        conclusion: d.conclusion.clone(),
        app,
        premises,
    }
}

/// Replaces every mix on `n` occurrences by `n` nested cuts (a mix on no
/// occurrence disappears).
pub fn mix_as_cuts(d: &Derivation) -> Derivation {
    let premises: Vec<Derivation> = d.premises.iter().map(mix_as_cuts).collect();
    if d.app.rule != RuleId::Mix {
        return Derivation {
            conclusion: d.conclusion.clone(),
            app: d.app.clone(),
            premises,
        };
    }
    let (left, mut acc) = (premises[0].clone(), premises[1].clone());
    for p in &d.app.occ {
        acc = Derivation::derive(RuleApp::with_occ(RuleId::Cut, vec![p.clone()]), vec![left.clone(), acc])
            .expect("occurrences of a valid mix stay valid one at a time");
    }
    acc
}

/// One reduction step of the elimination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    /// Premise path of the eliminated mix in the input derivation.
    pub node: Vec<usize>,
    /// Nesting depth of the step below that mix.
    pub depth: usize,
    pub schema: String,
    pub rank: Rank,
    pub parent: Option<Rank>,
}

impl std::fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parent = self.parent.map(|r| r.to_string()).unwrap_or_else(|| "-".into());
        write!(
            f,
            "node={:?} depth={} schema={} rank={} parent={}",
            self.node, self.depth, self.schema, self.rank, parent
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EliminationOptions {
    /// Re-check the derivation produced by every step.
    pub check_each_step: bool,
}

impl Default for EliminationOptions {
    fn default() -> Self {
        EliminationOptions { check_each_step: true }
    }
}

#[derive(Clone, Debug)]
pub struct Elimination {
    pub derivation: Derivation,
    pub trace: Vec<TraceRecord>,
}

struct Eliminator {
    opts: EliminationOptions,
    trace: Vec<TraceRecord>,
    node: Vec<usize>,
    depth: usize,
}

fn rule_err(schema: &str) -> impl Fn(RuleError) -> TransformError + '_ {
    move |err| TransformError::Rule {
        schema: schema.to_string(),
        err,
    }
}

fn join(base: &[u8], rest: &[u8]) -> Position {
    let mut p = base.to_vec();
    p.extend_from_slice(rest);
    p
}

/// Where a position of the conclusion antecedent lives in the premises.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Traced {
    /// (premise index, position) pairs; ⊓C yields two per premise.
    Into(Vec<(usize, Position)>),
    /// Inside the structure added by ⊓W1.
    Weakened,
    /// The position is, or lies inside, a node the rule builds.
    Built,
}

fn trace_position(app: &RuleApp, n_premises: usize, p: &[u8]) -> Traced {
    use RuleId::*;
    let all = |q: Position| Traced::Into((0..n_premises).map(|i| (i, q.clone())).collect());
    match app.rule {
        ProdR => match p.split_first() {
            None => Traced::Built,
            Some((i, r)) => Traced::Into(vec![(*i as usize, r.to_vec())]),
        },
        DiaR => match p.split_first() {
            None => Traced::Built,
            Some((_, r)) => Traced::Into(vec![(0, r.to_vec())]),
        },
        BboxR => Traced::Into(vec![(0, join(&[0], p))]),
        MeetR | JoinR1 | JoinR2 | ProdOne | OneProd => all(p.to_vec()),
        Init | OneR | TopR | BotL | Cut | Mix => Traced::Into(vec![]),
        _ => {
            let c = &app.ctx;
            if !is_prefix(c, p) {
                return if is_prefix(p, c) { Traced::Built } else { all(p.to_vec()) };
            }
            let r = &p[c.len()..];
            let into = |q: Vec<u8>| Traced::Into(vec![(0, join(c, &q))]);
            let sub = |pre: &[u8]| -> Option<Vec<u8>> { r.strip_prefix(pre).map(|s| s.to_vec()) };
            match app.rule {
                OAL2r | CapAL2r => {
                    // conclusion D1 ∘ (D2 ∘ D3), premise (D1 ∘ D2) ∘ D3
                    if let Some(s) = sub(&[0]) {
                        into(join(&[0, 0], &s))
                    } else if let Some(s) = sub(&[1, 0]) {
                        into(join(&[0, 1], &s))
                    } else if let Some(s) = sub(&[1, 1]) {
                        into(join(&[1], &s))
                    } else {
                        Traced::Built
                    }
                }
                OAR2l | CapAR2l => {
                    if let Some(s) = sub(&[0, 0]) {
                        into(join(&[0], &s))
                    } else if let Some(s) = sub(&[0, 1]) {
                        into(join(&[1, 0], &s))
                    } else if let Some(s) = sub(&[1]) {
                        into(join(&[1, 1], &s))
                    } else {
                        Traced::Built
                    }
                }
                OEps => sub(&[0]).map_or(Traced::Built, into),
                EpsO => sub(&[1]).map_or(Traced::Built, into),
                CapW1 => {
                    if let Some(s) = sub(&[0]) {
                        into(s)
                    } else if sub(&[1]).is_some() {
                        Traced::Weakened
                    } else {
                        Traced::Built
                    }
                }
                CapE => {
                    if let Some(s) = sub(&[0]) {
                        into(join(&[1], &s))
                    } else if let Some(s) = sub(&[1]) {
                        into(join(&[0], &s))
                    } else {
                        Traced::Built
                    }
                }
                CapC => Traced::Into(vec![(0, join(c, &join(&[0], r))), (0, join(c, &join(&[1], r)))]),
                K => {
                    if let Some(s) = sub(&[0, 0]) {
                        into(join(&[0, 0], &s))
                    } else if let Some(s) = sub(&[0, 1]) {
                        into(join(&[1, 0], &s))
                    } else {
                        Traced::Built
                    }
                }
                T => into(join(&[0], r)),
                Four => sub(&[0, 0]).map_or(Traced::Built, |s| into(join(&[0], &s))),
                ProdL | MeetL | DiaL | OneL | JoinL => Traced::Built,
                BboxL => Traced::Built,
                _ => unreachable!("context rules only"),
            }
        }
    }
}

/// The antecedent leaf consumed by a left logical rule.
fn principal_position(app: &RuleApp) -> Option<Position> {
    use RuleId::*;
    match app.rule {
        ProdL | MeetL | DiaL | OneL | JoinL | BotL => Some(app.ctx.clone()),
        BboxL => Some(join(&app.ctx, &[0])),
        Init => Some(vec![]),
        _ => None,
    }
}

impl Eliminator {
    fn record(&mut self, schema: &str, rank: Rank, parent: Option<Rank>) -> Result<(), TransformError> {
        if let Some(p) = parent {
            if rank >= p {
                return Err(TransformError::RankNotDecreasing {
                    parent: p,
                    child: rank,
                    schema: schema.to_string(),
                });
            }
        }
        self.trace.push(TraceRecord {
            node: self.node.clone(),
            depth: self.depth,
            schema: schema.to_string(),
            rank,
            parent,
        });
        Ok(())
    }

    fn checked(&self, schema: &str, d: Derivation, expect: &Sequent) -> Result<Derivation, TransformError> {
        if self.opts.check_each_step {
            if let Err(err) = check_derivation(&d) {
                return Err(TransformError::InvalidStep {
                    schema: schema.to_string(),
                    err,
                });
            }
            if &d.conclusion != expect {
                return Err(TransformError::InvalidStep {
                    schema: schema.to_string(),
                    err: CheckError {
                        path: vec![],
                        conclusion: d.conclusion.to_string(),
                        reason: format!("expected endsequent '{expect}'"),
                    },
                });
            }
        }
        Ok(d)
    }

    /// A mix-free derivation of the conclusion of mixing `d1` into `occ` of
    /// `d2`.
    fn reduce(&mut self, d1: &Derivation, d2: &Derivation, occ: &[Position], parent: Option<Rank>) -> Result<Derivation, TransformError> {
        let expect = apply_rule(
            &RuleApp::with_occ(RuleId::Mix, occ.to_vec()),
            &[d1.conclusion.clone(), d2.conclusion.clone()],
        )
        .map_err(rule_err("mix"))?;
        let r = rank_of(d1, d2);
        self.depth += 1;
        let out = self.reduce_inner(d1, d2, occ, r, parent);
        self.depth -= 1;
        let (schema, d) = out?;
        self.checked(&schema, d, &expect)
    }

    fn reduce_inner(
        &mut self,
        d1: &Derivation,
        d2: &Derivation,
        occ: &[Position],
        r: Rank,
        parent: Option<Rank>,
    ) -> Result<(String, Derivation), TransformError> {
        use RuleId::*;
        if occ.is_empty() {
            self.record("empty", r, parent)?;
            return Ok(("empty".into(), d2.clone()));
        }
        let rule2 = d2.app.rule;
        let principal = principal_position(&d2.app).filter(|p| occ.contains(p));
        if let Some(pp) = principal {
            if rule2 == Init {
                self.record("init-right", r, parent)?;
                return Ok(("init-right".into(), d1.clone()));
            }
            let schema = format!("principal-{rule2}");
            self.record(&schema, r, parent)?;
            let others: Vec<Position> = occ.iter().filter(|p| **p != pp).cloned().collect();
            let e = if others.is_empty() {
                d2.clone()
            } else {
                self.permute(d1, d2, &others, r)?
            };
            let d = self.climb_left(d1, &e, &pp, r)?;
            return Ok((schema, d));
        }
        match rule2 {
            BotL | TopR => {
                let schema = format!("axiom-{rule2}");
                self.record(&schema, r, parent)?;
                let concl = apply_rule(
                    &RuleApp::with_occ(Mix, occ.to_vec()),
                    &[d1.conclusion.clone(), d2.conclusion.clone()],
                )
                .map_err(rule_err(&schema))?;
                let d = if rule2 == BotL {
                    by_aux(BotL, d2.app.ctx.clone(), Aux::Sequent(concl), vec![])
                } else {
                    Ok(top_r(concl.ant))
                }
                .map_err(rule_err(&schema))?;
                Ok((schema, d))
            }
            OneR | Cut | Mix => Err(TransformError::UnmatchedCase {
                left: d1.app.rule,
                right: rule2,
                detail: "right premise cannot carry the selected occurrences".into(),
            }),
            _ => {
                let schema = format!("permute-{rule2}");
                self.record(&schema, r, parent)?;
                let d = self.permute(d1, d2, occ, r)?;
                Ok((schema, d))
            }
        }
    }

    /// Mixes into the premises of `d2` and re-applies its last rule. No
    /// occurrence in `occ` may be principal.
    fn permute(&mut self, d1: &Derivation, d2: &Derivation, occ: &[Position], r: Rank) -> Result<Derivation, TransformError> {
        let n = d2.premises.len();
        let mut per: Vec<Vec<Position>> = vec![Vec::new(); n];
        let mut weakened: Vec<Position> = Vec::new();
        for o in occ {
            match trace_position(&d2.app, n, o) {
                Traced::Into(v) => {
                    for (i, q) in v {
                        per[i].push(q);
                    }
                }
                Traced::Weakened => weakened.push(o[d2.app.ctx.len() + 1..].to_vec()),
                Traced::Built => {
                    return Err(TransformError::UnmatchedCase {
                        left: d1.app.rule,
                        right: d2.app.rule,
                        detail: format!("occurrence {o:?} sits on the rule's own structure"),
                    })
                }
            }
        }
        let mut premises = Vec::with_capacity(n);
        for (i, p) in d2.premises.iter().enumerate() {
            premises.push(self.reduce(d1, p, &per[i], Some(r))?);
        }
        let mut app = d2.app.clone();
        if !weakened.is_empty() {
            if let Some(Aux::Struct(w)) = &app.aux {
                let w2 = replace_at(w, &weakened, &d1.conclusion.ant).map_err(|e| TransformError::UnmatchedCase {
                    left: d1.app.rule,
                    right: d2.app.rule,
                    detail: e.to_string(),
                })?;
                app.aux = Some(Aux::Struct(w2));
            }
        }
        let schema = format!("permute-{}", d2.app.rule);
        Derivation::derive(app, premises).map_err(rule_err(&schema))
    }

    /// `e` ends with a rule principal on the leaf `pp`, an occurrence of the
    /// conclusion formula of `d1`. Produces `e`'s conclusion with `pp`
    /// replaced by the antecedent of `d1`.
    fn climb_left(&mut self, d1: &Derivation, e: &Derivation, pp: &Position, r: Rank) -> Result<Derivation, TransformError> {
        use RuleId::*;
        let rule1 = d1.app.rule;
        let rule2 = e.app.rule;
        if rule1 == Init {
            return Ok(e.clone());
        }
        if rule1 == BotL {
            let concl = apply_rule(
                &RuleApp::with_occ(Mix, vec![pp.clone()]),
                &[d1.conclusion.clone(), e.conclusion.clone()],
            )
            .map_err(rule_err("lift-botL"))?;
            return by_aux(BotL, join(pp, &d1.app.ctx), Aux::Sequent(concl), vec![]).map_err(rule_err("lift-botL"));
        }
        if rule1.uses_context() {
            let mut premises = Vec::with_capacity(d1.premises.len());
            for p in &d1.premises {
                premises.push(self.climb_left(p, e, pp, r)?);
            }
            let mut app = d1.app.clone();
            app.ctx = join(pp, &d1.app.ctx);
            return Derivation::derive(app, premises).map_err(rule_err(&format!("lift-{rule1}")));
        }
        let unmatched = |detail: &str| TransformError::UnmatchedCase {
            left: rule1,
            right: rule2,
            detail: detail.to_string(),
        };
        let schema = format!("{rule1}/{rule2}");
        let e0 = e.premises.first();
        match (rule1, rule2) {
            (ProdR, ProdL) => {
                let a = self.reduce(&d1.premises[0], e0.unwrap(), &[join(pp, &[0])], Some(r))?;
                self.reduce(&d1.premises[1], &a, &[join(pp, &[1])], Some(r))
            }
            (MeetR, MeetL) => {
                let a = self.reduce(&d1.premises[0], e0.unwrap(), &[join(pp, &[0])], Some(r))?;
                let b = self.reduce(&d1.premises[1], &a, &[join(pp, &[1])], Some(r))?;
                by(CapC, pp.clone(), vec![b]).map_err(rule_err(&schema))
            }
            (JoinR1, JoinL) => self.reduce(&d1.premises[0], &e.premises[0], &[pp.clone()], Some(r)),
            (JoinR2, JoinL) => self.reduce(&d1.premises[0], &e.premises[1], &[pp.clone()], Some(r)),
            (DiaR, DiaL) => self.reduce(&d1.premises[0], e0.unwrap(), &[join(pp, &[0])], Some(r)),
            (BboxR, BboxL) => self.reduce(&d1.premises[0], e0.unwrap(), &[e.app.ctx.clone()], Some(r)),
            (OneR, OneL) => Ok(e0.unwrap().clone()),
            (ProdOne, ProdL) | (OneProd, ProdL) => {
                let (side_formula, unit_side) = if rule1 == ProdOne { (0u8, 1u8) } else { (1u8, 0u8) };
                let a = self.reduce(&d1.premises[0], e0.unwrap(), &[join(pp, &[side_formula])], Some(r))?;
                delete_unit(&a, pp, unit_side).ok_or_else(|| {
                    unmatched("the unit left next to the mixed-in structure cannot be removed: no rule deletes 1 or e from an antecedent")
                })
            }
            _ => Err(unmatched("no reduction for this pair")),
        }
    }
}

/// From a derivation of `Γ{X ∘ u}` (unit `u` = `1` or `ε` on `side`), one of
/// `Γ{X}`, when the unit can be traced back to a `∘ε`/`ε∘` step.
fn delete_unit(d: &Derivation, node: &Position, side: u8) -> Option<Derivation> {
    use RuleId::*;
    let unit_pos = join(node, &[side]);
    let keep = join(node, &[1 - side]);
    let shorten = |p: &Position| -> Option<Position> {
        if is_prefix(&keep, p) {
            Some(join(node, &p[keep.len()..]))
        } else if is_prefix(node, p) {
            None
        } else {
            Some(p.clone())
        }
    };
    let new_concl = {
        let x = d.conclusion.ant.subterm_at(&keep)?.clone();
        Sequent::new(crate::syntax::replace_one(&d.conclusion.ant, node, x)?, d.conclusion.succ.clone())
    };
    let app = &d.app;
    match app.rule {
        OneL if app.ctx == unit_pos => delete_unit(&d.premises[0], node, side),
        OEps if side == 1 && &app.ctx == node => Some(d.premises[0].clone()),
        EpsO if side == 0 && &app.ctx == node => Some(d.premises[0].clone()),
        BotL => {
            let ctx = shorten(&app.ctx)?;
            by_aux(BotL, ctx, Aux::Sequent(new_concl), vec![]).ok()
        }
        TopR => Some(top_r(new_concl.ant)),
        Init | OneR | Cut | Mix => None,
        _ => {
            let n = d.premises.len();
            let targets = match trace_position(app, n, node) {
                Traced::Into(v) => v,
                Traced::Weakened => {
                    let mut a = app.clone();
                    if let Some(Aux::Struct(w)) = &app.aux {
                        let rel = node[app.ctx.len() + 1..].to_vec();
                        let x = w.subterm_at(&join(&rel, &[1 - side]))?.clone();
                        a.aux = Some(Aux::Struct(crate::syntax::replace_one(w, &rel, x)?));
                    }
                    return Derivation::derive(a, d.premises.clone()).ok();
                }
                Traced::Built => return None,
            };
            // the unit must travel with its node into exactly one spot per premise
            let mut premises = d.premises.clone();
            for i in 0..n {
                let spots: Vec<&Position> = targets.iter().filter(|(j, _)| *j == i).map(|(_, q)| q).collect();
                match spots.as_slice() {
                    [] => {}
                    [q] => premises[i] = delete_unit(&d.premises[i], q, side)?,
                    _ => return None,
                }
            }
            let mut a = app.clone();
            if app.rule.uses_context() {
                a.ctx = shorten(&app.ctx)?;
            }
            Derivation::derive(a, premises).ok()
        }
    }
}

/// Eliminates every mix (and cut) from `d`, uppermost first.
pub fn eliminate_mix(d: &Derivation) -> Result<Elimination, TransformError> {
    eliminate_mix_with(d, EliminationOptions::default())
}

pub fn eliminate_mix_with(d: &Derivation, opts: EliminationOptions) -> Result<Elimination, TransformError> {
    let mut el = Eliminator {
        opts,
        trace: Vec::new(),
        node: Vec::new(),
        depth: 0,
    };
    let out = walk(&mut el, d, &mut Vec::new())?;
    Ok(Elimination {
        derivation: out,
        trace: el.trace,
    })
}

fn walk(el: &mut Eliminator, d: &Derivation, path: &mut Vec<usize>) -> Result<Derivation, TransformError> {
    let mut premises = Vec::with_capacity(d.premises.len());
    for (i, p) in d.premises.iter().enumerate() {
        path.push(i);
        premises.push(walk(el, p, path)?);
        path.pop();
    }
    if matches!(d.app.rule, RuleId::Mix | RuleId::Cut) {
        el.node = path.clone();
        return el.reduce(&premises[0], &premises[1], &d.app.occ, None);
    }
    Ok(Derivation {
        conclusion: d.conclusion.clone(),
        app: d.app.clone(),
        premises,
    })
}

/// Cut elimination: every cut read as a mix, then mix elimination.
pub fn eliminate_cut(d: &Derivation) -> Result<Elimination, TransformError> {
    eliminate_mix(&cut_as_mix(d))
}

// ---------------------------------------------------------------------------
// Generated inputs

/// `φ ⊢ φ` with every connective introduced on both sides.
pub fn eta(phi: &Formula) -> Derivation {
    use RuleId::*;
    let at = |f: &Formula| StructuralTerm::Atom(f.clone());
    let d = match phi {
        Formula::Var(_) | Formula::Top => Ok(init(phi.clone())),
        Formula::Bot => by_aux(BotL, vec![], Aux::Sequent(Sequent::new(at(phi), Formula::Bot)), vec![]),
        Formula::One => by(OneL, vec![], vec![one_r()]),
        Formula::Prod(a, b) => by(ProdR, vec![], vec![eta(a), eta(b)]).and_then(|d| by(ProdL, vec![], vec![d])),
        Formula::Meet(a, b) => {
            let l = by_aux(CapW1, vec![], Aux::Struct(at(b)), vec![eta(a)]);
            let r = derived::cap_w2(eta(b), vec![], at(a));
            l.and_then(|l| r.and_then(|r| by(MeetR, vec![], vec![l, r])))
                .and_then(|d| by(MeetL, vec![], vec![d]))
        }
        Formula::Join(a, b) => {
            let l = by_aux(JoinR1, vec![], Aux::Formula((**b).clone()), vec![eta(a)]);
            let r = by_aux(JoinR2, vec![], Aux::Formula((**a).clone()), vec![eta(b)]);
            l.and_then(|l| r.and_then(|r| by(JoinL, vec![], vec![l, r])))
        }
        Formula::Dia(a) => by(DiaR, vec![], vec![eta(a)]).and_then(|d| by(DiaL, vec![], vec![d])),
        Formula::BBox(a) => by(BboxL, vec![], vec![eta(a)]).and_then(|d| by(BboxR, vec![], vec![d])),
    };
    d.expect("eta expansion is well-formed")
}

fn subst_formula(f: &Formula, v: &str, by_f: &Formula) -> Formula {
    let s = |g: &Formula| Box::new(subst_formula(g, v, by_f));
    match f {
        Formula::Var(w) if w == v => by_f.clone(),
        Formula::Var(_) | Formula::One | Formula::Bot | Formula::Top => f.clone(),
        Formula::Prod(a, b) => Formula::Prod(s(a), s(b)),
        Formula::Meet(a, b) => Formula::Meet(s(a), s(b)),
        Formula::Join(a, b) => Formula::Join(s(a), s(b)),
        Formula::Dia(a) => Formula::Dia(s(a)),
        Formula::BBox(a) => Formula::BBox(s(a)),
    }
}

fn subst_struct(t: &StructuralTerm, v: &str, by_f: &Formula) -> StructuralTerm {
    use StructuralTerm as S;
    match t {
        S::Atom(f) => S::Atom(subst_formula(f, v, by_f)),
        S::Eps => S::Eps,
        S::Comma(a, b) => S::comma(subst_struct(a, v, by_f), subst_struct(b, v, by_f)),
        S::Cap(a, b) => S::cap(subst_struct(a, v, by_f), subst_struct(b, v, by_f)),
        S::Angle(a) => S::angle(subst_struct(a, v, by_f)),
    }
}

fn subst_sequent(s: &Sequent, v: &str, by_f: &Formula) -> Sequent {
    Sequent::new(subst_struct(&s.ant, v, by_f), subst_formula(&s.succ, v, by_f))
}

/// Uniform substitution of a formula for a variable throughout `d`.
pub fn substitute(d: &Derivation, v: &str, by_f: &Formula) -> Derivation {
    let aux = d.app.aux.as_ref().map(|a| match a {
        Aux::Struct(t) => Aux::Struct(subst_struct(t, v, by_f)),
        Aux::Formula(f) => Aux::Formula(subst_formula(f, v, by_f)),
        Aux::Sequent(s) => Aux::Sequent(subst_sequent(s, v, by_f)),
    });
    Derivation {
        conclusion: subst_sequent(&d.conclusion, v, by_f),
        app: RuleApp { aux, ..d.app.clone() },
        premises: d.premises.iter().map(|p| substitute(p, v, by_f)).collect(),
    }
}

/// Grows the antecedent of `d` around the root by a random mix of
/// structural and right steps. Leaves of `d`'s antecedent keep their
/// relative shape.
fn grow<R: Rng>(rng: &mut R, d: Derivation, steps: usize, extra: &Formula) -> Derivation {
    use RuleId::*;
    let mut d = d;
    for _ in 0..steps {
        let at_extra = StructuralTerm::Atom(extra.clone());
        let next = match rng.gen_range(0..8) {
            0 => by_aux(CapW1, vec![], Aux::Struct(at_extra), vec![d.clone()]),
            1 => derived::cap_w2(d.clone(), vec![], at_extra),
            2 => by(OEps, vec![], vec![d.clone()]),
            3 => by(EpsO, vec![], vec![d.clone()]),
            4 => by(DiaR, vec![], vec![d.clone()]),
            5 => by(ProdR, vec![], vec![d.clone(), eta(extra)]),
            6 => {
                let g = d.conclusion.ant.clone();
                by_aux(CapW1, vec![], Aux::Struct(g), vec![d.clone()]).and_then(|w| by(CapC, vec![], vec![w]))
            }
            _ => by_aux(JoinR1, vec![], Aux::Formula(extra.clone()), vec![d.clone()]),
        };
        d = next.expect("growth steps apply to any derivation");
    }
    d
}

/// Left premises ending in a variety of rules, all concluding `⊢ φ`.
fn left_candidates(phi: &Formula) -> Vec<Derivation> {
    let corpus = builtin_corpus();
    let mut out = vec![eta(phi)];
    // ◇◻φ ⊢ φ ends with ◇L; ◻φ ⊢ φ is T after ◻L
    out.push(substitute(&corpus["ax6"], "x", phi));
    let boxed = by(RuleId::BboxL, vec![], vec![eta(phi)]).and_then(|d| by(RuleId::T, vec![], vec![d]));
    out.push(boxed.expect("box counit"));
    let weak = by_aux(RuleId::CapW1, vec![], Aux::Struct(StructuralTerm::Atom(var("w"))), vec![eta(phi)])
        .and_then(|d| by(RuleId::MeetL, vec![], vec![d]));
    out.push(weak.expect("meet projection"));
    out
}

/// Derivations containing cuts and mixes, built from the corpus and from
/// eta-expansions. Units are kept out of product introductions, so no
/// `·1`/`1·` step appears.
pub fn generate_cut_corpus(seed: u64, count: usize) -> Vec<Derivation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corpus: Vec<Derivation> = builtin_corpus().into_values().collect();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        // right premise: something whose antecedent contains φ
        let base = if rng.gen_bool(0.5) {
            corpus.choose(&mut rng).unwrap().clone()
        } else {
            eta(&random_formula(&mut rng, 3))
        };
        let phi = match &base.conclusion.ant {
            StructuralTerm::Atom(f) => f.clone(),
            _ => continue,
        };
        let extra = if rng.gen_bool(0.3) {
            phi.clone()
        } else {
            random_formula(&mut rng, 1)
        };
        let steps = rng.gen_range(0..4);
        let right = grow(&mut rng, base, steps, &extra);
        let occs = occurrences_of(&right.conclusion.ant, &phi);
        if occs.is_empty() {
            continue;
        }
        let lefts = left_candidates(&phi);
        let left = lefts.choose(&mut rng).unwrap().clone();
        let d = if occs.len() > 1 && rng.gen_bool(0.6) {
            let k = rng.gen_range(2..=occs.len());
            let chosen: Vec<Position> = occs.choose_multiple(&mut rng, k).cloned().collect();
            Derivation::derive(RuleApp::with_occ(RuleId::Mix, chosen), vec![left, right])
        } else {
            let p = occs.choose(&mut rng).unwrap().clone();
            Derivation::derive(RuleApp::with_occ(RuleId::Cut, vec![p]), vec![left, right])
        };
        let mut d = d.expect("occurrences selected from the antecedent");
        // sometimes continue below the cut so it is not the root
        if rng.gen_bool(0.3) {
            d = grow(&mut rng, d, 1, &var("v"));
        }
        out.push(d);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{cut, mix};
    use crate::syntax::parse_sequent;

    fn x() -> Formula {
        var("x")
    }

    #[test]
    fn rank_examples() {
        let m = mix(init(x()), init(x()), vec![vec![]]).unwrap();
        assert_eq!(
            rank(&m).unwrap(),
            Rank {
                cp: 0,
                p: 1,
                height_sum: 2
            }
        );
        let xy = Formula::join(x(), var("y"));
        let d1 = by_aux(RuleId::JoinR1, vec![], Aux::Formula(var("y")), vec![init(x())]).unwrap();
        let m = mix(d1, init(xy), vec![vec![]]).unwrap();
        assert_eq!(
            rank(&m).unwrap(),
            Rank {
                cp: 1,
                p: 0,
                height_sum: 3
            }
        );
        let d1 = by(RuleId::T, vec![], vec![by(RuleId::DiaR, vec![], vec![init(x())]).unwrap()]).unwrap();
        let m = mix(d1, init(Formula::dia(x())), vec![vec![]]).unwrap();
        assert_eq!(
            rank(&m).unwrap(),
            Rank {
                cp: 1,
                p: 1,
                height_sum: 4
            }
        );
        assert!(rank(&init(x())).is_err());
    }

    #[test]
    fn cut_mix_interchange() {
        let c = builtin_corpus();
        let d = cut(c["ax1"].clone(), c["ax2b"].clone(), vec![]).unwrap();
        let m = cut_as_mix(&d);
        assert_eq!(m.app.rule, RuleId::Mix);
        assert_eq!(m.app.occ, vec![Vec::<u8>::new()]);
        check_derivation(&m).unwrap();
        assert_eq!(mix_as_cuts(&m), d);
        let two = by(RuleId::ProdR, vec![], vec![init(x()), init(x())]).unwrap();
        let m2 = mix(c["ax6"].clone(), two, vec![vec![0], vec![1]]).unwrap();
        let cuts = mix_as_cuts(&m2);
        check_derivation(&cuts).unwrap();
        assert_eq!(cuts.conclusion, m2.conclusion);
        assert_eq!(cuts.height(), m2.height() + 1);
        assert_eq!(cut_as_mix(&c["ax5"]), c["ax5"]);
    }

    #[test]
    fn base_cases() {
        let m = mix(init(x()), init(x()), vec![vec![]]).unwrap();
        let e = eliminate_mix(&m).unwrap().derivation;
        assert_eq!(e, init(x()));
        let top = top_r(parse_sequent("(x o y) |- top").unwrap().ant);
        let m = mix(init(x()), top, vec![vec![0]]).unwrap();
        let e = eliminate_mix(&m).unwrap().derivation;
        assert_eq!(e.rule(), RuleId::TopR);
        assert_eq!(e.conclusion, parse_sequent("(x o y) |- top").unwrap());
    }

    #[test]
    fn product_principal_case_spawns_two_lower_mixes() {
        let xy = Formula::prod(x(), var("y"));
        let d1 = by(RuleId::ProdR, vec![], vec![init(x()), init(var("y"))]).unwrap();
        let m = mix(d1, eta(&xy), vec![vec![]]).unwrap();
        let el = eliminate_mix(&m).unwrap();
        check_derivation(&el.derivation).unwrap();
        assert!(el.derivation.is_cut_free());
        assert_eq!(el.derivation.conclusion, parse_sequent("(x o y) |- (x * y)").unwrap());
        let lower: Vec<&TraceRecord> = el.trace.iter().filter(|t| t.rank.cp == 0).collect();
        assert!(lower.len() >= 2, "{:#?}", el.trace);
    }

    #[test]
    fn join_cut_example() {
        let xy = Formula::join(x(), var("y"));
        let d1 = by_aux(RuleId::JoinR1, vec![], Aux::Formula(var("y")), vec![init(x())]).unwrap();
        let d = cut(d1, init(xy), vec![]).unwrap();
        let out = eliminate_cut(&d).unwrap().derivation;
        check_derivation(&out).unwrap();
        assert!(out.is_cut_free());
        assert_eq!(out.conclusion, parse_sequent("x |- (x | y)").unwrap());
    }

    #[test]
    fn mix_free_input_is_unchanged() {
        for d in builtin_corpus().values() {
            let el = eliminate_mix(d).unwrap();
            assert_eq!(&el.derivation, d);
            assert!(el.trace.is_empty());
        }
    }

    #[test]
    fn unit_gap_is_reported() {
        // x ⊢ x·1 cut against x·1 ⊢ x·◇1
        let left = by(RuleId::ProdOne, vec![], vec![init(x())]).unwrap();
        let one_dia = by(RuleId::T, vec![], vec![by(RuleId::DiaR, vec![], vec![init(Formula::One)]).unwrap()]).unwrap();
        let right = by(
            RuleId::ProdL,
            vec![],
            vec![by(RuleId::ProdR, vec![], vec![init(x()), one_dia]).unwrap()],
        )
        .unwrap();
        let d = cut(left, right, vec![]).unwrap();
        check_derivation(&d).unwrap();
        match eliminate_cut(&d) {
            Err(TransformError::UnmatchedCase { left, right, .. }) => {
                assert_eq!((left, right), (RuleId::ProdOne, RuleId::ProdL));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unit_deletion_succeeds_when_the_unit_came_from_eps() {
        // x·1 ⊢ x via 1L and ∘ε; cut with x ⊢ x·1
        let right = by(
            RuleId::ProdL,
            vec![],
            vec![by(RuleId::OneL, vec![1], vec![by(RuleId::OEps, vec![], vec![init(x())]).unwrap()]).unwrap()],
        )
        .unwrap();
        let left = by(RuleId::ProdOne, vec![], vec![init(x())]).unwrap();
        let d = cut(left, right, vec![]).unwrap();
        let out = eliminate_cut(&d).unwrap().derivation;
        assert_eq!(out, init(x()));
    }

    #[test]
    fn generated_corpus_covers_principal_cases() {
        let mut schemas = std::collections::BTreeSet::new();
        let mut multi = 0;
        for d in generate_cut_corpus(5, 150) {
            if d.uses(RuleId::Mix) {
                multi += 1;
            }
            for t in eliminate_cut(&d).unwrap().trace {
                schemas.insert(t.schema);
            }
        }
        eprintln!("{multi} {schemas:?}");
        assert!(multi >= 10);
        for s in [
            "principal-prodL",
            "principal-meetL",
            "principal-joinL",
            "principal-diaL",
            "principal-bboxL",
            "permute-capC",
        ] {
            assert!(schemas.contains(s), "{s} missing from {schemas:?}");
        }
    }

    #[test]
    fn generated_corpus_eliminates() {
        for d in generate_cut_corpus(11, 40) {
            check_derivation(&d).unwrap();
            let el = eliminate_cut(&d).unwrap_or_else(|e| panic!("{e}\n{}", d.pretty()));
            assert!(el.derivation.is_cut_free());
            assert_eq!(el.derivation.conclusion, d.conclusion);
            check_derivation(&el.derivation).unwrap();
        }
    }
}
