//! The rules as data: forward application, derivation checking, backward
//! instances for search, the derived-rule macros and the bundled corpus.
//!
//! Every rule carries a context position `ctx`. For the context rules it is
//! the hole of `Γ{·}`, which addresses the same node in premise and
//! conclusion. Rules acting on the whole antecedent (the right rules, `init`,
//! `1R`, `⊤R`) require `ctx = []`. `cut` and `mix` use `occ` instead.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{self, parse_sequent, replace_at, replace_one, var, Formula, ParseError, Position, Sequent, StructuralTerm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleId {
    Init,
    Cut,
    OAL2r,
    OAR2l,
    OEps,
    EpsO,
    CapAL2r,
    CapAR2l,
    CapW1,
    CapE,
    CapC,
    K,
    T,
    Four,
    ProdL,
    ProdR,
    MeetL,
    MeetR,
    JoinL,
    JoinR1,
    JoinR2,
    DiaL,
    DiaR,
    BboxL,
    BboxR,
    OneL,
    OneR,
    ProdOne,
    OneProd,
    BotL,
    TopR,
    Mix,
}

impl RuleId {
    pub const ALL: [RuleId; 32] = [
        RuleId::Init,
        RuleId::Cut,
        RuleId::OAL2r,
        RuleId::OAR2l,
        RuleId::OEps,
        RuleId::EpsO,
        RuleId::CapAL2r,
        RuleId::CapAR2l,
        RuleId::CapW1,
        RuleId::CapE,
        RuleId::CapC,
        RuleId::K,
        RuleId::T,
        RuleId::Four,
        RuleId::ProdL,
        RuleId::ProdR,
        RuleId::MeetL,
        RuleId::MeetR,
        RuleId::JoinL,
        RuleId::JoinR1,
        RuleId::JoinR2,
        RuleId::DiaL,
        RuleId::DiaR,
        RuleId::BboxL,
        RuleId::BboxR,
        RuleId::OneL,
        RuleId::OneR,
        RuleId::ProdOne,
        RuleId::OneProd,
        RuleId::BotL,
        RuleId::TopR,
        RuleId::Mix,
    ];

    pub fn name(self) -> &'static str {
        use RuleId::*;
        match self {
            Init => "init",
            Cut => "cut",
            OAL2r => "oA_l2r",
            OAR2l => "oA_r2l",
            OEps => "oEps",
            EpsO => "epsO",
            CapAL2r => "capA_l2r",
            CapAR2l => "capA_r2l",
            CapW1 => "capW1",
            CapE => "capE",
            CapC => "capC",
            K => "K",
            T => "T",
            Four => "Four",
            ProdL => "prodL",
            ProdR => "prodR",
            MeetL => "meetL",
            MeetR => "meetR",
            JoinL => "joinL",
            JoinR1 => "joinR1",
            JoinR2 => "joinR2",
            DiaL => "diaL",
            DiaR => "diaR",
            BboxL => "bboxL",
            BboxR => "bboxR",
            OneL => "oneL",
            OneR => "oneR",
            ProdOne => "prodOne",
            OneProd => "oneProd",
            BotL => "botL",
            TopR => "topR",
            Mix => "mix",
        }
    }

    pub fn from_name(s: &str) -> Option<RuleId> {
        RuleId::ALL.iter().copied().find(|r| r.name() == s)
    }

    pub fn is_axiom(self) -> bool {
        matches!(self, RuleId::Init | RuleId::OneR | RuleId::BotL | RuleId::TopR)
    }

    /// Rules operating inside a context `Γ{·}`.
    pub fn uses_context(self) -> bool {
        use RuleId::*;
        matches!(
            self,
            OAL2r
                | OAR2l
                | OEps
                | EpsO
                | CapAL2r
                | CapAR2l
                | CapW1
                | CapE
                | CapC
                | K
                | T
                | Four
                | ProdL
                | MeetL
                | JoinL
                | DiaL
                | BboxL
                | OneL
                | BotL
        )
    }

    pub fn is_left_logical(self) -> bool {
        use RuleId::*;
        matches!(self, ProdL | MeetL | JoinL | DiaL | BboxL | OneL)
    }

    pub fn is_right_logical(self) -> bool {
        use RuleId::*;
        matches!(
            self,
            ProdR | MeetR | JoinR1 | JoinR2 | DiaR | BboxR | ProdOne | OneProd | OneR | TopR
        )
    }

    pub fn is_structural(self) -> bool {
        use RuleId::*;
        matches!(
            self,
            OAL2r | OAR2l | OEps | EpsO | CapAL2r | CapAR2l | CapW1 | CapE | CapC | K | T | Four
        )
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Data a rule needs beyond its premises.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Aux {
    /// `⊓W1`: the weakened-in `Δ2`; `⊤R`: the antecedent.
    Struct(StructuralTerm),
    /// `init`: the formula; `∨R1`/`∨R2`: the other disjunct.
    Formula(Formula),
    /// `⊥L`: the whole conclusion.
    Sequent(Sequent),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RuleApp {
    pub rule: RuleId,
    pub ctx: Position,
    pub occ: Vec<Position>,
    pub aux: Option<Aux>,
}

impl RuleApp {
    pub fn new(rule: RuleId, ctx: Position) -> RuleApp {
        RuleApp {
            rule,
            ctx,
            occ: Vec::new(),
            aux: None,
        }
    }

    pub fn with_aux(rule: RuleId, ctx: Position, aux: Aux) -> RuleApp {
        RuleApp {
            aux: Some(aux),
            ..RuleApp::new(rule, ctx)
        }
    }

    pub fn with_occ(rule: RuleId, occ: Vec<Position>) -> RuleApp {
        RuleApp {
            occ,
            ..RuleApp::new(rule, Vec::new())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{rule} at {ctx:?}: {msg}")]
pub struct RuleError {
    pub rule: RuleId,
    pub ctx: Position,
    pub msg: String,
}

fn fail<T>(app: &RuleApp, msg: impl Into<String>) -> Result<T, RuleError> {
    Err(RuleError {
        rule: app.rule,
        ctx: app.ctx.clone(),
        msg: msg.into(),
    })
}

fn arity(rule: RuleId) -> usize {
    use RuleId::*;
    match rule {
        Init | OneR | BotL | TopR => 0,
        Cut | Mix | ProdR | MeetR | JoinL => 2,
        _ => 1,
    }
}

/// The conclusion of `app` applied to `premises`.
pub fn apply_rule(app: &RuleApp, premises: &[Sequent]) -> Result<Sequent, RuleError> {
    use RuleId::*;
    use StructuralTerm as S;
    let rule = app.rule;
    if premises.len() != arity(rule) {
        return fail(app, format!("expects {} premise(s), got {}", arity(rule), premises.len()));
    }
    if !matches!(rule, Cut | Mix) && !app.occ.is_empty() {
        return fail(app, "occ is only meaningful for cut and mix");
    }
    if !rule.uses_context() && !app.ctx.is_empty() {
        return fail(app, "rule acts on the whole antecedent; ctx must be []");
    }
    // Context rules: look at the premise node at ctx and rebuild it.
    let rewrite = |expect: &str, f: &dyn Fn(&StructuralTerm) -> Option<StructuralTerm>| -> Result<Sequent, RuleError> {
        let p = &premises[0];
        let node = match p.ant.subterm_at(&app.ctx) {
            Some(n) => n,
            None => return fail(app, format!("position does not exist in '{}'", p.ant)),
        };
        match f(node) {
            Some(new) => Ok(Sequent::new(
                replace_one(&p.ant, &app.ctx, new).expect("position checked"),
                p.succ.clone(),
            )),
            None => fail(app, format!("expected {expect} at ctx, found '{node}'")),
        }
    };
    let atom = |t: &StructuralTerm| -> Option<Formula> {
        match t {
            S::Atom(f) => Some(f.clone()),
            _ => None,
        }
    };
    match rule {
        Init => match &app.aux {
            Some(Aux::Formula(f)) => Ok(Sequent::new(S::Atom(f.clone()), f.clone())),
            _ => fail(app, "init needs its formula as aux"),
        },
        OneR => Ok(Sequent::new(S::Eps, Formula::One)),
        TopR => match &app.aux {
            Some(Aux::Struct(g)) => Ok(Sequent::new(g.clone(), Formula::Top)),
            _ => fail(app, "topR needs its antecedent as aux"),
        },
        BotL => match &app.aux {
            Some(Aux::Sequent(s)) => {
                if s.ant.subterm_at(&app.ctx) == Some(&S::Atom(Formula::Bot)) {
                    Ok(s.clone())
                } else {
                    fail(app, format!("expected bot at ctx of '{s}'"))
                }
            }
            _ => fail(app, "botL needs its conclusion as aux"),
        },
        Cut | Mix => {
            let (left, right) = (&premises[0], &premises[1]);
            if rule == Cut && app.occ.len() != 1 {
                return fail(app, "cut selects exactly one occurrence");
            }
            for p in &app.occ {
                if right.ant.subterm_at(p) != Some(&S::Atom(left.succ.clone())) {
                    return fail(app, format!("occurrence {p:?} is not the formula '{}'", left.succ));
                }
            }
            match replace_at(&right.ant, &app.occ, &left.ant) {
                Ok(ant) => Ok(Sequent::new(ant, right.succ.clone())),
                Err(e) => fail(app, e.to_string()),
            }
        }
        OAL2r => rewrite("(D1 o D2) o D3", &|t| match t {
            S::Comma(l, c) => match &**l {
                S::Comma(a, b) => Some(S::comma((**a).clone(), S::comma((**b).clone(), (**c).clone()))),
                _ => None,
            },
            _ => None,
        }),
        OAR2l => rewrite("D1 o (D2 o D3)", &|t| match t {
            S::Comma(a, r) => match &**r {
                S::Comma(b, c) => Some(S::comma(S::comma((**a).clone(), (**b).clone()), (**c).clone())),
                _ => None,
            },
            _ => None,
        }),
        CapAL2r => rewrite("(D1 n D2) n D3", &|t| match t {
            S::Cap(l, c) => match &**l {
                S::Cap(a, b) => Some(S::cap((**a).clone(), S::cap((**b).clone(), (**c).clone()))),
                _ => None,
            },
            _ => None,
        }),
        CapAR2l => rewrite("D1 n (D2 n D3)", &|t| match t {
            S::Cap(a, r) => match &**r {
                S::Cap(b, c) => Some(S::cap(S::cap((**a).clone(), (**b).clone()), (**c).clone())),
                _ => None,
            },
            _ => None,
        }),
        OEps => rewrite("any", &|t| Some(S::comma(t.clone(), S::Eps))),
        EpsO => rewrite("any", &|t| Some(S::comma(S::Eps, t.clone()))),
        CapW1 => match &app.aux {
            Some(Aux::Struct(d2)) => rewrite("any", &|t| Some(S::cap(t.clone(), d2.clone()))),
            _ => fail(app, "capW1 needs the weakened structure as aux"),
        },
        CapE => rewrite("D1 n D2", &|t| match t {
            S::Cap(a, b) => Some(S::cap((**b).clone(), (**a).clone())),
            _ => None,
        }),
        CapC => rewrite("D n D", &|t| match t {
            S::Cap(a, b) if a == b => Some((**a).clone()),
            _ => None,
        }),
        K => rewrite("<D1> o <D2>", &|t| match t {
            S::Comma(a, b) => match (&**a, &**b) {
                (S::Angle(x), S::Angle(y)) => Some(S::angle(S::comma((**x).clone(), (**y).clone()))),
                _ => None,
            },
            _ => None,
        }),
        T => rewrite("<D>", &|t| match t {
            S::Angle(a) => Some((**a).clone()),
            _ => None,
        }),
        Four => rewrite("<D>", &|t| match t {
            S::Angle(_) => Some(S::angle(t.clone())),
            _ => None,
        }),
        ProdL => rewrite("phi o psi", &|t| match t {
            S::Comma(a, b) => Some(S::Atom(Formula::prod(atom(a)?, atom(b)?))),
            _ => None,
        }),
        MeetL => rewrite("phi n psi", &|t| match t {
            S::Cap(a, b) => Some(S::Atom(Formula::meet(atom(a)?, atom(b)?))),
            _ => None,
        }),
        DiaL => rewrite("<phi>", &|t| match t {
            S::Angle(a) => Some(S::Atom(Formula::dia(atom(a)?))),
            _ => None,
        }),
        BboxL => rewrite("phi", &|t| Some(S::angle(S::Atom(Formula::bbox(atom(t)?))))),
        OneL => rewrite("e", &|t| match t {
            S::Eps => Some(S::Atom(Formula::One)),
            _ => None,
        }),
        JoinL => {
            let (p1, p2) = (&premises[0], &premises[1]);
            if p1.succ != p2.succ {
                return fail(app, "premises have different succedents");
            }
            let (f1, f2) = match (
                p1.ant.subterm_at(&app.ctx).and_then(atom),
                p2.ant.subterm_at(&app.ctx).and_then(atom),
            ) {
                (Some(a), Some(b)) => (a, b),
                _ => return fail(app, "expected a formula at ctx in both premises"),
            };
            let j = S::Atom(Formula::join(f1, f2));
            let c1 = replace_one(&p1.ant, &app.ctx, j.clone()).expect("checked");
            let c2 = replace_one(&p2.ant, &app.ctx, j).expect("checked");
            if c1 != c2 {
                return fail(app, "premise contexts differ outside the hole");
            }
            Ok(Sequent::new(c1, p1.succ.clone()))
        }
        ProdR => Ok(Sequent::new(
            S::comma(premises[0].ant.clone(), premises[1].ant.clone()),
            Formula::prod(premises[0].succ.clone(), premises[1].succ.clone()),
        )),
        MeetR => {
            if premises[0].ant != premises[1].ant {
                return fail(app, "premises have different antecedents");
            }
            Ok(Sequent::new(
                premises[0].ant.clone(),
                Formula::meet(premises[0].succ.clone(), premises[1].succ.clone()),
            ))
        }
        JoinR1 | JoinR2 => {
            let other = match &app.aux {
                Some(Aux::Formula(f)) => f.clone(),
                _ => return fail(app, "needs the other disjunct as aux"),
            };
            let p = &premises[0];
            let succ = if rule == JoinR1 {
                Formula::join(p.succ.clone(), other)
            } else {
                Formula::join(other, p.succ.clone())
            };
            Ok(Sequent::new(p.ant.clone(), succ))
        }
        DiaR => Ok(Sequent::new(
            S::angle(premises[0].ant.clone()),
            Formula::dia(premises[0].succ.clone()),
        )),
        BboxR => match &premises[0].ant {
            S::Angle(g) => Ok(Sequent::new((**g).clone(), Formula::bbox(premises[0].succ.clone()))),
            other => fail(app, format!("premise antecedent must be <G>, found '{other}'")),
        },
        ProdOne => Ok(Sequent::new(
            premises[0].ant.clone(),
            Formula::prod(premises[0].succ.clone(), Formula::One),
        )),
        OneProd => Ok(Sequent::new(
            premises[0].ant.clone(),
            Formula::prod(Formula::One, premises[0].succ.clone()),
        )),
    }
}

/// Recovers the aux data of `rule` from its conclusion, so derivation files
/// can leave it out. `None` when the conclusion does not fit the rule.
pub fn infer_aux(rule: RuleId, ctx: &[u8], conclusion: &Sequent) -> Option<Option<Aux>> {
    use RuleId::*;
    Some(match rule {
        Init => Some(Aux::Formula(conclusion.succ.clone())),
        TopR => Some(Aux::Struct(conclusion.ant.clone())),
        BotL => Some(Aux::Sequent(conclusion.clone())),
        CapW1 => match conclusion.ant.subterm_at(ctx)? {
            StructuralTerm::Cap(_, d2) => Some(Aux::Struct((**d2).clone())),
            _ => return None,
        },
        JoinR1 => match &conclusion.succ {
            Formula::Join(_, b) => Some(Aux::Formula((**b).clone())),
            _ => return None,
        },
        JoinR2 => match &conclusion.succ {
            Formula::Join(a, _) => Some(Aux::Formula((**a).clone())),
            _ => return None,
        },
        _ => None,
    })
}

// ---------------------------------------------------------------------------
// Derivations

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Derivation {
    pub conclusion: Sequent,
    pub app: RuleApp,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    /// Builds a node, computing its conclusion.
    pub fn derive(app: RuleApp, premises: Vec<Derivation>) -> Result<Derivation, RuleError> {
        let ps: Vec<Sequent> = premises.iter().map(|d| d.conclusion.clone()).collect();
        let conclusion = apply_rule(&app, &ps)?;
        Ok(Derivation { conclusion, app, premises })
    }

    pub fn height(&self) -> usize {
        1 + self.premises.iter().map(|p| p.height()).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(|p| p.size()).sum::<usize>()
    }

    pub fn rule(&self) -> RuleId {
        self.app.rule
    }

    pub fn uses(&self, rule: RuleId) -> bool {
        self.app.rule == rule || self.premises.iter().any(|p| p.uses(rule))
    }

    pub fn is_cut_free(&self) -> bool {
        !self.uses(RuleId::Cut) && !self.uses(RuleId::Mix)
    }

    /// Rule names from root to leaves, premises left to right.
    pub fn rules_preorder(&self) -> Vec<RuleId> {
        let mut out = vec![self.app.rule];
        for p in &self.premises {
            out.extend(p.rules_preorder());
        }
        out
    }

    pub fn at_path(&self, path: &[usize]) -> Option<&Derivation> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => self.premises.get(*i)?.at_path(rest),
        }
    }

    /// Indented tree, conclusion first.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        self.pretty_into(0, &mut out);
        out
    }

    fn pretty_into(&self, depth: usize, out: &mut String) {
        let mut label = self.app.rule.name().to_string();
        if !self.app.ctx.is_empty() {
            label.push_str(&format!(" @{:?}", self.app.ctx));
        }
        if !self.app.occ.is_empty() {
            label.push_str(&format!(" occ={:?}", self.app.occ));
        }
        out.push_str(&format!("{}{}   [{}]\n", "  ".repeat(depth), self.conclusion, label));
        for p in &self.premises {
            p.pretty_into(depth + 1, out);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("node {path:?} ({conclusion}): {reason}")]
pub struct CheckError {
    /// Premise indices from the root.
    pub path: Vec<usize>,
    pub conclusion: String,
    pub reason: String,
}

/// Re-derives every node; reports the first failure in preorder.
pub fn check_derivation(d: &Derivation) -> Result<(), CheckError> {
    fn go(d: &Derivation, path: &mut Vec<usize>) -> Result<(), CheckError> {
        let ps: Vec<Sequent> = d.premises.iter().map(|p| p.conclusion.clone()).collect();
        let err = |reason: String, path: &[usize]| CheckError {
            path: path.to_vec(),
            conclusion: d.conclusion.to_string(),
            reason,
        };
        match apply_rule(&d.app, &ps) {
            Ok(c) if c == d.conclusion => {}
            Ok(c) => return Err(err(format!("rule yields '{c}'"), path)),
            Err(e) => return Err(err(e.to_string(), path)),
        }
        for (i, p) in d.premises.iter().enumerate() {
            path.push(i);
            go(p, path)?;
            path.pop();
        }
        Ok(())
    }
    go(d, &mut Vec::new())
}

// ---------------------------------------------------------------------------
// Builders

pub fn init(f: Formula) -> Derivation {
    Derivation::derive(RuleApp::with_aux(RuleId::Init, vec![], Aux::Formula(f)), vec![]).expect("init")
}

pub fn one_r() -> Derivation {
    Derivation::derive(RuleApp::new(RuleId::OneR, vec![]), vec![]).expect("oneR")
}

pub fn top_r(g: StructuralTerm) -> Derivation {
    Derivation::derive(RuleApp::with_aux(RuleId::TopR, vec![], Aux::Struct(g)), vec![]).expect("topR")
}

pub fn bot_l(s: Sequent, ctx: Position) -> Result<Derivation, RuleError> {
    Derivation::derive(RuleApp::with_aux(RuleId::BotL, ctx, Aux::Sequent(s)), vec![])
}

/// One step of a rule that needs no aux data.
pub fn by(rule: RuleId, ctx: Position, premises: Vec<Derivation>) -> Result<Derivation, RuleError> {
    Derivation::derive(RuleApp::new(rule, ctx), premises)
}

pub fn by_aux(rule: RuleId, ctx: Position, aux: Aux, premises: Vec<Derivation>) -> Result<Derivation, RuleError> {
    Derivation::derive(RuleApp::with_aux(rule, ctx, aux), premises)
}

pub fn cut(left: Derivation, right: Derivation, at: Position) -> Result<Derivation, RuleError> {
    Derivation::derive(RuleApp::with_occ(RuleId::Cut, vec![at]), vec![left, right])
}

pub fn mix(left: Derivation, right: Derivation, occ: Vec<Position>) -> Result<Derivation, RuleError> {
    Derivation::derive(RuleApp::with_occ(RuleId::Mix, occ), vec![left, right])
}

/// The derived rules of the calculus, expanded into primitive steps.
pub mod derived {
    use super::*;

    /// `Γ{Δ2} ⊢ φ` to `Γ{Δ1 ⊓ Δ2} ⊢ φ`: ⊓W1 then ⊓E.
    pub fn cap_w2(d: Derivation, ctx: Position, d1: StructuralTerm) -> Result<Derivation, RuleError> {
        let w = by_aux(RuleId::CapW1, ctx.clone(), Aux::Struct(d1), vec![d])?;
        by(RuleId::CapE, ctx, vec![w])
    }

    /// `Γ{φ1} ⊢ χ` to `Γ{φ1 ∧ φ2} ⊢ χ`: ⊓W1 then ∧L.
    pub fn and_l1(d: Derivation, ctx: Position, phi2: Formula) -> Result<Derivation, RuleError> {
        let w = by_aux(RuleId::CapW1, ctx.clone(), Aux::Struct(StructuralTerm::Atom(phi2)), vec![d])?;
        by(RuleId::MeetL, ctx, vec![w])
    }

    /// `Γ{φ2} ⊢ χ` to `Γ{φ1 ∧ φ2} ⊢ χ`: ⊓W1, ⊓E, ∧L.
    pub fn and_l2(d: Derivation, ctx: Position, phi1: Formula) -> Result<Derivation, RuleError> {
        let w = cap_w2(d, ctx.clone(), StructuralTerm::Atom(phi1))?;
        by(RuleId::MeetL, ctx, vec![w])
    }

    fn formula_of(d: &Derivation) -> Result<Formula, RuleError> {
        match &d.conclusion.ant {
            StructuralTerm::Atom(f) => Ok(f.clone()),
            other => Err(RuleError {
                rule: d.app.rule,
                ctx: vec![],
                msg: format!("iso rules need a single formula on the left, found '{other}'"),
            }),
        }
    }

    /// `φ1 ⊢ ψ1`, `φ2 ⊢ ψ2` to `φ1·φ2 ⊢ ψ1·ψ2`.
    pub fn prod_iso(d1: Derivation, d2: Derivation) -> Result<Derivation, RuleError> {
        formula_of(&d1)?;
        formula_of(&d2)?;
        let r = by(RuleId::ProdR, vec![], vec![d1, d2])?;
        by(RuleId::ProdL, vec![], vec![r])
    }

    /// `φ1 ⊢ ψ1`, `φ2 ⊢ ψ2` to `φ1∧φ2 ⊢ ψ1∧ψ2`.
    pub fn meet_iso(d1: Derivation, d2: Derivation) -> Result<Derivation, RuleError> {
        let (f1, f2) = (formula_of(&d1)?, formula_of(&d2)?);
        let a = and_l1(d1, vec![], f2)?;
        let b = and_l2(d2, vec![], f1)?;
        by(RuleId::MeetR, vec![], vec![a, b])
    }

    /// `φ1 ⊢ ψ1`, `φ2 ⊢ ψ2` to `φ1∨φ2 ⊢ ψ1∨ψ2`.
    pub fn join_iso(d1: Derivation, d2: Derivation) -> Result<Derivation, RuleError> {
        formula_of(&d1)?;
        formula_of(&d2)?;
        let (s1, s2) = (d1.conclusion.succ.clone(), d2.conclusion.succ.clone());
        let a = by_aux(RuleId::JoinR1, vec![], Aux::Formula(s2), vec![d1])?;
        let b = by_aux(RuleId::JoinR2, vec![], Aux::Formula(s1), vec![d2])?;
        by(RuleId::JoinL, vec![], vec![a, b])
    }
}

// ---------------------------------------------------------------------------
// Backward instances

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BackwardLimits {
    /// Restrict backward T to wraps that can feed K, 4, ◇L, ◻L or ◇R.
    pub t_focus: bool,
    /// Offer backward ⊓C at all.
    pub allow_capc: bool,
}

impl Default for BackwardLimits {
    fn default() -> Self {
        BackwardLimits {
            t_focus: true,
            allow_capc: true,
        }
    }
}

/// Whether wrapping the node at `p` in `⟨·⟩` can be followed by a rule that
/// consumes the new angle.
fn t_candidate(s: &Sequent, p: &[u8], node: &StructuralTerm) -> bool {
    use StructuralTerm as S;
    if p.is_empty() && matches!(s.succ, Formula::Dia(_)) {
        return true;
    }
    match node {
        S::Atom(Formula::BBox(_)) | S::Angle(_) | S::Comma(..) => true,
        S::Atom(_) => {
            // a formula next to an angle can be wrapped to meet K
            if let Some((last, parent)) = p.split_last() {
                if let Some(S::Comma(a, b)) = s.ant.subterm_at(parent) {
                    let sib = if *last == 0 { b } else { a };
                    return matches!(**sib, S::Angle(_));
                }
            }
            false
        }
        _ => false,
    }
}

/// All instances of `rule` whose conclusion is `s`. `cut` and `mix` have
/// none (their premises are not determined by the conclusion).
pub fn backward_instances(s: &Sequent, rule: RuleId, limits: BackwardLimits) -> Vec<(RuleApp, Vec<Sequent>)> {
    use RuleId::*;
    use StructuralTerm as S;
    let mut out = Vec::new();
    let positions = s.ant.positions();
    let unary = |out: &mut Vec<(RuleApp, Vec<Sequent>)>, app: RuleApp, premise_ant: StructuralTerm| {
        out.push((app, vec![Sequent::new(premise_ant, s.succ.clone())]));
    };
    let put = |p: &[u8], t: StructuralTerm| replace_one(&s.ant, p, t).expect("position from positions()");
    match rule {
        Init => {
            if s.ant == S::Atom(s.succ.clone()) {
                out.push((RuleApp::with_aux(Init, vec![], Aux::Formula(s.succ.clone())), vec![]));
            }
        }
        OneR => {
            if s.ant == S::Eps && s.succ == Formula::One {
                out.push((RuleApp::new(OneR, vec![]), vec![]));
            }
        }
        TopR => {
            if s.succ == Formula::Top {
                out.push((RuleApp::with_aux(TopR, vec![], Aux::Struct(s.ant.clone())), vec![]));
            }
        }
        BotL => {
            for p in syntax::occurrences_of(&s.ant, &Formula::Bot) {
                out.push((RuleApp::with_aux(BotL, p, Aux::Sequent(s.clone())), vec![]));
            }
        }
        Cut | Mix => {}
        ProdR => {
            if let (S::Comma(a, b), Formula::Prod(f, g)) = (&s.ant, &s.succ) {
                out.push((
                    RuleApp::new(ProdR, vec![]),
                    vec![
                        Sequent::new((**a).clone(), (**f).clone()),
                        Sequent::new((**b).clone(), (**g).clone()),
                    ],
                ));
            }
        }
        MeetR => {
            if let Formula::Meet(f, g) = &s.succ {
                out.push((
                    RuleApp::new(MeetR, vec![]),
                    vec![
                        Sequent::new(s.ant.clone(), (**f).clone()),
                        Sequent::new(s.ant.clone(), (**g).clone()),
                    ],
                ));
            }
        }
        JoinR1 | JoinR2 => {
            if let Formula::Join(f, g) = &s.succ {
                let (keep, other) = if rule == JoinR1 { (f, g) } else { (g, f) };
                out.push((
                    RuleApp::with_aux(rule, vec![], Aux::Formula((**other).clone())),
                    vec![Sequent::new(s.ant.clone(), (**keep).clone())],
                ));
            }
        }
        DiaR => {
            if let (S::Angle(g), Formula::Dia(f)) = (&s.ant, &s.succ) {
                out.push((RuleApp::new(DiaR, vec![]), vec![Sequent::new((**g).clone(), (**f).clone())]));
            }
        }
        BboxR => {
            if let Formula::BBox(f) = &s.succ {
                out.push((
                    RuleApp::new(BboxR, vec![]),
                    vec![Sequent::new(S::angle(s.ant.clone()), (**f).clone())],
                ));
            }
        }
        ProdOne | OneProd => {
            if let Formula::Prod(f, g) = &s.succ {
                let keep = match (rule, &**f, &**g) {
                    (ProdOne, _, Formula::One) => Some(f),
                    (OneProd, Formula::One, _) => Some(g),
                    _ => None,
                };
                if let Some(k) = keep {
                    out.push((RuleApp::new(rule, vec![]), vec![Sequent::new(s.ant.clone(), (**k).clone())]));
                }
            }
        }
        _ => {
            for p in positions {
                let node = s.ant.subterm_at(&p).expect("listed position");
                let app = || RuleApp::new(rule, p.clone());
                match (rule, node) {
                    (OAL2r, S::Comma(a, r)) => {
                        if let S::Comma(b, c) = &**r {
                            unary(
                                &mut out,
                                app(),
                                put(&p, S::comma(S::comma((**a).clone(), (**b).clone()), (**c).clone())),
                            );
                        }
                    }
                    (OAR2l, S::Comma(l, c)) => {
                        if let S::Comma(a, b) = &**l {
                            unary(
                                &mut out,
                                app(),
                                put(&p, S::comma((**a).clone(), S::comma((**b).clone(), (**c).clone()))),
                            );
                        }
                    }
                    (CapAL2r, S::Cap(a, r)) => {
                        if let S::Cap(b, c) = &**r {
                            unary(
                                &mut out,
                                app(),
                                put(&p, S::cap(S::cap((**a).clone(), (**b).clone()), (**c).clone())),
                            );
                        }
                    }
                    (CapAR2l, S::Cap(l, c)) => {
                        if let S::Cap(a, b) = &**l {
                            unary(
                                &mut out,
                                app(),
                                put(&p, S::cap((**a).clone(), S::cap((**b).clone(), (**c).clone()))),
                            );
                        }
                    }
                    (OEps, S::Comma(a, b)) if **b == S::Eps => unary(&mut out, app(), put(&p, (**a).clone())),
                    (EpsO, S::Comma(a, b)) if **a == S::Eps => unary(&mut out, app(), put(&p, (**b).clone())),
                    (CapW1, S::Cap(a, b)) => unary(
                        &mut out,
                        RuleApp::with_aux(CapW1, p.clone(), Aux::Struct((**b).clone())),
                        put(&p, (**a).clone()),
                    ),
                    (CapE, S::Cap(a, b)) => unary(&mut out, app(), put(&p, S::cap((**b).clone(), (**a).clone()))),
                    (CapC, _) if limits.allow_capc => unary(&mut out, app(), put(&p, S::cap(node.clone(), node.clone()))),
                    (K, S::Angle(inner)) => {
                        if let S::Comma(a, b) = &**inner {
                            unary(&mut out, app(), put(&p, S::comma(S::angle((**a).clone()), S::angle((**b).clone()))));
                        }
                    }
                    (T, _) if !limits.t_focus || t_candidate(s, &p, node) => unary(&mut out, app(), put(&p, S::angle(node.clone()))),
                    (Four, S::Angle(inner)) => {
                        if let S::Angle(_) = &**inner {
                            unary(&mut out, app(), put(&p, (**inner).clone()));
                        }
                    }
                    (ProdL, S::Atom(Formula::Prod(a, b))) => {
                        unary(&mut out, app(), put(&p, S::comma(S::Atom((**a).clone()), S::Atom((**b).clone()))))
                    }
                    (MeetL, S::Atom(Formula::Meet(a, b))) => {
                        unary(&mut out, app(), put(&p, S::cap(S::Atom((**a).clone()), S::Atom((**b).clone()))))
                    }
                    (DiaL, S::Atom(Formula::Dia(a))) => unary(&mut out, app(), put(&p, S::angle(S::Atom((**a).clone())))),
                    (OneL, S::Atom(Formula::One)) => unary(&mut out, app(), put(&p, S::Eps)),
                    (BboxL, S::Angle(inner)) => {
                        if let S::Atom(Formula::BBox(f)) = &**inner {
                            unary(&mut out, app(), put(&p, S::Atom((**f).clone())));
                        }
                    }
                    (JoinL, S::Atom(Formula::Join(a, b))) => out.push((
                        app(),
                        vec![
                            Sequent::new(put(&p, S::Atom((**a).clone())), s.succ.clone()),
                            Sequent::new(put(&p, S::Atom((**b).clone())), s.succ.clone()),
                        ],
                    )),
                    _ => {}
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Derivation files

/// On-disk form of a derivation node. `aux` is recovered from the
/// conclusion when loading.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationRecord {
    pub rule: String,
    #[serde(default)]
    pub ctx: Position,
    #[serde(default)]
    pub occ: Vec<Position>,
    pub conclusion: String,
    #[serde(default)]
    pub premises: Vec<DerivationRecord>,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown rule '{0}'")]
    UnknownRule(String),
    #[error("conclusion '{text}': {err}")]
    Parse { text: String, err: ParseError },
    #[error("{rule}: conclusion '{conclusion}' does not fit the rule")]
    Aux { rule: String, conclusion: String },
}

impl From<&Derivation> for DerivationRecord {
    fn from(d: &Derivation) -> Self {
        DerivationRecord {
            rule: d.app.rule.name().to_string(),
            ctx: d.app.ctx.clone(),
            occ: d.app.occ.clone(),
            conclusion: d.conclusion.to_string(),
            premises: d.premises.iter().map(DerivationRecord::from).collect(),
        }
    }
}

impl DerivationRecord {
    /// Rebuilds the tree without checking it; run [`check_derivation`] on
    /// the result.
    pub fn to_derivation(&self) -> Result<Derivation, LoadError> {
        let rule = RuleId::from_name(&self.rule).ok_or_else(|| LoadError::UnknownRule(self.rule.clone()))?;
        let conclusion = parse_sequent(&self.conclusion).map_err(|err| LoadError::Parse {
            text: self.conclusion.clone(),
            err,
        })?;
        let aux = infer_aux(rule, &self.ctx, &conclusion).ok_or_else(|| LoadError::Aux {
            rule: self.rule.clone(),
            conclusion: self.conclusion.clone(),
        })?;
        let premises = self.premises.iter().map(|p| p.to_derivation()).collect::<Result<_, _>>()?;
        Ok(Derivation {
            conclusion,
            app: RuleApp {
                rule,
                ctx: self.ctx.clone(),
                occ: self.occ.clone(),
                aux,
            },
            premises,
        })
    }
}

pub fn derivation_to_json(d: &Derivation) -> String {
    serde_json::to_string_pretty(&DerivationRecord::from(d)).expect("records serialize")
}

pub fn derivation_from_json(text: &str) -> Result<Derivation, LoadError> {
    serde_json::from_str::<DerivationRecord>(text)?.to_derivation()
}

// ---------------------------------------------------------------------------
// Corpus

fn x() -> Formula {
    var("x")
}
fn y() -> Formula {
    var("y")
}
fn z() -> Formula {
    var("z")
}
fn at(f: Formula) -> StructuralTerm {
    StructuralTerm::Atom(f)
}

type Built = Result<Derivation, RuleError>;

fn step(rule: RuleId, ctx: &[u8], d: Derivation) -> Built {
    by(rule, ctx.to_vec(), vec![d])
}

fn join_r1(d: Derivation, other: Formula) -> Built {
    by_aux(RuleId::JoinR1, vec![], Aux::Formula(other), vec![d])
}

fn join_r2(d: Derivation, other: Formula) -> Built {
    by_aux(RuleId::JoinR2, vec![], Aux::Formula(other), vec![d])
}

fn weaken(d: Derivation, ctx: &[u8], with: Formula) -> Built {
    by_aux(RuleId::CapW1, ctx.to_vec(), Aux::Struct(at(with)), vec![d])
}

/// `v ⊢ ◇v` by init, ◇R, T.
fn ax1_of(v: Formula) -> Built {
    let d = step(RuleId::DiaR, &[], init(v))?;
    step(RuleId::T, &[], d)
}

/// `⟨◻v⟩ ⊢ ◻v` by init, ◻L, 4, ◻R.
fn angle_box(v: Formula) -> Built {
    let d = step(RuleId::BboxL, &[], init(v))?;
    let d = step(RuleId::Four, &[], d)?;
    step(RuleId::BboxR, &[], d)
}

fn build_corpus() -> Result<BTreeMap<String, Derivation>, RuleError> {
    use RuleId::*;
    let mut c = BTreeMap::new();
    let dx = || Formula::dia(x());
    let dy = || Formula::dia(y());
    let bx = || Formula::bbox(x());
    let by_ = || Formula::bbox(y());

    // x ⊢ ◇x
    c.insert("ax1".into(), ax1_of(x())?);

    // ◇◇x ⊢ ◇x
    let d = step(DiaR, &[], init(x()))?;
    let d = step(Four, &[], d)?;
    let d = step(DiaL, &[0], d)?;
    c.insert("ax2a".into(), step(DiaL, &[], d)?);

    // ◇x ⊢ ◇◇x
    let d = step(DiaR, &[], ax1_of(x())?)?;
    c.insert("ax2b".into(), step(DiaL, &[], d)?);

    // ◇(x∨y) ⊢ ◇x∨◇y
    let l = join_r1(step(DiaR, &[], init(x()))?, dy())?;
    let r = join_r2(step(DiaR, &[], init(y()))?, dx())?;
    let d = by(JoinL, vec![0], vec![l, r])?;
    c.insert("ax3a".into(), step(DiaL, &[], d)?);

    // ◇x∨◇y ⊢ ◇(x∨y)
    let l = step(DiaL, &[], step(DiaR, &[], join_r1(init(x()), y())?)?)?;
    let r = step(DiaL, &[], step(DiaR, &[], join_r2(init(y()), x())?)?)?;
    c.insert("ax3b".into(), by(JoinL, vec![], vec![l, r])?);

    // ◻(x∧y) ⊢ ◻x∧◻y
    let l = step(BboxR, &[], step(BboxL, &[], derived::and_l1(init(x()), vec![], y())?)?)?;
    let r = step(BboxR, &[], step(BboxL, &[], derived::and_l2(init(y()), vec![], x())?)?)?;
    c.insert("ax4a".into(), by(MeetR, vec![], vec![l, r])?);

    // ◻x∧◻y ⊢ ◻(x∧y)
    let l = derived::and_l1(step(BboxL, &[], init(x()))?, vec![0], by_())?;
    let r = derived::and_l2(step(BboxL, &[], init(y()))?, vec![0], bx())?;
    let d = by(MeetR, vec![], vec![l, r])?;
    c.insert("ax4b".into(), step(BboxR, &[], d)?);

    // ◇(x·y) ⊢ ◇x·◇y
    let d = by(ProdR, vec![], vec![step(DiaR, &[], init(x()))?, step(DiaR, &[], init(y()))?])?;
    let d = step(K, &[], d)?;
    let d = step(ProdL, &[0], d)?;
    c.insert("ax5".into(), step(DiaL, &[], d)?);

    // ◇◻x ⊢ x
    let d = step(BboxL, &[], init(x()))?;
    c.insert("ax6".into(), step(DiaL, &[], d)?);

    // x ⊢ ◻◇x
    let d = step(DiaR, &[], init(x()))?;
    c.insert("ax7".into(), step(BboxR, &[], d)?);

    // x∧(y∨z) ⊢ (x∧y)∨(x∧z)
    let xy = Formula::meet(x(), y());
    let xz = Formula::meet(x(), z());
    let branch = |v: Formula| -> Built {
        let a = weaken(init(x()), &[], v.clone())?;
        let b = derived::cap_w2(init(v), vec![], at(x()))?;
        by(MeetR, vec![], vec![a, b])
    };
    let l = join_r1(branch(y())?, xz.clone())?;
    let r = join_r2(branch(z())?, xy.clone())?;
    let d = by(JoinL, vec![1], vec![l, r])?;
    c.insert("dist1".into(), step(MeetL, &[], d)?);

    // (x∧y)∨(x∧z) ⊢ x∧(y∨z)
    let half = |v: Formula, inj: Built| -> Built {
        let a = derived::and_l1(init(x()), vec![], v.clone())?;
        let b = derived::and_l2(inj?, vec![], x())?;
        by(MeetR, vec![], vec![a, b])
    };
    let l = half(y(), join_r1(init(y()), z()))?;
    let r = half(z(), join_r2(init(z()), y()))?;
    c.insert("dist1c".into(), by(JoinL, vec![], vec![l, r])?);

    // (x∨y)∧(x∨z) ⊢ x∨(y∧z)
    let yz_m = Formula::meet(y(), z());
    let first = join_r1(derived::cap_w2(init(x()), vec![], at(Formula::join(x(), y())))?, yz_m.clone())?;
    let xz_branch = join_r1(weaken(init(x()), &[], z())?, yz_m.clone())?;
    let yz_branch = {
        let a = weaken(init(y()), &[], z())?;
        let b = derived::cap_w2(init(z()), vec![], at(y()))?;
        join_r2(by(MeetR, vec![], vec![a, b])?, x())?
    };
    let second = by(JoinL, vec![0], vec![xz_branch, yz_branch])?;
    let d = by(JoinL, vec![1], vec![first, second])?;
    c.insert("dist2".into(), step(MeetL, &[], d)?);

    // x∨(y∧z) ⊢ (x∨y)∧(x∨z)
    let l = by(MeetR, vec![], vec![join_r1(init(x()), y())?, join_r1(init(x()), z())?])?;
    let a = derived::and_l1(join_r2(init(y()), x())?, vec![], z())?;
    let b = derived::and_l2(join_r2(init(z()), x())?, vec![], y())?;
    let r = by(MeetR, vec![], vec![a, b])?;
    c.insert("dist2c".into(), by(JoinL, vec![], vec![l, r])?);

    // ◻(◻x·◻y) ⊢ ◻x·◻y
    let core = || -> Built {
        let d = by(ProdR, vec![], vec![angle_box(x())?, angle_box(y())?])?;
        step(K, &[], d)
    };
    let d = step(ProdL, &[0], core()?)?;
    let d = step(BboxL, &[0], d)?;
    let d = step(T, &[], d)?;
    c.insert("conuc1".into(), step(T, &[], d)?);

    // ◻x·◻y ⊢ ◻(◻x·◻y)
    let d = step(BboxR, &[], core()?)?;
    c.insert("conuc2".into(), step(ProdL, &[], d)?);

    Ok(c)
}

/// Named derivations of the defining identities, the distributive laws and
/// the co-nucleus law.
pub fn builtin_corpus() -> BTreeMap<String, Derivation> {
    build_corpus().expect("corpus derivations are well-formed")
}
