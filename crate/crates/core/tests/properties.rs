use std::collections::BTreeMap;

use proptest::prelude::*;

use lmc_core::calculus::{apply_rule, backward_instances, check_derivation, derived, BackwardLimits, RuleId};
use lmc_core::models::{eval, eval_struct, z2_total, Assignment};
use lmc_core::search::{prove, repeats_on_branch, SearchBudget};
use lmc_core::syntax::{
    cp, cp_s, natural, occurrences_of, parse_formula, parse_sequent, parse_struct, replace_at, var, Formula, Sequent, StructuralTerm,
};
use lmc_core::traces::{box_interior, prefix_closure, FProperty, Universe};
use lmc_core::transform::{eliminate_cut, eta, generate_cut_corpus};

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        4 => prop::sample::select(vec!["x", "y", "z"]).prop_map(var),
        1 => Just(Formula::One),
        1 => Just(Formula::Bot),
        1 => Just(Formula::Top),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::prod(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::meet(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::join(a, b)),
            inner.clone().prop_map(Formula::dia),
            inner.prop_map(Formula::bbox),
        ]
    })
}

fn small_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![prop::sample::select(vec!["x", "y"]).prop_map(var), Just(Formula::One)];
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::prod(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::meet(a, b)),
            inner.clone().prop_map(Formula::dia),
            inner.prop_map(Formula::bbox),
        ]
    })
}

fn structure() -> impl Strategy<Value = StructuralTerm> {
    let leaf = prop_oneof![5 => formula().prop_map(StructuralTerm::Atom), 1 => Just(StructuralTerm::Eps)];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| StructuralTerm::comma(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| StructuralTerm::cap(a, b)),
            inner.prop_map(StructuralTerm::angle),
        ]
    })
}

fn sequent() -> impl Strategy<Value = Sequent> {
    (structure(), formula()).prop_map(|(a, s)| Sequent::new(a, s))
}

fn z2_assignment() -> impl Strategy<Value = Assignment> {
    (0..4u64, 0..4u64, 0..4u64).prop_map(|(x, y, z)| BTreeMap::from([("x".into(), x), ("y".into(), y), ("z".into(), z)]))
}

fn word_set(max_len: usize) -> impl Strategy<Value = FProperty<char>> {
    prop::collection::vec(prop::collection::vec(prop::sample::select(vec!['a', 'b']), 0..=max_len), 0..8).prop_map(FProperty::from_words)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rendering_parses_back(f in formula(), t in structure(), s in sequent()) {
        prop_assert_eq!(parse_formula(&f.to_string()), Ok(f));
        prop_assert_eq!(parse_struct(&t.to_string()), Ok(t));
        prop_assert_eq!(parse_sequent(&s.to_string()), Ok(s));
    }

    #[test]
    fn natural_commutes_with_evaluation(t in structure(), a in z2_assignment()) {
        let m = z2_total();
        prop_assert_eq!(eval_struct(&m, &a, &t).unwrap(), eval(&m, &a, &natural(&t)).unwrap());
        if let StructuralTerm::Comma(l, r) = &t {
            prop_assert_eq!(natural(&t), Formula::prod(natural(l), natural(r)));
        }
    }

    #[test]
    fn backward_instances_reapply(s in sequent()) {
        for rule in RuleId::ALL {
            if matches!(rule, RuleId::Cut | RuleId::Mix) {
                continue;
            }
            for (app, premises) in backward_instances(&s, rule, BackwardLimits::default()) {
                prop_assert_eq!(apply_rule(&app, &premises), Ok(s.clone()), "{}", rule.name());
            }
        }
    }

    #[test]
    fn eta_expansion_is_cut_free(f in formula()) {
        let d = eta(&f);
        prop_assert!(check_derivation(&d).is_ok());
        prop_assert!(d.is_cut_free());
        prop_assert_eq!(d.conclusion, Sequent::new(StructuralTerm::Atom(f.clone()), f));
    }

    #[test]
    fn derived_rules_expand_to_valid_derivations(a in formula(), b in formula()) {
        let both = [
            derived::prod_iso(eta(&a), eta(&b)).unwrap(),
            derived::meet_iso(eta(&a), eta(&b)).unwrap(),
            derived::join_iso(eta(&a), eta(&b)).unwrap(),
        ];
        for d in &both {
            prop_assert!(check_derivation(d).is_ok());
            prop_assert!(d.is_cut_free());
        }
        prop_assert_eq!(&both[0].conclusion.succ, &Formula::prod(a.clone(), b.clone()));
        prop_assert_eq!(&both[1].conclusion.succ, &Formula::meet(a.clone(), b.clone()));
        prop_assert_eq!(&both[2].conclusion.succ, &Formula::join(a, b));
    }

    #[test]
    fn occurrences_address_atoms(t in structure(), f in formula()) {
        prop_assert_eq!(cp_s(&StructuralTerm::Atom(f.clone())), 0);
        let target = match &t {
            StructuralTerm::Comma(a, _) | StructuralTerm::Cap(a, _) => a.leaf_formulas().first().cloned().cloned().unwrap_or(f),
            StructuralTerm::Atom(g) => g.clone(),
            _ => f,
        };
        let occ = occurrences_of(&t, &target);
        for p in &occ {
            prop_assert_eq!(t.subterm_at(p), Some(&StructuralTerm::Atom(target.clone())));
        }
        prop_assert_eq!(replace_at(&t, &occ, &StructuralTerm::Atom(target)), Ok(t));
    }

    #[test]
    fn prodr_raises_complexity(a in formula(), b in formula()) {
        prop_assert_eq!(cp(&Formula::prod(a.clone(), b.clone())), cp(&a) + cp(&b) + 1);
    }

    #[test]
    fn trace_closure_laws(p in word_set(3), q in word_set(3)) {
        let u = Universe::new(vec!['a', 'b'], 3);
        let cp = prefix_closure(&p);
        prop_assert!(p.is_subset(&cp));
        prop_assert_eq!(prefix_closure(&cp), cp.clone());
        let bq = box_interior(&q, &u);
        prop_assert!(bq.is_subset(&q));
        prop_assert_eq!(box_interior(&bq, &u), bq.clone());
        // residuation: ◇P ⊆ Q iff P ⊆ ◻Q
        prop_assert_eq!(cp.is_subset(&q), p.is_subset(&bq));
        // ◇ preserves unions
        prop_assert_eq!(prefix_closure(&p.union(&q)), cp.union(&prefix_closure(&q)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn search_is_monotone_in_depth(a in small_formula(), b in small_formula()) {
        let s = Sequent::new(StructuralTerm::Atom(a), b);
        let shallow = SearchBudget { max_depth: 5, max_nodes: 20_000, ..SearchBudget::default() };
        let deep = SearchBudget { max_depth: 7, max_nodes: 400_000, ..SearchBudget::default() };
        if let Some(d) = prove(&s, shallow).derivation() {
            prop_assert!(check_derivation(d).is_ok());
            prop_assert!(d.height() <= shallow.max_depth);
            prop_assert!(d.is_cut_free() && !repeats_on_branch(d));
            prop_assert!(prove(&s, deep).is_found());
        }
    }

    #[test]
    fn elimination_preserves_endsequent(seed in any::<u64>()) {
        for d in generate_cut_corpus(seed, 4) {
            let el = eliminate_cut(&d).unwrap();
            prop_assert!(check_derivation(&el.derivation).is_ok());
            prop_assert!(el.derivation.is_cut_free());
            prop_assert_eq!(&el.derivation.conclusion, &d.conclusion);
            for rec in &el.trace {
                if let Some(parent) = rec.parent {
                    prop_assert!(rec.rank < parent, "{}", rec);
                }
            }
        }
    }
}
