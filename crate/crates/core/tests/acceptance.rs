//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the report reads top to
//! bottom. Exits nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lmc_core::algebra::{endz_witness_check, rdp_all_splits, rdp_decompose};
use lmc_core::calculus::{builtin_corpus, check_derivation, RuleId};
use lmc_core::models::{
    build_truncated_model, bundled_models, check_inequation, check_rule_soundness, countermodel_search, residuation_counterexample,
    verify_axioms, z2_total, Schema, Strategy, DEFAULT_BUDGET,
};
use lmc_core::search::{prove, SearchBudget};
use lmc_core::syntax::{
    flat, natural, parse_formula, parse_identity, parse_sequent, parse_struct, random_formula, random_sequent, random_struct, sharp,
    Formula, Identity, Inequation, StructuralTerm,
};
use lmc_core::traces::{
    classify, is_valid, parse_trace, policy_p1, policy_p2, prefix_closure, running_example, safety_via_box, valid_traces, FProperty,
    Validity,
};
use lmc_core::transform::{cut_as_mix, eliminate_cut, generate_cut_corpus, mix_as_cuts};

const SEED: u64 = 20_240_917;

const AXIOM_TIME: Duration = Duration::from_secs(5);
const SOUNDNESS_TIME: Duration = Duration::from_secs(60);
const COUNTERMODEL_TIME: Duration = Duration::from_secs(1);
const SOUNDNESS_SAMPLES: u64 = 1000;
const CUT_CORPUS_SIZE: usize = 120;
const RDP_TRIPLES: usize = 10_000;
const RDP_ORACLE: usize = 1_000;
const RDP_MAX_LEN: usize = 12;
const TRACE_LEN: usize = 8;
const SUBSETS: usize = 1_000;
const SUBSET_LEN: usize = 3;
const ROUND_TRIPS: usize = 10_000;
const ENDZ_RANGE: (i64, i64) = (-100, 100);

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn identity(text: &str) -> Identity {
    parse_identity(text).unwrap_or_else(|e| panic!("{text}: {e}"))
}

/// Each direction of an identity as an inequation.
fn inequations(e: &Identity) -> Vec<Inequation> {
    flat(e).iter().map(sharp).collect()
}

fn axiom_corpus() -> Outcome {
    let start = Instant::now();
    let axioms = [
        ("ax1", "x <= dia x"),
        ("ax2", "dia dia x = dia x"),
        ("ax3", "dia (x | y) = (dia x | dia y)"),
        ("ax4", "box (x & y) = (box x & box y)"),
        ("ax5", "dia (x * y) <= (dia x * dia y)"),
        ("ax6", "dia box x <= x"),
        ("ax7", "x <= box dia x"),
    ];
    let corpus = builtin_corpus();
    let mut count = 0;
    for (key, text) in axioms {
        let seqs = flat(&identity(text));
        let keys: Vec<String> = if seqs.len() == 1 {
            vec![key.to_string()]
        } else {
            vec![format!("{key}a"), format!("{key}b")]
        };
        for (s, k) in seqs.iter().zip(&keys) {
            count += 1;
            let d = corpus.get(k).ok_or_else(|| format!("corpus lacks {k}"))?;
            ensure(d.conclusion == *s, || format!("{k} concludes {} not {s}", d.conclusion))?;
            check_derivation(d).map_err(|e| format!("{k}: {e}"))?;
            ensure(prove(s, SearchBudget::default()).is_found(), || format!("prove misses {s}"))?;
        }
    }
    ensure(count == 10, || format!("{count} axiom sequents, expected 10"))?;
    let t = start.elapsed();
    ensure(t < AXIOM_TIME, || format!("took {t:?}"))?;
    Ok(format!("10 sequents checked and re-found in {:.2?}", t))
}

fn derived_laws() -> Outcome {
    let laws = [
        "box x <= x",
        "box box x = box x",
        "box (box x * box y) = (box x * box y)",
        "dia box x = box x",
        "dia bot = bot",
        "dia top = top",
        "box bot = bot",
        "box top = top",
        "dia (x & y) <= (dia x & dia y)",
        "(box x | box y) <= box (x | y)",
        "box dia x = dia x",
        "dia (dia x * dia y) = (dia x * dia y)",
        "dia (dia x & dia y) = (dia x & dia y)",
        "box (box x | box y) = (box x | box y)",
        "(box x * box y) <= box (x * y)",
        "(x & (y | z)) <= ((x & y) | (x & z))",
        "((x | y) & (x | z)) <= (x | (y & z))",
    ];
    let trunc = build_truncated_model(&['a'], 2).map_err(|e| e.to_string())?;
    let z2 = z2_total();
    let mut sequents = 0;
    for text in laws {
        let e = identity(text);
        for s in flat(&e) {
            sequents += 1;
            ensure(prove(&s, SearchBudget::default()).is_found(), || format!("prove misses {s}"))?;
        }
        for ineq in inequations(&e) {
            for m in [&trunc, &z2] {
                let cex = check_inequation(m, &ineq, Strategy::exhaustive()).map_err(|e| e.to_string())?;
                ensure(cex.is_none(), || format!("{ineq} fails on {}", m.name()))?;
            }
        }
    }
    Ok(format!("{} laws, {sequents} sequents proved, 0 counterexamples", laws.len()))
}

fn rule_soundness() -> Outcome {
    let start = Instant::now();
    let small = build_truncated_model(&['a'], 2).map_err(|e| e.to_string())?;
    ensure(small.size() == 8, || format!("truncated model has {} elements", small.size()))?;
    let wide = build_truncated_model(&['a', 'b'], 2).map_err(|e| e.to_string())?;
    for rule in RuleId::ALL {
        let r = check_rule_soundness(&small, Schema::Rule(rule), Strategy::exhaustive()).map_err(|e| e.to_string())?;
        ensure(r.passed(), || format!("{} fails exhaustively: {:?}", rule.name(), r.failure))?;
        let r = check_rule_soundness(
            &wide,
            Schema::Rule(rule),
            Strategy::Random {
                samples: SOUNDNESS_SAMPLES,
                seed: SEED,
            },
        )
        .map_err(|e| e.to_string())?;
        ensure(r.passed(), || format!("{} fails on samples: {:?}", rule.name(), r.failure))?;
    }
    let t = start.elapsed();
    ensure(t < SOUNDNESS_TIME, || format!("took {t:?}"))?;
    Ok(format!("{} rules sound in {:.2?}", RuleId::ALL.len(), t))
}

fn cut_elimination() -> Outcome {
    let corpus = generate_cut_corpus(SEED, CUT_CORPUS_SIZE);
    ensure(corpus.len() >= 100, || format!("only {} derivations generated", corpus.len()))?;
    let mixes = corpus.iter().filter(|d| d.uses(RuleId::Mix)).count();
    let mut steps = 0;
    for (i, d) in corpus.iter().enumerate() {
        ensure(!d.is_cut_free(), || format!("#{i} has no cut"))?;
        let el = eliminate_cut(d).map_err(|e| format!("#{i} ({}): {e}", d.conclusion))?;
        check_derivation(&el.derivation).map_err(|e| format!("#{i}: output invalid: {e}"))?;
        ensure(el.derivation.is_cut_free(), || format!("#{i}: output still has a cut"))?;
        ensure(el.derivation.conclusion == d.conclusion, || format!("#{i}: endsequent changed"))?;
        for rec in &el.trace {
            if let Some(parent) = rec.parent {
                ensure(rec.rank < parent, || format!("#{i}: {rec}"))?;
            }
        }
        steps += el.trace.len();
    }
    Ok(format!(
        "{} derivations ({mixes} with mix), {steps} rank-decreasing steps",
        corpus.len()
    ))
}

fn non_derivability() -> Outcome {
    let goals = [
        "dia 1 |- 1",
        "box x |- (box x * box 1)",
        "box x |- (box 1 * box x)",
        "dia (x * y) |- (dia x | (x * dia y))",
    ];
    for (i, text) in goals.iter().enumerate() {
        let s = parse_sequent(text).map_err(|e| e.to_string())?;
        ensure(!prove(&s, SearchBudget::default()).is_found(), || format!("prove found {s}"))?;
        if i < 3 {
            let start = Instant::now();
            let (cm, _) = countermodel_search(&sharp(&s), 3, 2, DEFAULT_BUDGET);
            let t = start.elapsed();
            let cm = cm.ok_or_else(|| format!("no countermodel for {s}"))?;
            ensure(cm.model.name() == "Z2-total" && cm.monoid_size == Some(2), || {
                format!("{s}: refuted by {} (size {:?})", cm.model.name(), cm.monoid_size)
            })?;
            ensure(t < COUNTERMODEL_TIME, || format!("{s}: countermodel took {t:?}"))?;
        }
    }
    Ok("4 sequents exhausted, 3 refuted on Z2-total".into())
}

fn random_word<R: Rng>(rng: &mut R, max: usize) -> String {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| if rng.gen_bool(0.5) { 'a' } else { 'b' }).collect()
}

fn rdp_words() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for i in 0..RDP_TRIPLES {
        let u = random_word(&mut rng, RDP_MAX_LEN);
        let v = random_word(&mut rng, RDP_MAX_LEN);
        let uv = format!("{u}{v}");
        let w = uv[..rng.gen_range(0..=uv.len().min(RDP_MAX_LEN))].to_string();
        let (a, b) = rdp_decompose(&u, &v, &w).ok_or_else(|| format!("no split for u={u} v={v} w={w}"))?;
        ensure(u.starts_with(&a) && v.starts_with(&b) && format!("{a}{b}") == w, || {
            format!("bad split {a}.{b} for u={u} v={v} w={w}")
        })?;
        if i < RDP_ORACLE {
            let all = rdp_all_splits(&u, &v, &w);
            ensure(all.contains(&(a.clone(), b.clone())), || {
                format!("oracle disagrees on u={u} v={v} w={w}")
            })?;
        }
    }
    Ok(format!("{RDP_TRIPLES} triples decompose, oracle agrees on {RDP_ORACLE}"))
}

fn model_validity() -> Outcome {
    let models = bundled_models();
    for m in &models {
        let report = verify_axioms(m);
        ensure(report.all_pass(), || format!("{}: {}", m.name(), report.render(m)))?;
        ensure(residuation_counterexample(m).is_none(), || {
            format!("{}: residuation fails", m.name())
        })?;
    }
    Ok(format!("{} bundled models", models.len()))
}

fn random_property<R: Rng>(rng: &mut R, words: &[Vec<lmc_core::traces::Pair>]) -> FProperty<lmc_core::traces::Pair> {
    let k = rng.gen_range(0..=12);
    let picked = words.choose_multiple(rng, k).cloned();
    let p = FProperty::from_words(picked);
    match rng.gen_range(0..3) {
        0 => p,
        1 => prefix_closure(&p),
        _ => {
            // closed except possibly one missing prefix
            let mut closed = prefix_closure(&p);
            let drop = closed.words.iter().nth(rng.gen_range(0..closed.len().max(1))).cloned();
            if let Some(w) = drop {
                closed.words.remove(&w);
            }
            closed
        }
    }
}

fn traces() -> Outcome {
    let e = running_example();
    let valid = valid_traces(&e, TRACE_LEN, true, Validity::Strict).map_err(|e| e.to_string())?;
    ensure(valid.contains(&[]), || "missing the empty trace".into())?;
    for w in &valid.words {
        ensure(policy_p1(w) && policy_p2(w), || {
            format!("policy fails on {}", lmc_core::traces::render_trace(w))
        })?;
    }
    ensure(classify(&valid, &e.universe(TRACE_LEN)).safety, || {
        "valid traces are not a safety property".into()
    })?;

    let universe = e.universe(SUBSET_LEN);
    let words = universe.words().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut safe = 0;
    for _ in 0..SUBSETS {
        let p = random_property(&mut rng, &words);
        let c = classify(&p, &universe).safety;
        ensure(c == safety_via_box(&p, &universe), || format!("disagreement on {p:?}"))?;
        safe += c as usize;
    }

    let tr = |s: &str| parse_trace(s).unwrap_or_else(|e| panic!("{s}: {e}"));
    let good = [
        tr("(s0,conn),(s1,snd),(s2,ack),(s4,end)"),
        tr(&["(s1,snd),(s2,nack),(s3,end),(s0,conn)"; 3].join(",")),
    ];
    for mode in [Validity::Literal, Validity::Strict] {
        for w in &good {
            ensure(is_valid(&e, w, mode), || format!("example rejected under {mode:?}"))?;
        }
        for k in 1..=5 {
            let w = tr(&format!("(s1,snd),{}", ["(s2,ack),(s2,nack)"; 5][..k].join(",")));
            ensure(!is_valid(&e, &w, mode), || format!("snd (ack nack)^{k} accepted"))?;
        }
        for n in 2..=6 {
            let w = tr(&vec!["(s0,conn)"; n].join(","));
            ensure(!is_valid(&e, &w, mode), || format!("conn^{n} accepted"))?;
        }
    }
    Ok(format!(
        "{} rooted traces satisfy P1 and P2; box/closure agree on {SUBSETS} subsets ({safe} safe)",
        valid.len()
    ))
}

fn witnesses() -> Outcome {
    let r = endz_witness_check(ENDZ_RANGE.0, ENDZ_RANGE.1);
    let want_f: BTreeSet<i64> = [1, 2].into();
    let want_k: BTreeSet<i64> = [0, 1].into();
    ensure(r.fg_constant_one && r.kk_constant_one, || "composites are not constantly 1".into())?;
    ensure(r.image_f == want_f && r.image_k == want_k, || {
        format!("images {:?} {:?}", r.image_f, r.image_k)
    })?;
    ensure(r.all_pass(), || format!("{r:?}"))?;
    Ok(format!("f.g = k.k' = 1 on [{}, {}]", ENDZ_RANGE.0, ENDZ_RANGE.1))
}

fn natural_is_homomorphic(t: &StructuralTerm) -> bool {
    let ok = match t {
        StructuralTerm::Atom(f) => natural(t) == *f,
        StructuralTerm::Eps => natural(t) == Formula::One,
        StructuralTerm::Comma(a, b) => natural(t) == Formula::prod(natural(a), natural(b)),
        StructuralTerm::Cap(a, b) => natural(t) == Formula::meet(natural(a), natural(b)),
        StructuralTerm::Angle(a) => natural(t) == Formula::dia(natural(a)),
    };
    ok && match t {
        StructuralTerm::Comma(a, b) | StructuralTerm::Cap(a, b) => natural_is_homomorphic(a) && natural_is_homomorphic(b),
        StructuralTerm::Angle(a) => natural_is_homomorphic(a),
        _ => true,
    }
}

fn round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for i in 0..ROUND_TRIPS {
        let depth = rng.gen_range(0..6);
        match i % 3 {
            0 => {
                let f = random_formula(&mut rng, depth);
                ensure(parse_formula(&f.to_string()).as_ref() == Ok(&f), || format!("formula {f}"))?;
            }
            1 => {
                let t = random_struct(&mut rng, depth);
                ensure(parse_struct(&t.to_string()).as_ref() == Ok(&t), || format!("struct {t}"))?;
            }
            _ => {
                let s = random_sequent(&mut rng, depth);
                ensure(parse_sequent(&s.to_string()).as_ref() == Ok(&s), || format!("sequent {s}"))?;
            }
        }
    }
    for _ in 0..ROUND_TRIPS {
        let depth = rng.gen_range(0..6);
        let t = random_struct(&mut rng, depth);
        ensure(natural_is_homomorphic(&t), || format!("natural on {t}"))?;
    }
    let corpus = generate_cut_corpus(SEED, CUT_CORPUS_SIZE);
    for (i, d) in corpus.iter().enumerate() {
        let cuts = mix_as_cuts(d);
        check_derivation(&cuts).map_err(|e| format!("#{i}: mix_as_cuts invalid: {e}"))?;
        let back = cut_as_mix(&cuts);
        check_derivation(&back).map_err(|e| format!("#{i}: round trip invalid: {e}"))?;
        ensure(back.conclusion == d.conclusion && cuts.conclusion == d.conclusion, || {
            format!("#{i}: endsequent changed")
        })?;
    }
    Ok(format!(
        "{ROUND_TRIPS} parse, {ROUND_TRIPS} natural, {} mix/cut round trips",
        corpus.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("axiom corpus", axiom_corpus),
        ("derived laws", derived_laws),
        ("rule soundness", rule_soundness),
        ("cut elimination", cut_elimination),
        ("non-derivability", non_derivability),
        ("rdp on words", rdp_words),
        ("model validity", model_validity),
        ("traces", traces),
        ("witness functions", witnesses),
        ("round trips", round_trips),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        let t = start.elapsed();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} [{t:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why} [{t:.2?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
