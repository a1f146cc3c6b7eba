use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context as _};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lmc_core::algebra::{
    cancellative_conical, check_rdp, endz_witness_check, enumerate_monoids_up_to_iso, is_preorder, rdp_all_splits, rdp_decompose,
    FiniteMonoid, Side,
};
use lmc_core::calculus::{derivation_from_json, derivation_to_json};
use lmc_core::models::{
    bundled_models, check_inequation, check_rule_soundness, countermodel_search, parse_model_description, parse_monoid_description,
    verify_axioms, Model, Schema, Strategy, DEFAULT_BUDGET,
};
use lmc_core::search::{prove, SearchBudget, SearchResult};
use lmc_core::syntax::{
    cp, cp_s, flat, natural, parse_formula, parse_identity, parse_sequent, parse_struct, sharp, Identity, Inequation, Sequent,
};
use lmc_core::traces::{
    classify, parse_lts, parse_property, policy_p1, policy_p2, render_trace, running_example, valid_traces, Lts, Validity,
};
use lmc_core::transform::{cut_as_mix, eliminate_mix_with, EliminationOptions};
use lmc_core::{check_derivation, RuleId};

#[derive(Parser)]
#[command(name = "lmc", version, about = "Sequent calculus toolkit for closure l-monoids")]
#[command(after_help = "Exit status: 0 success, 1 failed check / not found / counterexample, 2 usage error.")]
struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a term and print its canonical form.
    Parse {
        text: String,
        #[arg(long, value_enum, default_value_t = Kind::Auto)]
        kind: Kind,
    },
    /// Check a derivation file.
    Check { file: PathBuf },
    /// Search for a cut-free derivation of a sequent (or both halves of an identity).
    Prove {
        goal: String,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Write the derivation found to this file.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Eliminate cuts and mixes from a derivation file.
    Eliminate {
        file: PathBuf,
        /// Print one record per reduction step.
        #[arg(long)]
        trace: bool,
        /// Skip re-checking after every step.
        #[arg(long)]
        no_check: bool,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Evaluate a sequent or identity in models.
    Eval {
        goal: String,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Check rule soundness (and the algebraic axioms) in models.
    Soundness {
        /// Rule ids to sweep (default: every primitive rule).
        #[arg(long = "rule")]
        rules: Vec<String>,
        /// Also sweep the unsound converse of K.
        #[arg(long)]
        inverted_k: bool,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Search finite models for a refutation.
    Countermodel {
        goal: String,
        #[arg(long, default_value_t = 3)]
        monoid_size: usize,
        #[arg(long, default_value_t = 2)]
        max_len: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Traces of labelled transition systems.
    Traces {
        #[command(subcommand)]
        cmd: TracesCmd,
    },
    /// Divisibility, decomposition and witness checks.
    Algebra {
        #[command(subcommand)]
        cmd: AlgebraCmd,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Auto,
    Formula,
    Struct,
    Sequent,
    Identity,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long, default_value_t = SearchBudget::default().max_depth)]
    depth: usize,
    #[arg(long, default_value_t = SearchBudget::default().max_capc)]
    capc: usize,
    #[arg(long, default_value_t = SearchBudget::default().max_t)]
    tlimit: usize,
    /// Try T everywhere instead of only at focused positions.
    #[arg(long)]
    no_focus: bool,
    #[arg(long, default_value_t = SearchBudget::default().max_nodes)]
    nodes: usize,
}

impl BudgetArgs {
    fn budget(&self) -> SearchBudget {
        SearchBudget {
            max_depth: self.depth,
            max_capc: self.capc,
            max_t: self.tlimit,
            t_focus: !self.no_focus,
            max_nodes: self.nodes,
        }
    }
}

#[derive(Args)]
struct ModelArgs {
    /// Inline model description, e.g. "z2-total" or "truncated alphabet=ab L=2".
    #[arg(long, conflicts_with = "model_file")]
    model: Option<String>,
    #[arg(long)]
    model_file: Option<PathBuf>,
}

#[derive(Args)]
struct SamplingArgs {
    /// Random assignments instead of exhaustive enumeration.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SamplingArgs {
    fn strategy(&self) -> Strategy {
        match self.samples {
            Some(samples) => Strategy::Random { samples, seed: self.seed },
            None => Strategy::exhaustive(),
        }
    }
}

#[derive(Args)]
struct LtsArgs {
    /// LTS file; the request-response example when omitted.
    #[arg(long)]
    lts: Option<PathBuf>,
    /// Require the last action of a trace to be enabled.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum TracesCmd {
    /// List valid traces up to a length.
    Enumerate {
        #[command(flatten)]
        lts: LtsArgs,
        #[arg(long)]
        len: usize,
        /// Only traces starting at the initial state.
        #[arg(long)]
        rooted: bool,
        /// Print counts only.
        #[arg(long)]
        count: bool,
    },
    /// Safety and bounded liveness of a property file over Σ^≤len.
    Classify {
        #[command(flatten)]
        lts: LtsArgs,
        property: PathBuf,
        #[arg(long)]
        len: usize,
    },
    /// Check the two request-response policies on valid traces or a property file.
    Policy {
        #[command(flatten)]
        lts: LtsArgs,
        #[arg(long, default_value_t = 8)]
        len: usize,
        #[arg(long)]
        rooted: bool,
        #[arg(long)]
        property: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum AlgebraCmd {
    /// Decompose w ⊑ uv as u'v' with u' ⊑ u and v' ⊑ v.
    Rdp { u: String, v: String, w: String },
    /// Check the decomposition property of divisibility on every monoid up to a size.
    RdpMonoids {
        #[arg(long, default_value_t = 3)]
        max_size: usize,
    },
    /// Divisibility and decomposition report for a monoid description file.
    Monoid { file: PathBuf },
    /// The integer-function witnesses on [lo, hi].
    Endz {
        #[arg(long, default_value_t = -100, allow_hyphen_values = true)]
        lo: i64,
        #[arg(long, default_value_t = 100)]
        hi: i64,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Fail(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Fail(e.into())
    }
}

type Outcome = Result<bool, Failure>;

fn usage<T>(msg: impl std::fmt::Display) -> Result<T, Failure> {
    Err(Failure::Usage(anyhow!("{msg}")))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Usage)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// A sequent yields itself; an identity yields its sequent translations.
fn goals(text: &str) -> Result<Vec<Sequent>, Failure> {
    if text.contains("|-") {
        return parse_sequent(text).map(|s| vec![s]).or_else(|e| usage(format!("{text}: {e}")));
    }
    match parse_identity(text) {
        Ok(id) => Ok(flat(&id)),
        Err(e) => usage(format!("{text}: {e}")),
    }
}

fn inequations(text: &str) -> Result<Vec<Inequation>, Failure> {
    Ok(goals(text)?.iter().map(sharp).collect())
}

fn models(args: &ModelArgs) -> Result<Vec<Model>, Failure> {
    let desc = match (&args.model, &args.model_file) {
        (Some(d), _) => d.clone(),
        (None, Some(p)) => read(p)?,
        (None, None) => return Ok(bundled_models()),
    };
    parse_model_description(&desc).map(|m| vec![m]).or_else(|e| usage(e))
}

fn load_lts(args: &LtsArgs) -> Result<Lts, Failure> {
    match &args.lts {
        Some(p) => parse_lts(&read(p)?).or_else(|e| usage(e)),
        None => Ok(running_example()),
    }
}

fn mode(args: &LtsArgs) -> Validity {
    if args.strict {
        Validity::Strict
    } else {
        Validity::Literal
    }
}

fn cmd_parse(text: &str, kind: Kind) -> Outcome {
    let shown = match kind {
        Kind::Formula => parse_formula(text).map(|f| format!("formula  {f}\ncp       {}", cp(&f))),
        Kind::Struct => parse_struct(text).map(|t| format!("struct   {t}\ncp_s     {}\nnatural  {}", cp_s(&t), natural(&t))),
        Kind::Sequent => parse_sequent(text).map(|s| format!("sequent  {s}\nsharp    {}", sharp(&s))),
        Kind::Identity => parse_identity(text).map(|i| {
            let flat: Vec<String> = flat(&i).iter().map(|s| s.to_string()).collect();
            let kind = if matches!(i, Identity::Eq(_)) { "equation" } else { "inequation" };
            format!("{kind}  {i}\nflat     {}", flat.join(" ; "))
        }),
        Kind::Auto => {
            let k = if text.contains("|-") {
                Kind::Sequent
            } else if text.contains("<=") || text.contains('=') {
                Kind::Identity
            } else if parse_formula(text).is_ok() {
                Kind::Formula
            } else {
                Kind::Struct
            };
            return cmd_parse(text, k);
        }
    };
    match shown {
        Ok(s) => {
            println!("{s}");
            Ok(true)
        }
        Err(e) => usage(format!("{text}: {e}")),
    }
}

fn cmd_check(file: &Path) -> Outcome {
    let d = match derivation_from_json(&read(file)?) {
        Ok(d) => d,
        Err(e) => {
            println!("invalid: {e}");
            return Ok(false);
        }
    };
    match check_derivation(&d) {
        Ok(()) => {
            println!(
                "valid: {}  (height {}, size {}, {})",
                d.conclusion,
                d.height(),
                d.size(),
                if d.is_cut_free() { "cut-free" } else { "with cut" }
            );
            Ok(true)
        }
        Err(e) => {
            println!("invalid at node {:?}: {}", e.path, e.conclusion);
            println!("  {}", e.reason);
            Ok(false)
        }
    }
}

fn cmd_prove(goal: &str, budget: SearchBudget, emit: Option<&Path>) -> Outcome {
    let seqs = goals(goal)?;
    if emit.is_some() && seqs.len() != 1 {
        return usage("--emit needs a single sequent or inequation");
    }
    let mut all = true;
    for s in &seqs {
        match prove(s, budget) {
            SearchResult::Found(d, st) => {
                println!("found: {s}  (height {}, {} nodes)", d.height(), st.nodes);
                print!("{}", d.pretty());
                if let Some(p) = emit {
                    write(p, &derivation_to_json(&d))?;
                }
            }
            SearchResult::Exhausted(st) => {
                all = false;
                let why = if st.node_limit_hit { "node budget" } else { "depth budget" };
                println!(
                    "not found: {s}  ({why} exhausted at depth {}, {} nodes)",
                    st.depth_reached, st.nodes
                );
            }
        }
    }
    Ok(all)
}

fn cmd_eliminate(file: &Path, trace: bool, no_check: bool, emit: Option<&Path>) -> Outcome {
    let d = derivation_from_json(&read(file)?).map_err(|e| Failure::Fail(anyhow!("{e}")))?;
    if let Err(e) = check_derivation(&d) {
        println!("input invalid at node {:?}: {}", e.path, e.reason);
        return Ok(false);
    }
    let opts = EliminationOptions {
        check_each_step: !no_check,
    };
    match eliminate_mix_with(&cut_as_mix(&d), opts) {
        Ok(el) => {
            if trace {
                for t in &el.trace {
                    println!("step {t}");
                }
            }
            let out = el.derivation;
            println!(
                "cut-free: {}  (height {} -> {}, size {} -> {}, {} steps)",
                out.conclusion,
                d.height(),
                out.height(),
                d.size(),
                out.size(),
                el.trace.len()
            );
            if let Some(p) = emit {
                write(p, &derivation_to_json(&out))?;
            }
            Ok(true)
        }
        Err(e) => {
            println!("elimination failed: {e}");
            Ok(false)
        }
    }
}

fn cmd_eval(goal: &str, margs: &ModelArgs, strategy: Strategy) -> Outcome {
    let ineqs = inequations(goal)?;
    let mut holds = true;
    for m in models(margs)? {
        for q in &ineqs {
            match check_inequation(&m, q, strategy) {
                Ok(None) => println!("{m}: {} <= {}  holds", q.lhs, q.rhs),
                Ok(Some(a)) => {
                    holds = false;
                    println!("{m}: {} <= {}  FAILS at {}", q.lhs, q.rhs, m.render_assignment(&a));
                }
                Err(e) => {
                    holds = false;
                    println!("{m}: {} <= {}  not checked: {e}", q.lhs, q.rhs);
                }
            }
        }
    }
    Ok(holds)
}

fn cmd_soundness(rules: &[String], inverted_k: bool, margs: &ModelArgs, strategy: Strategy) -> Outcome {
    let mut schemas: Vec<Schema> = if rules.is_empty() {
        RuleId::ALL
            .iter()
            .filter(|r| !matches!(r, RuleId::Cut | RuleId::Mix))
            .map(|r| Schema::Rule(*r))
            .collect()
    } else {
        let mut v = Vec::new();
        for r in rules {
            match RuleId::from_name(r) {
                Some(id) => v.push(Schema::Rule(id)),
                None => return usage(format!("unknown rule id '{r}'")),
            }
        }
        v
    };
    if inverted_k {
        schemas.push(Schema::InvertedK);
    }
    let mut ok = true;
    for m in models(margs)? {
        let report = verify_axioms(&m);
        if !report.all_pass() {
            ok = false;
            print!("{}", report.render(&m));
        }
        for s in &schemas {
            let r = check_rule_soundness(&m, *s, strategy)?;
            match &r.failure {
                None => println!("{m}: {s} sound  ({} contexts, {} assignments)", r.instances, r.assignments),
                Some(f) => {
                    ok = false;
                    let prem: Vec<String> = f.instance.premises.iter().map(|p| p.to_string()).collect();
                    println!("{m}: {s} UNSOUND  [{}] / {}", prem.join(" ; "), f.instance.conclusion);
                    println!("  at {}", m.render_assignment(&f.assignment));
                }
            }
        }
    }
    Ok(ok)
}

fn cmd_countermodel(goal: &str, monoid_size: usize, max_len: usize, budget: u64) -> Outcome {
    let mut refuted = false;
    for q in inequations(goal)? {
        let (found, stats) = countermodel_search(&q, monoid_size, max_len, budget);
        match found {
            Some(c) => {
                refuted = true;
                println!("countermodel for {} <= {}:", q.lhs, q.rhs);
                println!("{}", c.model.describe());
                println!("assignment: {}", c.model.render_assignment(&c.assignment));
            }
            None => println!(
                "no countermodel for {} <= {}  ({} models tried, {} skipped for budget)",
                q.lhs, q.rhs, stats.models_tried, stats.skipped_for_budget
            ),
        }
    }
    Ok(!refuted)
}

fn cmd_traces(cmd: &TracesCmd) -> Outcome {
    match cmd {
        TracesCmd::Enumerate { lts, len, rooted, count } => {
            let t = load_lts(lts)?;
            let v = valid_traces(&t, *len, *rooted, mode(lts))?;
            if *count {
                for (n, c) in lmc_core::traces::length_profile(&v) {
                    println!("length {n}: {c}");
                }
                println!("total: {}", v.len());
            } else {
                for w in &v.words {
                    println!("{}", render_trace(w));
                }
            }
            Ok(true)
        }
        TracesCmd::Classify { lts, property, len } => {
            let t = load_lts(lts)?;
            let p = parse_property(&read(property)?).or_else(|e| usage(e))?;
            let u = t.universe(*len);
            if let Some(w) = p.words.iter().find(|w| !u.contains(w)) {
                return usage(format!("trace {} lies outside the universe of length {len}", render_trace(w)));
            }
            let c = classify(&p, &u);
            println!("safety: {}", c.safety);
            println!("liveness (bounded to length {len}): {}", c.liveness_bounded);
            Ok(true)
        }
        TracesCmd::Policy {
            lts,
            len,
            rooted,
            property,
        } => {
            let t = load_lts(lts)?;
            let p = match property {
                Some(f) => parse_property(&read(f)?).or_else(|e| usage(e))?,
                None => valid_traces(&t, *len, *rooted, mode(lts))?,
            };
            let mut ok = true;
            for (name, pol) in [("P1", policy_p1 as fn(&[_]) -> bool), ("P2", policy_p2)] {
                let bad: Vec<_> = p.words.iter().filter(|w| !pol(w)).collect();
                println!("{name}: {}/{} traces satisfy", p.len() - bad.len(), p.len());
                for w in bad.iter().take(5) {
                    println!("  violated by {}", render_trace(w));
                }
                ok &= bad.is_empty();
            }
            Ok(ok)
        }
    }
}

fn cmd_algebra(cmd: &AlgebraCmd) -> Outcome {
    match cmd {
        AlgebraCmd::Rdp { u, v, w } => {
            let uv = format!("{u}{v}");
            if !uv.starts_with(w.as_str()) {
                println!("{w} is not a prefix of {uv}");
                return Ok(false);
            }
            let (a, b) = rdp_decompose(u, v, w).expect("prefixes of uv always decompose");
            let e = |s: &str| if s.is_empty() { "ε".to_string() } else { s.to_string() };
            println!(
                "{} = {}.{}  with {} a prefix of {} and {} a prefix of {}",
                e(w),
                e(&a),
                e(&b),
                e(&a),
                e(u),
                e(&b),
                e(v)
            );
            println!("all splits: {}", rdp_all_splits(u, v, w).len());
            Ok(true)
        }
        AlgebraCmd::RdpMonoids { max_size } => {
            if *max_size > 4 {
                return usage("--max-size above 4 is too slow to enumerate");
            }
            let mut ok = true;
            for n in 1..=*max_size {
                let ms = enumerate_monoids_up_to_iso(n);
                let mut failing = 0;
                for m in &ms {
                    for side in [Side::Left, Side::Right] {
                        if let Err(w) = check_rdp(m, &m.divisibility(side)) {
                            failing += 1;
                            ok = false;
                            println!(
                                "size {n}: {:?} divisibility fails at {} below {}*{} in table {:?}",
                                side, m.names[w.b], m.names[w.a1], m.names[w.a2], m.table
                            );
                        }
                    }
                }
                println!("size {n}: {} monoids, {failing} failing checks", ms.len());
            }
            Ok(ok)
        }
        AlgebraCmd::Monoid { file } => {
            let (m, rel) = parse_monoid_description(&read(file)?).or_else(|e| usage(e))?;
            monoid_report(&m, rel)
        }
        AlgebraCmd::Endz { lo, hi } => {
            if *lo > -1 || *hi < 2 {
                return usage("the interval must contain -1 and 2");
            }
            let r = endz_witness_check(*lo, *hi);
            println!("f.g = 1: {}", r.fg_constant_one);
            println!("k.k' = 1: {}", r.kk_constant_one);
            println!("image f: {:?}", r.image_f);
            println!("image k: {:?}", r.image_k);
            println!("k.k' = f.g: {}", r.k_divides_fg);
            println!("no h with k.h = f: {}", r.no_h_with_kh_eq_f);
            println!("no m with k = f.m: {}", r.no_m_with_k_eq_fm);
            Ok(r.all_pass())
        }
    }
}

fn monoid_report(m: &FiniteMonoid, rel: Option<Vec<Vec<bool>>>) -> Outcome {
    let (canc, conical) = cancellative_conical(m);
    println!("elements: {}", m.names.join(" "));
    println!("cancellative: {canc}  conical: {conical}");
    let mut ok = true;
    let mut report = |label: &str, r: &[Vec<bool>]| {
        if !is_preorder(r) {
            println!("{label}: not a preorder");
            ok = false;
            return;
        }
        match check_rdp(m, r) {
            Ok(()) => println!("{label}: decomposition holds"),
            Err(w) => {
                ok = false;
                println!("{label}: fails, {} below {}*{}", m.names[w.b], m.names[w.a1], m.names[w.a2]);
            }
        }
    };
    report("left divisibility", &m.divisibility(Side::Left));
    report("right divisibility", &m.divisibility(Side::Right));
    if let Some(r) = rel {
        report("given preorder", &r);
    }
    Ok(ok)
}

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return usage("--jobs must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.cmd {
        Cmd::Parse { text, kind } => cmd_parse(text, *kind),
        Cmd::Check { file } => cmd_check(file),
        Cmd::Prove { goal, budget, emit } => cmd_prove(goal, budget.budget(), emit.as_deref()),
        Cmd::Eliminate {
            file,
            trace,
            no_check,
            emit,
        } => cmd_eliminate(file, *trace, *no_check, emit.as_deref()),
        Cmd::Eval { goal, model, sampling } => cmd_eval(goal, model, sampling.strategy()),
        Cmd::Soundness {
            rules,
            inverted_k,
            model,
            sampling,
        } => cmd_soundness(rules, *inverted_k, model, sampling.strategy()),
        Cmd::Countermodel {
            goal,
            monoid_size,
            max_len,
            budget,
        } => cmd_countermodel(goal, *monoid_size, *max_len, *budget),
        Cmd::Traces { cmd } => cmd_traces(cmd),
        Cmd::Algebra { cmd } => cmd_algebra(cmd),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Fail(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("usage error: {e:#}");
            ExitCode::from(2)
        }
    }
}
