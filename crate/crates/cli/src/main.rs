use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use eqclone::caps::{partition_cap, DEFAULT_BUDGET};
use eqclone::classify::{classify_language, csp_verdict, ClassifyConfig, IntervalCase};
use eqclone::continuum::{antichain_demo, continuum_report, DEFAULT_SAMPLES, DEFAULT_SEED};
use eqclone::eqcore::{builtin_relation, OrbitRelation};
use eqclone::eqcsp::{brute_solve, parse_instance, solve, Solution, BRUTE_MAX_VARS};
use eqclone::eqformula::{
    classify_cnf, expand_horn, parse_formula, parse_pp, pp_evaluate, pp_search_bounded, reduce, to_cnf,
    ExtendedHornFormula, PpSearchLimits,
};
use eqclone::lang::{parse_language, LanguageFile};
use eqclone::patops::{builtin_operation, parse_operation_literal, PatternOperation};
use eqclone::preserve::{preserves_exact_with, preserves_sampled, ExactConfig, SampleConfig, SampledVerdict, Witness};
use eqclone::unilattice::{monoid_meet, monoid_of_relation, seq_leq, KernelTuple, MonoidDescriptor};
use eqclone::{Caps, Error, VERSION};

#[derive(Parser)]
#[command(name = "eq", version, about = "Polymorphisms, clones and CSPs of equality languages")]
struct Cli {
    /// Emit a JSON report with sorted keys.
    #[arg(long, global = true)]
    json: bool,
    /// Node budget of the exact preservation search.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Exit with status 1 on a negative verdict.
    #[arg(long, global = true)]
    fail_on_violates: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate a language file in the lattice of clones.
    Classify {
        file: PathBuf,
        /// Largest k tried for f_k below the bar clone.
        #[arg(long, default_value_t = 3)]
        rchain_max_k: usize,
    },
    /// Decide whether an operation preserves a relation.
    Preserve {
        /// Builtin name, name from --lang, or an `op …` literal.
        #[arg(long)]
        op: String,
        /// Builtin name, name from --lang, or an `orbits {…}` literal.
        #[arg(long)]
        rel: String,
        /// Language file providing named relations and operations.
        #[arg(long)]
        lang: Option<PathBuf>,
        /// Exhaustive search (the default).
        #[arg(long, conflicts_with = "samples")]
        exact: bool,
        /// Random search with this many samples instead.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Values drawn from 0..pool when sampling.
        #[arg(long)]
        pool: Option<usize>,
    },
    /// Evaluate a pp formula to its orbit set.
    Ppeval {
        formula: String,
        #[arg(long)]
        lang: Option<PathBuf>,
    },
    /// Search for a pp definition of a relation from others.
    Ppsearch {
        /// Relation to define.
        #[arg(long)]
        target: String,
        /// Comma-separated relation names usable in the definition.
        #[arg(long, value_delimiter = ',')]
        from: Vec<String>,
        #[arg(long)]
        lang: Option<PathBuf>,
        /// Most existentially quantified variables tried.
        #[arg(long, default_value_t = 2)]
        max_bound: usize,
        /// Most atoms tried.
        #[arg(long, default_value_t = 3)]
        max_atoms: usize,
    },
    /// Kernel tuple order.
    Order {
        #[command(subcommand)]
        cmd: OrderCmd,
    },
    /// Unary polymorphism monoids.
    Monoid {
        #[command(subcommand)]
        cmd: MonoidCmd,
    },
    /// Hubie-violator separation evidence for the relations C_n.
    Continuum {
        /// Index of the Hubie-violator, 3 or 4.
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Relations C_k to sample against; repeatable.
        #[arg(long)]
        k: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Compare the index sets A and B instead, e.g. `--antichain 3 4,3`.
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        antichain: Option<Vec<String>>,
    },
    /// Constraint satisfaction.
    Csp {
        #[command(subcommand)]
        cmd: CspCmd,
    },
    /// Quantifier-free formulas.
    Formula {
        #[command(subcommand)]
        cmd: FormulaCmd,
    },
}

#[derive(Subcommand)]
enum OrderCmd {
    /// Print whether A ⊑ B.
    Cmp { a: String, b: String },
}

#[derive(Subcommand)]
enum MonoidCmd {
    /// Unary part of the polymorphism clone of the given relations.
    Of {
        relations: Vec<String>,
        #[arg(long)]
        lang: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CspCmd {
    /// Solve an instance file.
    Solve {
        file: PathBuf,
        /// Use partition enumeration instead of the polynomial algorithm.
        #[arg(long)]
        brute: bool,
        /// Language file; defaults to the instance's `over` path.
        #[arg(long)]
        lang: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum FormulaCmd {
    /// Reduced CNF of a formula.
    Reduce { formula: String },
    /// Syntactic classes of the reduced CNF.
    Classify { formula: String },
    /// Expanded extended-Horn form of a Horn formula.
    Expand { formula: String },
}

/// Text and JSON renderings of a command result, and whether it is negative.
struct Outcome {
    text: String,
    json: Value,
    negative: bool,
    seed: Option<u64>,
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_lang(path: Option<&Path>) -> anyhow::Result<LanguageFile> {
    match path {
        None => Ok(LanguageFile::default()),
        Some(p) => Ok(parse_language(&read(p)?).with_context(|| format!("in {}", p.display()))?),
    }
}

fn relation_arg(arg: &str, lang: &LanguageFile) -> anyhow::Result<OrbitRelation> {
    if arg.trim_start().starts_with("orbits") {
        return Ok(OrbitRelation::parse_literal(arg)?);
    }
    if lang.relations.iter().any(|(n, _)| n == arg) {
        return Ok(lang.relation(arg)?);
    }
    Ok(builtin_relation(arg)?)
}

fn operation_arg(arg: &str, lang: &LanguageFile) -> anyhow::Result<PatternOperation> {
    if arg.trim_start().starts_with("op ") {
        return Ok(parse_operation_literal(arg)?);
    }
    if lang.operations.iter().any(|(n, _)| n == arg) {
        return Ok(lang.operation(arg)?);
    }
    Ok(builtin_operation(arg)?)
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn witness_text(w: &Witness) -> String {
    let mut s = String::new();
    for (i, t) in w.inputs.iter().enumerate() {
        s.push_str(&format!("  input {}: {:?}\n", i + 1, t));
    }
    s.push_str(&format!("  output: {:?} (pattern {})", w.output, w.output_pattern.to_literal()));
    s
}

fn flag(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let budget = cli.budget;
    let outcome = match &cli.command {
        Command::Classify { file, rchain_max_k } => {
            let lang = load_lang(Some(file))?;
            let gamma = lang.gamma()?;
            let rels: Vec<OrbitRelation> = gamma.iter().map(|(_, r)| r.clone()).collect();
            let cfg = ClassifyConfig { budget, rchain_max_k: *rchain_max_k };
            let pos = classify_language(&rels, &cfg)?;
            let csp = csp_verdict(&rels, budget)?;
            let names: Vec<&str> = gamma.iter().map(|(n, _)| n.as_str()).collect();
            let mut text = format!("language: {}\nposition: {}\nmonoid: {}\n", names.join(", "), pos.position, pos.monoid);
            match &pos.interval {
                IntervalCase::Injective { flags } => {
                    text.push_str(&format!(
                        "flags: above_H={} above_B={} contains_S={} inside_S={} above_R={} rchain_level={}\n",
                        flag(flags.above_h),
                        flag(flags.above_b),
                        flag(flags.contains_s),
                        flag(flags.inside_s),
                        flag(flags.above_r),
                        flags.rchain_level.map_or("none".to_string(), |k| k.to_string())
                    ));
                }
                IntervalCase::Chain { k, level } => {
                    let k = k.map_or("unbounded".to_string(), |k| k.to_string());
                    text.push_str(&format!("chain: k={k} level={level}\n"));
                }
                IntervalCase::Singleton => {}
            }
            text.push_str(&format!("csp: {}\nevidence:\n", csp_text(&csp)));
            for e in &pos.evidence {
                let who = e.relation.map_or("language".to_string(), |i| names[i].to_string());
                let cert = e.certificate.map_or(String::new(), |c| format!(", normal form {}", flag(c)));
                text.push_str(&format!(
                    "  {who}: {} [{}]: {}{cert}\n",
                    e.claim,
                    e.operation.as_deref().unwrap_or("-"),
                    flag(e.holds)
                ));
            }
            let mut j = to_json(&pos);
            j["language"] = json!(names);
            j["csp"] = to_json(&csp);
            Outcome { text: text.trim_end().to_string(), json: j, negative: false, seed: None }
        }
        Command::Preserve { op, rel, lang, exact: _, samples, seed, pool } => {
            let lang = load_lang(lang.as_deref())?;
            let o = operation_arg(op, &lang)?;
            let r = relation_arg(rel, &lang)?;
            match samples {
                None => {
                    let v = preserves_exact_with(&o, &r, &ExactConfig { budget, targets: None })?;
                    let text = match v.witness() {
                        None => "Preserves".to_string(),
                        Some(w) => format!("Violates\n{}", witness_text(w)),
                    };
                    Outcome { text, negative: !v.preserves(), json: to_json(&v), seed: None }
                }
                Some(n) => {
                    let v = preserves_sampled(&o, &r, &SampleConfig { samples: *n, seed: *seed, pool: *pool })?;
                    let text = match &v {
                        SampledVerdict::NoCounterexampleFound { samples, seed } => {
                            format!("NoCounterexampleFound ({samples} samples, seed {seed})")
                        }
                        SampledVerdict::Violates { witness, sample, .. } => {
                            format!("Violates (sample {sample})\n{}", witness_text(witness))
                        }
                    };
                    Outcome { text, negative: v.is_violation(), json: to_json(&v), seed: Some(*seed) }
                }
            }
        }
        Command::Ppeval { formula, lang } => {
            let lang = load_lang(lang.as_deref())?;
            let pp = parse_pp(formula)?;
            let r = pp_evaluate(&pp, &lang.env())?;
            Outcome {
                text: r.to_literal(),
                json: json!({ "formula": pp.to_string(), "arity": r.arity(), "relation": r.to_literal() }),
                negative: false,
                seed: None,
            }
        }
        Command::Ppsearch { target, from, lang, max_bound, max_atoms } => {
            let lang = load_lang(lang.as_deref())?;
            let t = relation_arg(target, &lang)?;
            let mut env = eqclone::eqformula::RelationEnv::new();
            for name in from {
                env.insert(name.clone(), relation_arg(name, &lang)?);
            }
            let limits = PpSearchLimits { max_bound_vars: *max_bound, max_atoms: *max_atoms, ..Default::default() };
            let found = pp_search_bounded(&t, &env, limits)?;
            let text = found.as_ref().map_or("no definition within the limits".to_string(), |f| f.to_string());
            Outcome {
                text,
                negative: found.is_none(),
                json: json!({ "found": found.is_some(), "formula": found.map(|f| f.to_string()) }),
                seed: None,
            }
        }
        Command::Order { cmd: OrderCmd::Cmp { a, b } } => {
            let (ka, kb) = (KernelTuple::parse(a)?, KernelTuple::parse(b)?);
            let leq = seq_leq(ka.entries(), kb.entries());
            Outcome {
                text: flag(leq).to_string(),
                json: json!({ "a": ka.to_string(), "b": kb.to_string(), "leq": leq }),
                negative: false,
                seed: None,
            }
        }
        Command::Monoid { cmd: MonoidCmd::Of { relations, lang } } => {
            let lang_file = load_lang(lang.as_deref())?;
            let rels: Vec<OrbitRelation> = if relations.is_empty() {
                if lang.is_none() {
                    bail!(usage("give relations or --lang"));
                }
                lang_file.gamma()?.into_iter().map(|(_, r)| r).collect()
            } else {
                relations.iter().map(|r| relation_arg(r, &lang_file)).collect::<anyhow::Result<_>>()?
            };
            let mut m = MonoidDescriptor::Top;
            for r in &rels {
                m = monoid_meet(&m, &monoid_of_relation(r)?)?;
            }
            Outcome { text: m.to_string(), json: json!({ "monoid": m.to_string() }), negative: false, seed: None }
        }
        Command::Continuum { n, k, samples, seed, antichain } => match antichain {
            Some(sets) => {
                let a = index_set(&sets[0])?;
                let b = index_set(&sets[1])?;
                let rep = antichain_demo(&a, &b, *samples, *seed)?;
                let mut text = String::new();
                for s in &rep.separations {
                    text.push_str(&format!(
                        "H_{} violates C_{}: {}; in the clone of side {}\n",
                        s.n,
                        s.n,
                        flag(s.violation.ok),
                        s.member_of
                    ));
                    for c in &s.cross {
                        text.push_str(&format!("  H_{} on C_{}: {}\n", s.n, c.k, sampled_text(&c.verdict)));
                    }
                }
                text.push_str(&format!("note: {}", rep.note));
                let negative = rep.separations.iter().any(|s| !s.violation.ok || s.cross.iter().any(|c| c.verdict.is_violation()));
                Outcome { text, negative, json: to_json(&rep), seed: Some(*seed) }
            }
            None => {
                let rep = continuum_report(*n, k, *samples, *seed)?;
                let mut text = format!(
                    "n={} m={}\nH_{n} violates C_{n}: {} (output {:?})\n",
                    rep.n,
                    rep.m,
                    flag(rep.violation.ok),
                    rep.violation.output
                );
                for c in &rep.cross {
                    text.push_str(&format!("H_{n} on C_{}: {}\n", c.k, sampled_text(&c.verdict)));
                }
                let negative = !rep.violation.ok || rep.cross.iter().any(|c| c.verdict.is_violation());
                Outcome { text: text.trim_end().to_string(), negative, json: to_json(&rep), seed: Some(*seed) }
            }
        },
        Command::Csp { cmd: CspCmd::Solve { file, brute, lang } } => {
            let inst = parse_instance(&read(file)?).with_context(|| format!("in {}", file.display()))?;
            let lang_path = match (lang, &inst.over) {
                (Some(p), _) => Some(p.clone()),
                (None, Some(o)) => Some(file.parent().unwrap_or(Path::new(".")).join(o)),
                (None, None) => None,
            };
            let lang = load_lang(lang_path.as_deref())?;
            let env = lang.env();
            let gamma = inst.language(&env)?;
            let verdict = csp_verdict(&gamma, budget)?;
            let use_brute = *brute || matches!(verdict, eqclone::classify::CspVerdict::NpComplete);
            if use_brute && inst.variables.len() > BRUTE_MAX_VARS {
                return Err(Error::Resource {
                    what: "variables for brute-force solving of an NP-complete language".into(),
                    cap: BRUTE_MAX_VARS as u64,
                }
                .into());
            }
            let sol = if use_brute { brute_solve(&inst, &env)? } else { solve(&inst, &env, verdict)? };
            let text = match &sol {
                Solution::Unsat => "Unsat".to_string(),
                Solution::Sat { assignment } => {
                    let parts: Vec<String> = inst.variables.iter().map(|v| format!("{v}={}", assignment[v])).collect();
                    format!("Sat: {}", parts.join(" "))
                }
            };
            let j = json!({
                "solution": to_json(&sol),
                "verdict": to_json(&verdict),
                "method": if use_brute { "brute" } else { "polynomial" },
            });
            Outcome { text: format!("{text}\ncsp: {}", csp_text(&verdict)), negative: !sol.is_sat(), json: j, seed: None }
        }
        Command::Formula { cmd } => {
            let (FormulaCmd::Reduce { formula } | FormulaCmd::Classify { formula } | FormulaCmd::Expand { formula }) = cmd;
            let f = parse_formula(formula)?;
            let reduced = reduce(&to_cnf(&f))?;
            match cmd {
                FormulaCmd::Reduce { .. } => Outcome {
                    text: reduced.to_string(),
                    json: json!({ "reduced": reduced.to_string() }),
                    negative: false,
                    seed: None,
                },
                FormulaCmd::Classify { .. } => {
                    let c = classify_cnf(&reduced);
                    let text = format!(
                        "reduced: {reduced}\nhorn={} negative={} extended_horn={} connected_horn={} connected_extended_horn={}",
                        flag(c.horn),
                        flag(c.negative),
                        flag(c.extended_horn),
                        flag(c.connected_horn),
                        flag(c.connected_extended_horn)
                    );
                    let mut j = to_json(&c);
                    j["reduced"] = json!(reduced.to_string());
                    Outcome { text, json: j, negative: false, seed: None }
                }
                FormulaCmd::Expand { .. } => {
                    let e = expand_horn(&ExtendedHornFormula::from_horn(&reduced)?)?;
                    Outcome { text: e.to_string(), json: json!({ "expanded": e.to_string() }), negative: false, seed: None }
                }
            }
        }
    };
    Ok(outcome)
}

fn index_set(s: &str) -> anyhow::Result<BTreeSet<usize>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<usize>().map_err(|_| usage(&format!("bad index '{p}'"))))
        .collect()
}

fn sampled_text(v: &SampledVerdict) -> String {
    match v {
        SampledVerdict::NoCounterexampleFound { samples, seed } => {
            format!("NoCounterexampleFound ({samples} samples, seed {seed})")
        }
        SampledVerdict::Violates { sample, .. } => format!("Violates (sample {sample})"),
    }
}

fn csp_text(v: &eqclone::classify::CspVerdict) -> String {
    use eqclone::classify::{CspVerdict, TractableReason};
    match v {
        CspVerdict::PolynomialTime { reason: TractableReason::Constant } => "PolynomialTime(constant)".into(),
        CspVerdict::PolynomialTime { reason: TractableReason::BinaryInjection } => {
            "PolynomialTime(binary_injection)".into()
        }
        CspVerdict::NpComplete => "NPComplete".into(),
    }
}

fn usage(msg: &str) -> anyhow::Error {
    anyhow::Error::new(Error::Invalid(msg.to_string()))
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::Resource { .. }) => 3,
        Some(Error::Internal(_)) => 4,
        _ => 2,
    }
}

/// Writes to stdout, tolerating a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if cli.json {
                let caps = Caps { partition_cap: partition_cap(), budget: cli.budget };
                let report = json!({
                    "version": VERSION,
                    "caps": to_json(&caps),
                    "seed": out.seed,
                    "result": out.json,
                });
                emit(&serde_json::to_string_pretty(&report).expect("json"));
            } else {
                emit(&out.text);
            }
            if cli.fail_on_violates && out.negative {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
