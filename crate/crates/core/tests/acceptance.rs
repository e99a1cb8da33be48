//! Acceptance criteria 1–9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eqclone::caps::DEFAULT_BUDGET;
use eqclone::classify::{
    classify_language, csp_verdict, rchain_profile, ClassifyConfig, CspVerdict, IntervalCase, RChainVerdict,
    TractableReason,
};
use eqclone::continuum::{c_relation, cross_check, hubie_operation, hubie_violation_check};
use eqclone::eqcore::{builtin_relation, contains, enumerate_partitions, OrbitRelation, Partition};
use eqclone::eqcsp::{brute_solve, solve, Constraint, Instance};
use eqclone::eqformula::{
    constructions, formula_to_relation, is_horn, is_negative, parse_formula, pp_evaluate, reduced_definition,
    RelationEnv,
};
use eqclone::patops::{builtin_operation, BuiltinOperation, PatternOperation};
use eqclone::preserve::{preserves_exact, preserves_exact_with, replay_witness, ExactConfig, PreservationVerdict};
use eqclone::unilattice::{
    capped_profiles, monoid_member, monoid_of_relation, seq_leq, Entry, KernelTuple, MonoidDescriptor,
    unary_preserves,
};

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(name: &str) -> OrbitRelation {
    builtin_relation(name).unwrap()
}

fn op(name: &str) -> PatternOperation {
    builtin_operation(name).unwrap()
}

fn pat(values: &[u64]) -> Partition {
    Partition::of_slice(values).unwrap()
}

fn all_subsets(arity: usize) -> Vec<OrbitRelation> {
    let parts = enumerate_partitions(arity).unwrap();
    (0u64..1 << parts.len())
        .map(|mask| {
            let chosen = parts.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| p.clone());
            OrbitRelation::new(arity, chosen).unwrap()
        })
        .collect()
}

fn random_relations(arity: usize, count: usize, seed: u64) -> Vec<OrbitRelation> {
    let parts = enumerate_partitions(arity).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let chosen: Vec<Partition> = parts.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
            OrbitRelation::new(arity, chosen).unwrap()
        })
        .collect()
}

/// All 32 arity-3 relations and 500 seeded random arity-4 relations.
fn equivalence_corpus() -> Vec<OrbitRelation> {
    let mut v = all_subsets(3);
    v.extend(random_relations(4, 500, 0x5eed));
    v
}

fn preserves(o: &PatternOperation, r: &OrbitRelation) -> bool {
    preserves_exact(o, r).unwrap().preserves()
}

fn criterion_1() -> Check {
    let inj = op("inj(2)");
    for r in equivalence_corpus() {
        let op_side = preserves(&inj, &r);
        let syn = is_horn(&reduced_definition(&r).unwrap());
        ensure(op_side == syn, || format!("{}: injection {op_side}, Horn {syn}", r.to_literal()))?;
    }
    Ok(())
}

fn criterion_2() -> Check {
    let (inj, richard) = (op("inj(2)"), op("richard"));
    for r in equivalence_corpus() {
        let op_side = preserves(&richard, &r) && preserves(&inj, &r);
        let syn = is_negative(&reduced_definition(&r).unwrap());
        ensure(op_side == syn, || format!("{}: richard+injection {op_side}, negative {syn}", r.to_literal()))?;
    }
    Ok(())
}

/// A violation whose output has the pattern of `target`, replayed concretely.
fn targeted_violation(o: &PatternOperation, r: &OrbitRelation, target: &[u64], budget: u64) -> Check {
    let cfg = ExactConfig { budget, targets: Some(vec![pat(target)]) };
    match preserves_exact_with(o, r, &cfg).map_err(|e| e.to_string())? {
        PreservationVerdict::Preserves => Err(format!("{} on {}: no violation reaching {target:?}", o.name, r.to_literal())),
        PreservationVerdict::Violates { witness } => {
            let replay = replay_witness(o, r, &witness.inputs).map_err(|e| e.to_string())?;
            ensure(replay.output_pattern == pat(target), || format!("{} replays to {:?}", o.name, replay.output))
        }
    }
}

fn criterion_3() -> Check {
    let big = 1_000_000_000;
    targeted_violation(&op("f3"), &rel("Rneq3"), &[0, 0, 2, 2, 3, 3], DEFAULT_BUDGET)?;
    for k in [3usize, 4] {
        let f = BuiltinOperation::F(k).build().unwrap();
        let target: Vec<u64> = (1..=k as u64).flat_map(|j| [j, j]).collect();
        targeted_violation(&f, &rel(&format!("Runder{k}")), &target, big)?;
        let v = preserves_exact_with(&f, &rel(&format!("Runder{}", k - 1)), &ExactConfig { budget: big, targets: None })
            .map_err(|e| e.to_string())?;
        ensure(v.preserves(), || format!("f{k} does not preserve Runder{}", k - 1))?;
    }
    Ok(())
}

fn criterion_4() -> Check {
    let env = RelationEnv::new();
    let eval = |f: &eqclone::eqformula::PpFormula| pp_evaluate(f, &env).map_err(|e| e.to_string());
    ensure(eval(&constructions::horn_clause_from_i(2))? == constructions::horn_clause_relation(2).unwrap(), || {
        "Horn clause from I, l = 2".into()
    })?;
    ensure(eval(&constructions::i_from_n())? == rel("I"), || "I from N".into())?;
    ensure(eval(&constructions::runder2_from_odd3())? == rel("Runder2"), || "Runder2 from odd3".into())?;
    ensure(eval(&constructions::r_from_r_next(2))? == rel("R2"), || "R2 from R3".into())?;
    Ok(())
}

fn criterion_5() -> Check {
    for n in [3usize, 4] {
        let h = hubie_operation(n).map_err(|e| e.to_string())?;
        let (check, _) = hubie_violation_check(&h).map_err(|e| e.to_string())?;
        let expected: Vec<u64> = (1..=n as u64).flat_map(|j| [j, j]).collect();
        ensure(check.ok && check.output == expected, || format!("H_{n} output {:?}", check.output))?;
        let c = c_relation(n).unwrap().relation;
        for row in &h.rows {
            ensure(contains(&c, row).unwrap(), || format!("H_{n} row {row:?} not in C_{n}"))?;
        }
        let k = if n == 3 { 4 } else { 3 };
        let cross = cross_check(&h, k, 10_000, 42).map_err(|e| e.to_string())?;
        ensure(!cross.verdict.is_violation(), || format!("H_{n} violates C_{k} in sampling"))?;
    }
    Ok(())
}

/// Brute-force `a ⊑ b`: try every map from b's positions onto a's.
fn leq_oracle(a: &[Entry], b: &[Entry]) -> bool {
    let (k, n) = (a.len(), b.len());
    if k > n {
        return false;
    }
    let mut assign = vec![0usize; n];
    loop {
        let mut sums = vec![Some(0u64); k];
        let mut used = vec![false; k];
        for (j, &c) in assign.iter().enumerate() {
            used[c] = true;
            sums[c] = match (sums[c], b[j]) {
                (Some(s), Entry::Fin(v)) => Some(s + v),
                _ => None,
            };
        }
        let fits = (0..k).all(|i| match (a[i], sums[i]) {
            (_, None) => true,
            (Entry::Omega, Some(_)) => false,
            (Entry::Fin(x), Some(s)) => x <= s,
        });
        if used.iter().all(|&u| u) && fits {
            return true;
        }
        let mut i = 0;
        loop {
            if i == n {
                return false;
            }
            assign[i] += 1;
            if assign[i] < k {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }
}

fn sequences(max_len: usize) -> Vec<Vec<Entry>> {
    let vals = [Entry::Fin(1), Entry::Fin(2), Entry::Fin(3), Entry::Fin(4), Entry::Omega];
    let mut out: Vec<Vec<Entry>> = vec![vec![]];
    let mut all = Vec::new();
    for _ in 0..max_len {
        out = out
            .iter()
            .flat_map(|s| {
                vals.iter().filter(move |v| s.last().map_or(true, |l| l <= *v)).map(move |v| {
                    let mut t = s.clone();
                    t.push(*v);
                    t
                })
            })
            .collect();
        all.extend(out.iter().cloned());
    }
    all
}

/// Unary preservation by exhaustively assigning the blocks of each orbit to kernel classes.
fn unary_oracle(kappa: &KernelTuple, r: &OrbitRelation) -> bool {
    let classes = kappa.entries();
    r.orbits().iter().all(|p| {
        let blocks = p.num_blocks();
        let mut assign = vec![0usize; blocks];
        loop {
            let fits = classes.iter().enumerate().all(|(c, e)| match e {
                Entry::Omega => true,
                Entry::Fin(s) => assign.iter().filter(|&&a| a == c).count() as u64 <= *s,
            });
            if fits {
                let image: Vec<u64> = p.labels().iter().map(|&l| assign[l as usize] as u64).collect();
                if !r.contains_pattern(&pat(&image)) {
                    return false;
                }
            }
            let mut i = 0;
            loop {
                if i == blocks {
                    return true;
                }
                assign[i] += 1;
                if assign[i] < classes.len() {
                    break;
                }
                assign[i] = 0;
                i += 1;
            }
        }
    })
}

fn criterion_6() -> Check {
    let seqs = sequences(4);
    for a in &seqs {
        for b in &seqs {
            let got = seq_leq(a, b);
            ensure(got == leq_oracle(a, b), || format!("{a:?} ⊑ {b:?}: got {got}"))?;
            if a.len() == b.len() {
                let comp = a.iter().zip(b).all(|(x, y)| x <= y);
                ensure(got == comp, || format!("{a:?} vs {b:?} componentwise"))?;
            }
        }
    }
    let two_equal = formula_to_relation(&parse_formula("x=y | y=z | x=z").unwrap(), 3).unwrap();
    let cases = [
        (rel("neq"), MonoidDescriptor::injections()),
        (rel("odd3"), MonoidDescriptor::injections_and_constants()),
        (two_equal, MonoidDescriptor::Top),
    ];
    for (r, expected) in cases {
        let m = monoid_of_relation(&r).map_err(|e| e.to_string())?;
        ensure(m == expected, || format!("{}: monoid {m}, expected {expected}", r.to_literal()))?;
        for kappa in capped_profiles(r.arity()) {
            let oracle = unary_oracle(&kappa, &r);
            let lib = unary_preserves(&kappa, &r).map_err(|e| e.to_string())?;
            ensure(oracle == lib && oracle == monoid_member(&kappa, &m), || {
                format!("{}: profile {kappa}: oracle {oracle}, preserves {lib}", r.to_literal())
            })?;
        }
    }
    Ok(())
}

fn flags_of(gamma: &[OrbitRelation]) -> Result<eqclone::classify::IIFlags, String> {
    match classify_language(gamma, &ClassifyConfig::default()).map_err(|e| e.to_string())?.interval {
        IntervalCase::Injective { flags } => Ok(flags),
        other => Err(format!("unexpected case {other:?}")),
    }
}

fn criterion_7() -> Check {
    let h = flags_of(&[rel("N"), rel("neq")])?;
    ensure(h.above_h && !h.above_b, || format!("{{N, neq}}: {h:?}"))?;
    let s = flags_of(&[rel("Runder2"), rel("neq")])?;
    ensure(s.above_h && s.above_b && s.contains_s && s.inside_s && !s.above_r, || format!("{{Runder2, neq}}: {s:?}"))?;
    let r = flags_of(&[rel("Rneq3")])?;
    ensure(r.above_r, || format!("{{Rneq3}}: {r:?}"))?;
    let p2 = rchain_profile(&[rel("Runder2"), rel("neq")], 3, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let p3 = rchain_profile(&[rel("Runder3"), rel("neq")], 3, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure(p2[0].verdict == RChainVerdict::Preserves && p3[0].verdict == RChainVerdict::Violates, || {
        format!("f_3 profiles {p2:?} / {p3:?}")
    })
}

fn random_instance(rng: &mut ChaCha8Rng, names: &[(&str, usize)]) -> Instance {
    let n = rng.gen_range(1..=8);
    let variables: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let constraints = (0..rng.gen_range(1..=7))
        .map(|_| {
            let (name, arity) = names[rng.gen_range(0..names.len())];
            Constraint { relation: name.to_string(), args: (0..arity).map(|_| rng.gen_range(0..n)).collect() }
        })
        .collect();
    Instance::new(variables, constraints).unwrap()
}

fn criterion_8() -> Check {
    let env = RelationEnv::new();
    ensure(
        csp_verdict(&[rel("odd3")], DEFAULT_BUDGET).unwrap()
            == CspVerdict::PolynomialTime { reason: TractableReason::BinaryInjection },
        || "odd3 verdict".into(),
    )?;
    let disj = formula_to_relation(&parse_formula("x=y | y=z").unwrap(), 3).unwrap();
    ensure(csp_verdict(&[disj, rel("neq")], DEFAULT_BUDGET).unwrap() == CspVerdict::NpComplete, || {
        "x=y | y=z with neq".into()
    })?;
    let mut env3 = env.clone();
    env3.insert("T".into(), formula_to_relation(&parse_formula("x=y | y=z | x=z").unwrap(), 3).unwrap());
    env3.insert("D".into(), formula_to_relation(&parse_formula("x=y | y=z").unwrap(), 3).unwrap());
    let languages: [(&RelationEnv, Vec<(&str, usize)>); 3] = [
        (&env, vec![("odd3", 3), ("neq", 2)]),
        (&env, vec![("I", 4), ("neq", 2), ("N", 4)]),
        (&env3, vec![("T", 3), ("D", 3)]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (e, names) in &languages {
        let gamma: Vec<OrbitRelation> = names.iter().map(|(n, _)| eqclone::eqformula::resolve(e, n).unwrap()).collect();
        let verdict = csp_verdict(&gamma, DEFAULT_BUDGET).unwrap();
        ensure(verdict != CspVerdict::NpComplete, || format!("{names:?} is not tractable"))?;
        for _ in 0..1000 {
            let inst = random_instance(&mut rng, names);
            let fast = solve(&inst, e, verdict).map_err(|err| err.to_string())?;
            let slow = brute_solve(&inst, e).map_err(|err| err.to_string())?;
            ensure(fast.is_sat() == slow.is_sat(), || format!("{inst:?}: solve {fast:?}, brute {slow:?}"))?;
            ensure(inst.verify(e, &fast).unwrap(), || format!("{inst:?}: unverified {fast:?}"))?;
        }
    }
    Ok(())
}

/// Every relation of arity ≤ 3 alone and with `neq`, the landmark languages,
/// and 100 random arity-4 relations alone and with `neq`.
fn language_corpus() -> Vec<Vec<OrbitRelation>> {
    let mut rels: Vec<OrbitRelation> = (1..=3).flat_map(all_subsets).collect();
    rels.extend(random_relations(4, 100, 9));
    let mut out: Vec<Vec<OrbitRelation>> = Vec::new();
    for r in rels {
        out.push(vec![r.clone(), rel("neq")]);
        out.push(vec![r]);
    }
    for names in [vec!["N", "neq"], vec!["Runder2", "neq"], vec!["Runder3", "neq"], vec!["Rneq3"], vec!["odd3"], vec!["I", "neq"]] {
        out.push(names.into_iter().map(rel).collect());
    }
    out
}

fn criterion_9() -> Check {
    let mut injective = 0;
    for gamma in language_corpus() {
        let pos = classify_language(&gamma, &ClassifyConfig::default()).map_err(|e| e.to_string())?;
        if let IntervalCase::Injective { flags } = pos.interval {
            injective += 1;
            ensure(!flags.above_b || flags.above_h, || format!("{gamma:?}: B without H"))?;
            ensure(flags.inside_s != flags.above_r, || format!("{gamma:?}: S/R dichotomy"))?;
            ensure(!flags.contains_s || flags.above_b, || format!("{gamma:?}: S without B"))?;
            ensure(!flags.above_r || flags.above_b, || format!("{gamma:?}: R without B"))?;
        }
    }
    ensure(injective > 0, || "no language in the injective case".into())
}

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 9] = [
        ("binary injection ⇔ Horn", criterion_1, Duration::from_secs(300)),
        ("richard and injection ⇔ negative", criterion_2, Duration::from_secs(300)),
        ("tuple witnesses for f_k", criterion_3, Duration::from_secs(900)),
        ("pp definitions", criterion_4, Duration::from_secs(60)),
        ("Hubie-violators", criterion_5, Duration::from_secs(600)),
        ("kernel tuple order and monoids", criterion_6, Duration::from_secs(120)),
        ("classifier landmarks", criterion_7, Duration::from_secs(1200)),
        ("CSP verdicts and solver", criterion_8, Duration::from_secs(600)),
        ("flag implications", criterion_9, Duration::from_secs(600)),
    ];
    let only: BTreeSet<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let result = result.and_then(|()| {
            ensure(took <= *limit, || format!("took {took:.1?}, limit {limit:?}"))
        });
        match result {
            Ok(()) => println!("criterion {n} ({name}): PASS in {took:.1?}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL in {took:.1?}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
