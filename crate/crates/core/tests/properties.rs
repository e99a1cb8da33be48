use proptest::prelude::*;

use eqclone::classify::{classify_language, csp_verdict, ClassifyConfig};
use eqclone::eqcsp::solve;
use eqclone::eqcore::{builtin_relation, contains, enumerate_partitions, pattern_of, OrbitRelation, Partition};
use eqclone::eqcsp::{brute_solve, Constraint, Instance};
use eqclone::eqformula::{
    classify_cnf, cnf_to_relation, constructions::connected_horn_clause_pp, equivalent, formula_to_relation,
    pp_evaluate, reduce, relation_to_cnf, relation_to_formula, to_cnf, Clause, CnfFormula, EqFormula, Expr, Literal,
    PpAtom, PpFormula, RelationEnv,
};
use eqclone::patops::{
    apply_symbolic, builtin_operation, dependency_profile, directional_injectivity, is_quasilinear, ArgPattern,
    BuiltinOperation, ConcreteEvaluator, OutputSpec, PatternOperation, Rule, SymbolicValue,
};
use eqclone::preserve::{preserves_exact, preserves_sampled, replay_witness, SampleConfig};
use eqclone::unilattice::{
    capped_profiles, monoid_join, monoid_leq, monoid_meet, monoid_member, monoid_of_relation, seq_leq, unary_preserves,
    Entry, KernelTuple, MonoidDescriptor,
};

fn relation(arity: usize, mask: u64) -> OrbitRelation {
    let parts = enumerate_partitions(arity).unwrap();
    OrbitRelation::new(arity, parts.into_iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| p))
        .unwrap()
}

fn arb_relation(arity: usize) -> impl Strategy<Value = OrbitRelation> {
    let n = enumerate_partitions(arity).unwrap().len();
    (0u64..1 << n).prop_map(move |m| relation(arity, m))
}

fn arb_entry(max: u64) -> impl Strategy<Value = Entry> {
    prop_oneof![(1..=max).prop_map(Entry::Fin), Just(Entry::Omega)]
}

fn arb_seq(len: usize, max: u64) -> impl Strategy<Value = Vec<Entry>> {
    prop::collection::vec(arb_entry(max), 1..=len).prop_map(|mut v| {
        v.sort();
        v
    })
}

fn arb_expr(vars: usize) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..vars, 0..vars).prop_map(|(i, j)| Expr::Eq(i, j)),
        (0..vars, 0..vars).prop_map(|(i, j)| Expr::neq(i, j)),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(Expr::And),
            prop::collection::vec(inner.clone(), 1..3).prop_map(Expr::Or),
            inner.clone().prop_map(|e| Expr::Not(Box::new(e))),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::Implies(Box::new(a), Box::new(b))),
        ]
    })
}

fn formula(vars: usize, body: Expr) -> EqFormula {
    EqFormula::new(EqFormula::default_names(vars), body).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pattern_invariant_under_renaming(t in prop::collection::vec(0u64..6, 1..8), shift in 1u64..1000, mult in 1u64..7) {
        let renamed: Vec<u64> = t.iter().map(|v| v * (2 * mult + 1) + shift).collect();
        prop_assert_eq!(pattern_of(&t).unwrap(), pattern_of(&renamed).unwrap());
        let r = relation(t.len().min(4), 0b1011_0110_1101_0011);
        let head = &t[..r.arity().min(t.len())];
        if head.len() == r.arity() {
            prop_assert_eq!(contains(&r, head).unwrap(), contains(&r, &renamed[..r.arity()]).unwrap());
        }
    }

    #[test]
    fn relation_formula_round_trip(r in arb_relation(3)) {
        prop_assert_eq!(formula_to_relation(&relation_to_formula(&r), 3).unwrap(), r);
    }

    #[test]
    fn relation_formula_round_trip_arity4(r in arb_relation(4)) {
        prop_assert_eq!(formula_to_relation(&relation_to_formula(&r), 4).unwrap(), r);
    }

    #[test]
    fn reduce_idempotent_and_equivalent(e in arb_expr(5)) {
        let cnf = to_cnf(&formula(5, e));
        let once = reduce(&cnf).unwrap();
        prop_assert!(equivalent(&cnf, &once).unwrap());
        prop_assert_eq!(reduce(&once).unwrap(), once);
    }

    #[test]
    fn class_flags_are_monotone(r in arb_relation(4)) {
        let c = classify_cnf(&reduce(&relation_to_cnf(&r).unwrap()).unwrap());
        prop_assert!(!c.negative || c.horn);
        prop_assert!(!c.connected_horn || c.horn);
        prop_assert!(!c.connected_horn || c.connected_extended_horn);
    }

    #[test]
    fn pp_evaluate_monotone_in_env(small in 0u64..1 << 5, extra in 0u64..1 << 5, args in prop::collection::vec(0usize..4, 9)) {
        let base = relation(3, small);
        let bigger = relation(3, small | extra);
        let pp = PpFormula {
            free: vec!["a".into(), "b".into()],
            bound: vec!["u".into(), "v".into()],
            conjuncts: args.chunks(3).map(|c| PpAtom::Rel { name: "B".into(), args: c.to_vec() }).collect(),
        };
        let eval = |r: &OrbitRelation| {
            let mut env = RelationEnv::new();
            env.insert("B".into(), r.clone());
            pp_evaluate(&pp, &env).unwrap()
        };
        prop_assert!(eval(&base).is_subset(&eval(&bigger)));
    }

    #[test]
    fn connected_horn_clauses_are_pp_definable(heads in prop::collection::vec((0usize..4, 0usize..4), 1..4), positive in any::<bool>()) {
        let mut lits: Vec<Literal> = heads.iter().filter(|(i, j)| i != j).map(|&(i, j)| Literal::neg(i, j)).collect();
        if positive {
            lits.push(Literal::pos(0, 3));
        }
        prop_assume!(!lits.is_empty());
        let clause = Clause::new(lits);
        let vars = EqFormula::default_names(4);
        let cnf = CnfFormula::new(vars.clone(), vec![clause.clone()]).unwrap();
        if let Ok(Some(pp)) = connected_horn_clause_pp(&clause, &vars) {
            prop_assert_eq!(pp_evaluate(&pp, &RelationEnv::new()).unwrap(), cnf_to_relation(&cnf).unwrap());
        }
    }

    #[test]
    fn seq_leq_order_laws(a in arb_seq(6, 6), b in arb_seq(6, 6), c in arb_seq(6, 6)) {
        prop_assert!(seq_leq(&a, &a));
        if seq_leq(&a, &b) && seq_leq(&b, &c) {
            prop_assert!(seq_leq(&a, &c));
        }
        if seq_leq(&a, &b) && seq_leq(&b, &a) {
            prop_assert_eq!(&a, &b);
        }
        if a.len() == b.len() {
            prop_assert_eq!(seq_leq(&a, &b), a.iter().zip(&b).all(|(x, y)| x <= y));
        }
    }

    #[test]
    fn unary_preservation_is_antitone(r in arb_relation(3)) {
        let profiles = capped_profiles(3);
        for k in &profiles {
            for k2 in &profiles {
                if seq_leq(k.entries(), k2.entries()) && unary_preserves(k2, &r).unwrap() {
                    prop_assert!(unary_preserves(k, &r).unwrap());
                }
            }
        }
    }

    #[test]
    fn monoid_matches_unary_preservation(r in arb_relation(3)) {
        let m = monoid_of_relation(&r).unwrap();
        if let Some(g) = m.generators() {
            for a in g {
                for b in g {
                    prop_assert!(a == b || !seq_leq(a.entries(), b.entries()));
                }
            }
        }
        for k in capped_profiles(3) {
            prop_assert_eq!(monoid_member(&k, &m), unary_preserves(&k, &r).unwrap());
        }
    }

    #[test]
    fn monoid_lattice_laws(r in arb_relation(3), s in arb_relation(3)) {
        let a = monoid_of_relation(&r).unwrap();
        let b = monoid_of_relation(&s).unwrap();
        let meet = monoid_meet(&a, &b).unwrap();
        let join = monoid_join(&a, &b);
        prop_assert!(monoid_leq(&meet, &a) && monoid_leq(&meet, &b));
        prop_assert!(monoid_leq(&a, &join) && monoid_leq(&b, &join));
        prop_assert_eq!(monoid_meet(&a, &a).unwrap(), a.clone());
        prop_assert_eq!(monoid_join(&a, &a), a.clone());
        prop_assert_eq!(monoid_meet(&a, &monoid_join(&a, &b)).unwrap(), a.clone());
        prop_assert_eq!(monoid_join(&a, &meet), a);
    }

    #[test]
    fn exact_witnesses_replay(r in arb_relation(3), name in prop::sample::select(vec!["f3", "richard", "inj(2)", "bar(1)", "qxor", "ess(2)", "g3"])) {
        let op = builtin_operation(name).unwrap();
        let v = preserves_exact(&op, &r).unwrap();
        if let Some(w) = v.witness() {
            let replay = replay_witness(&op, &r, &w.inputs).unwrap();
            prop_assert_eq!(&replay.output_pattern, &w.output_pattern);
            prop_assert!(!r.contains_pattern(&w.output_pattern));
        } else {
            let s = preserves_sampled(&op, &r, &SampleConfig::new(1000, 3)).unwrap();
            prop_assert!(!s.is_violation());
        }
    }

    #[test]
    fn unary_ops_agree_with_kernel_check(seq in arb_seq(3, 3), name in prop::sample::select(vec!["neq", "odd3", "I", "N"])) {
        let mut entries = seq;
        if entries.last() != Some(&Entry::Omega) {
            entries.push(Entry::Omega);
        }
        let kappa = KernelTuple::new(entries.clone()).unwrap();
        let r = builtin_relation(name).unwrap();
        let capped = kappa.capped(r.arity());
        let u = BuiltinOperation::UnaryFromKernel(entries).build().unwrap();
        prop_assert_eq!(preserves_exact(&u, &r).unwrap().preserves(), unary_preserves(&capped, &r).unwrap());
    }

    #[test]
    fn symbolic_and_concrete_evaluation_agree(cols in prop::collection::vec(prop::collection::vec(0u64..5, 4), 4)) {
        for name in ["f3", "g(3)", "qxor", "ess(3)"] {
            let op = builtin_operation(name).unwrap();
            let cols = &cols[..op.arity()];
            let support = op.pattern_support();
            let sym: Vec<Vec<SymbolicValue>> = cols
                .iter()
                .map(|c| c.iter().map(|&v| if support.contains(&v) { SymbolicValue::Named(v) } else { SymbolicValue::Fresh(v as u32) }).collect())
                .collect();
            let (_, pattern) = apply_symbolic(&op, &sym).unwrap();
            let concrete = ConcreteEvaluator::new(&op).apply(cols);
            prop_assert_eq!(pattern, Partition::of_slice(&concrete).unwrap());
        }
    }

    #[test]
    fn quasilinearity_invariant_under_symmetries(table in prop::collection::vec(0u64..2, 9), swap in any::<bool>(), rename in prop::sample::select(vec![[0u64, 1, 2], [1, 2, 0], [2, 0, 1], [1, 0, 2]])) {
        // A binary operation given by its table on {0,1,2}², constant 0 elsewhere.
        let build = |table: &[u64], swap: bool, rename: [u64; 3]| {
            let mut rules = Vec::new();
            for x in 0..3u64 {
                for y in 0..3u64 {
                    let (a, b) = if swap { (y, x) } else { (x, y) };
                    rules.push(Rule {
                        patterns: vec![ArgPattern::in_set([rename[a as usize]]), ArgPattern::in_set([rename[b as usize]])],
                        output: OutputSpec::Const(table[(3 * x + y) as usize]),
                    });
                }
            }
            rules.push(Rule { patterns: vec![ArgPattern::Any; 2], output: OutputSpec::Const(0) });
            PatternOperation::build("t", 2, rules).unwrap()
        };
        let base = is_quasilinear(&build(&table, false, [0, 1, 2])).unwrap();
        prop_assert_eq!(is_quasilinear(&build(&table, swap, rename)).unwrap(), base);
    }

    #[test]
    fn brute_solver_is_monotone(seed_cons in prop::collection::vec((0usize..3, prop::collection::vec(0usize..5, 4)), 1..6)) {
        let names = [("neq", 2usize), ("odd3", 3), ("I", 4)];
        let env = RelationEnv::new();
        let vars: Vec<String> = (0..5).map(|i| format!("v{i}")).collect();
        let mut cons = Vec::new();
        let mut was_unsat = false;
        for (r, args) in seed_cons {
            let (name, arity) = names[r];
            cons.push(Constraint { relation: name.into(), args: args[..arity].to_vec() });
            let inst = Instance::new(vars.clone(), cons.clone()).unwrap();
            let sat = brute_solve(&inst, &env).unwrap().is_sat();
            prop_assert!(!(was_unsat && sat));
            was_unsat = !sat;
        }
    }

    #[test]
    fn polynomial_solver_agrees_with_brute_force(cons in prop::collection::vec((any::<bool>(), prop::collection::vec(0usize..6, 3)), 1..8)) {
        let env = RelationEnv::new();
        let gamma = vec![builtin_relation("odd3").unwrap(), builtin_relation("neq").unwrap()];
        let verdict = csp_verdict(&gamma, eqclone::caps::DEFAULT_BUDGET).unwrap();
        let vars: Vec<String> = (0..6).map(|i| format!("x{i}")).collect();
        let cons = cons
            .into_iter()
            .map(|(odd, a)| if odd {
                Constraint { relation: "odd3".into(), args: a }
            } else {
                Constraint { relation: "neq".into(), args: a[..2].to_vec() }
            })
            .collect();
        let inst = Instance::new(vars, cons).unwrap();
        let fast = solve(&inst, &env, verdict).unwrap();
        let slow = brute_solve(&inst, &env).unwrap();
        prop_assert_eq!(fast.is_sat(), slow.is_sat());
        prop_assert!(inst.verify(&env, &fast).unwrap());
    }

    #[test]
    fn classification_invariant_under_equivalent_formulas(r in arb_relation(3)) {
        let copy = formula_to_relation(&relation_to_formula(&r), 3).unwrap();
        let neq = builtin_relation("neq").unwrap();
        let a = classify_language(&[r, neq.clone()], &ClassifyConfig::default()).unwrap();
        let b = classify_language(&[copy, neq], &ClassifyConfig::default()).unwrap();
        prop_assert_eq!(a.position, b.position);
        prop_assert_eq!(a.interval, b.interval);
    }
}

#[test]
fn hubie_rows_lie_in_c() {
    let h = eqclone::continuum::hubie_operation(3).unwrap();
    let c = eqclone::continuum::c_relation(3).unwrap().relation;
    assert!(h.rows.iter().all(|r| contains(&c, r).unwrap()));
}

#[test]
fn builtin_relation_inclusions() {
    for n in 2..=5 {
        let r = builtin_relation(&format!("R{n}")).unwrap();
        let under = builtin_relation(&format!("Runder{n}")).unwrap();
        let rneq = builtin_relation(&format!("Rneq{n}")).unwrap();
        assert!(r.is_subset(&under) && rneq.is_subset(&r));
    }
}

#[test]
fn operation_analysis_facts() {
    for k in 1..=4u64 {
        let bar = BuiltinOperation::Bar(k).build().unwrap();
        assert_eq!(directional_injectivity(&bar).unwrap().into_iter().collect::<Vec<_>>(), vec![1]);
    }
    for k in 3..=5 {
        let f = BuiltinOperation::F(k).build().unwrap();
        assert!(dependency_profile(&f).unwrap().depends.iter().all(|&d| d));
    }
}

#[test]
fn full_relations_are_always_preserved() {
    for name in ["f3", "g3", "richard", "bar(2)", "qxor", "ess(3)", "inj(3)", "kernel(1,2,w)"] {
        let op = builtin_operation(name).unwrap();
        for k in 1..=4 {
            assert!(preserves_exact(&op, &OrbitRelation::full(k).unwrap()).unwrap().preserves(), "{name} on arity {k}");
        }
    }
}

#[test]
fn monoid_descriptors_for_landmarks() {
    assert!(monoid_of_relation(&builtin_relation("neq").unwrap()).unwrap().is_injections());
    assert_eq!(monoid_of_relation(&OrbitRelation::full(2).unwrap()).unwrap(), MonoidDescriptor::Top);
}
