use std::fmt;

use serde::Serialize;

use super::bits::Bits;
use super::cnf::{Atom, Clause, CnfFormula, Literal, Table};
use crate::eqcore::{OrbitRelation, Partition};
use crate::error::{Error, Result};

/// Syntactic class flags of a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct FormulaClassFlags {
    pub horn: bool,
    pub negative: bool,
    pub extended_horn: bool,
    pub connected_horn: bool,
    pub connected_extended_horn: bool,
}

/// Number of connected components of the graph on the variables of `atoms`.
fn components<'a>(atoms: impl Iterator<Item = &'a Atom>, n: usize) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    let mut present = vec![false; n];
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for a in atoms {
        if let Some((i, j)) = a.vars() {
            present[i] = true;
            present[j] = true;
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            parent[ri] = rj;
        }
    }
    (0..n).filter(|&i| present[i] && find(&mut parent, i) == i).count()
}

pub(crate) fn clause_components(c: &Clause, n: usize) -> usize {
    components(c.literals.iter().map(|l| &l.atom), n)
}

pub fn is_horn(f: &CnfFormula) -> bool {
    f.clauses.iter().all(|c| c.positive_count() <= 1)
}

pub fn is_negative(f: &CnfFormula) -> bool {
    f.clauses.iter().all(|c| {
        c.positive_count() == 0 || (c.literals.len() == 1 && c.literals[0].is_positive_eq())
    })
}

pub fn is_connected_horn(f: &CnfFormula) -> bool {
    is_horn(f)
        && f.clauses.iter().all(|c| {
            let k = clause_components(c, f.num_vars());
            if c.positive_count() == 1 { k <= 1 } else { k <= 2 }
        })
}

/// Flags of a CNF formula; the extended flags refer to its extended Horn rewriting when Horn.
pub fn classify_cnf(f: &CnfFormula) -> FormulaClassFlags {
    let horn = is_horn(f);
    let ext = ExtendedHornFormula::from_horn(f).ok();
    FormulaClassFlags {
        horn,
        negative: is_negative(f),
        extended_horn: ext.is_some(),
        connected_horn: is_connected_horn(f),
        connected_extended_horn: ext.as_ref().is_some_and(is_connected_extended_horn),
    }
}

/// Flags of an extended Horn formula; the CNF flags refer to its Horn clause expansion.
pub fn classify_extended(f: &ExtendedHornFormula) -> FormulaClassFlags {
    let cnf = f.to_cnf();
    FormulaClassFlags {
        horn: is_horn(&cnf),
        negative: is_negative(&cnf),
        extended_horn: true,
        connected_horn: is_connected_horn(&cnf),
        connected_extended_horn: is_connected_extended_horn(f),
    }
}

/// `(premise) → (conclusion)` with both sides nonempty conjunctions of atoms.
/// A conclusion containing `false` is exactly `[false]`. The atom `x=x` is
/// allowed and stands for a premise that always holds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ExtClause {
    pub premise: Vec<Atom>,
    pub conclusion: Vec<Atom>,
}

impl ExtClause {
    pub fn new(premise: Vec<Atom>, conclusion: Vec<Atom>) -> Result<Self> {
        if premise.is_empty() || conclusion.is_empty() {
            return Err(Error::invalid("extended Horn clauses need a nonempty premise and conclusion"));
        }
        let conclusion = if conclusion.contains(&Atom::False) { vec![Atom::False] } else { conclusion };
        Ok(ExtClause { premise, conclusion })
    }

    pub fn eval(&self, p: &Partition) -> bool {
        !self.premise.iter().all(|a| a.eval(p)) || self.conclusion.iter().all(|a| a.eval(p))
    }

    pub fn concludes_false(&self) -> bool {
        self.conclusion == [Atom::False]
    }

    pub fn is_connected(&self, n: usize) -> bool {
        components(self.premise.iter().chain(&self.conclusion), n) <= 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ExtendedHornFormula {
    pub variables: Vec<String>,
    pub conjuncts: Vec<ExtClause>,
}

impl ExtendedHornFormula {
    pub fn eval(&self, p: &Partition) -> bool {
        self.conjuncts.iter().all(|c| c.eval(p))
    }

    /// Rewrites a Horn CNF: `¬a1 ∨ … ∨ ¬al ∨ b` becomes `a1 ∧ … ∧ al → b`.
    /// A clause without negative literals gets the premise `x=x`.
    pub fn from_horn(f: &CnfFormula) -> Result<Self> {
        if !is_horn(f) {
            return Err(Error::invalid("formula is not Horn"));
        }
        let mut conjuncts = Vec::new();
        for c in &f.clauses {
            let premise: Vec<Atom> = c.literals.iter().filter(|l| !l.positive).map(|l| l.atom).collect();
            let conclusion: Vec<Atom> = c
                .literals
                .iter()
                .find(|l| l.is_positive_eq())
                .map_or(vec![Atom::False], |l| vec![l.atom]);
            let premise = if premise.is_empty() {
                let anchor = conclusion[0].vars().map_or(0, |(i, _)| i);
                vec![Atom::Eq(anchor, anchor)]
            } else {
                premise
            };
            conjuncts.push(ExtClause::new(premise, conclusion)?);
        }
        Ok(ExtendedHornFormula { variables: f.variables.clone(), conjuncts })
    }

    /// Horn clause expansion, one clause per conclusion atom.
    pub fn to_cnf(&self) -> CnfFormula {
        let mut clauses = Vec::new();
        for c in &self.conjuncts {
            let negs: Vec<Literal> = c
                .premise
                .iter()
                .filter(|a| !matches!(a, Atom::Eq(i, j) if i == j))
                .map(|a| Literal { positive: false, atom: *a })
                .collect();
            for b in &c.conclusion {
                if matches!(b, Atom::Eq(i, j) if i == j) {
                    continue;
                }
                let mut lits = negs.clone();
                lits.push(Literal { positive: true, atom: *b });
                clauses.push(Clause::new(lits));
            }
        }
        CnfFormula { variables: self.variables.clone(), clauses }
    }
}

impl fmt::Display for ExtendedHornFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.conjuncts.is_empty() {
            return f.write_str("true");
        }
        let v = &self.variables;
        let side = |atoms: &[Atom]| -> String {
            atoms
                .iter()
                .map(|a| match a {
                    Atom::Eq(i, j) => format!("{}={}", v[*i], v[*j]),
                    Atom::False => "false".to_string(),
                })
                .collect::<Vec<_>>()
                .join(" & ")
        };
        let parts: Vec<String> = self
            .conjuncts
            .iter()
            .map(|c| format!("({} -> {})", side(&c.premise), side(&c.conclusion)))
            .collect();
        f.write_str(&parts.join(" & "))
    }
}

/// Connected whenever the conclusion has an equality and no `false`.
pub fn is_connected_extended_horn(f: &ExtendedHornFormula) -> bool {
    let n = f.variables.len();
    f.conjuncts.iter().all(|c| {
        let has_eq = c.conclusion.iter().any(|a| matches!(a, Atom::Eq(..)));
        !has_eq || c.concludes_false() || c.is_connected(n)
    })
}

/// Spanning atoms `b0=b1, b0=b2, …` of a block.
fn span(block: &[usize]) -> Vec<Atom> {
    block[1..].iter().map(|&x| Atom::eq(block[0], x)).collect()
}

/// Blocks of size at least two.
fn nontrivial_blocks(p: &Partition) -> Vec<Vec<usize>> {
    p.blocks().into_iter().filter(|b| b.len() >= 2).collect()
}

/// `q` identifies every pair that `p` identifies.
fn coarser(q: &Partition, p: &Partition) -> bool {
    let l = p.labels();
    (0..l.len()).all(|i| (0..i).all(|j| l[i] != l[j] || q.same(i, j)))
}

/// Common refinement of the models: `i ~ j` iff equal in every model.
fn implied(models: &[&Partition], n: usize) -> Partition {
    let mut ids: Vec<Vec<u8>> = vec![Vec::with_capacity(models.len()); n];
    for m in models {
        for (i, id) in ids.iter_mut().enumerate() {
            id.push(m.labels()[i]);
        }
    }
    Partition::of_slice(&ids).expect("n ≥ 1")
}

struct Semantics {
    table: Table,
    models: Vec<usize>,
}

impl Semantics {
    fn new(n: usize, truth: &dyn Fn(&Partition) -> bool) -> Result<Self> {
        let table = Table::new(n)?;
        let models = (0..table.len()).filter(|&i| truth(&table.parts[i])).collect();
        Ok(Semantics { table, models })
    }

    /// Models in which every pair identified by `premise` is equal.
    fn models_under(&self, premise: &Partition) -> Vec<&Partition> {
        self.models
            .iter()
            .map(|&i| &self.table.parts[i])
            .filter(|m| coarser(m, premise))
            .collect()
    }

    fn clause_bits(&self, c: &ExtClause) -> Bits {
        Bits::from_fn(self.table.len(), |i| c.eval(&self.table.parts[i]))
    }
}

/// The strongest connected extended Horn clauses implied by `truth`, one per premise:
/// `premise → false` when the premise is unsatisfiable (minimal premises only),
/// and `premise → block` when all premise variables fall into one implied block.
fn canonical_connected_clauses(sem: &Semantics, n: usize) -> Vec<ExtClause> {
    let mut out = Vec::new();
    let mut unsat: Vec<&Partition> = Vec::new();
    let mut order: Vec<&Partition> = sem.table.parts.iter().collect();
    order.sort_by_key(|p| (n - p.num_blocks(), (*p).clone()));
    for pi in order {
        let blocks = nontrivial_blocks(pi);
        let under = sem.models_under(pi);
        if under.is_empty() {
            if unsat.iter().any(|u| coarser(pi, u)) {
                continue;
            }
            unsat.push(pi);
            let premise: Vec<Atom> = blocks.iter().flat_map(|b| span(b)).collect();
            if premise.is_empty() {
                out.push(ExtClause { premise: vec![Atom::Eq(0, 0)], conclusion: vec![Atom::False] });
            } else {
                out.push(ExtClause { premise, conclusion: vec![Atom::False] });
            }
            continue;
        }
        let imp = implied(&under, n);
        if blocks.is_empty() {
            for b in nontrivial_blocks(&imp) {
                out.push(ExtClause { premise: vec![Atom::Eq(b[0], b[0])], conclusion: span(&b) });
            }
            continue;
        }
        let label = imp.labels()[blocks[0][0]];
        if blocks.iter().flatten().all(|&x| imp.labels()[x] == label) {
            let block: Vec<usize> = (0..n).filter(|&x| imp.labels()[x] == label).collect();
            let grows = block.len() > blocks[0].len() || blocks.len() > 1;
            if grows {
                let premise = blocks.iter().flat_map(|b| span(b)).collect();
                out.push(ExtClause { premise, conclusion: span(&block) });
            }
        }
    }
    out
}

/// An equivalent expanded Horn formula: the input's conjuncts plus every
/// strongest implied connected clause not already implied by a connected
/// conjunct, after which each disconnected conjunct is strengthened (add
/// `x=y` to the premise, add `x=y` to the conclusion, or conclude `false`)
/// for as long as equivalence is preserved.
pub fn expand_horn(f: &ExtendedHornFormula) -> Result<ExtendedHornFormula> {
    let n = f.variables.len();
    let sem = Semantics::new(n, &|p| f.eval(p))?;
    let truth = Bits::from_fn(sem.table.len(), |i| f.eval(&sem.table.parts[i]));
    let mut conjuncts = f.conjuncts.clone();
    let connected_bits: Vec<Bits> = conjuncts
        .iter()
        .filter(|c| c.concludes_false() || c.is_connected(n))
        .map(|c| sem.clause_bits(c))
        .collect();
    for c in canonical_connected_clauses(&sem, n) {
        let b = sem.clause_bits(&c);
        if !connected_bits.iter().any(|cb| cb.is_subset(&b)) && !conjuncts.contains(&c) {
            conjuncts.push(c);
        }
    }
    let equivalent = |cs: &[ExtClause]| -> bool {
        let mut acc = Bits::ones(sem.table.len());
        for c in cs {
            acc.and_assign(&sem.clause_bits(c));
        }
        acc == truth
    };
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    loop {
        let mut changed = false;
        for idx in 0..conjuncts.len() {
            let c = &conjuncts[idx];
            if c.concludes_false() || c.is_connected(n) {
                continue;
            }
            let mut candidates: Vec<ExtClause> = Vec::new();
            for &(x, y) in &pairs {
                if !c.premise.contains(&Atom::Eq(x, y)) {
                    let mut s = c.clone();
                    s.premise.push(Atom::Eq(x, y));
                    candidates.push(s);
                }
            }
            for &(x, y) in &pairs {
                if !c.conclusion.contains(&Atom::Eq(x, y)) {
                    let mut s = c.clone();
                    s.conclusion.push(Atom::Eq(x, y));
                    candidates.push(s);
                }
            }
            candidates.push(ExtClause { premise: c.premise.clone(), conclusion: vec![Atom::False] });
            for cand in candidates {
                let mut trial = conjuncts.clone();
                trial[idx] = cand;
                if equivalent(&trial) {
                    conjuncts = trial;
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(ExtendedHornFormula { variables: f.variables.clone(), conjuncts })
}

/// The conjunction of all strongest connected Horn clauses implied by `rel`:
/// negative clauses whose premise graph has at most two components, and
/// clauses `premise → u=v` whose graph is connected.
pub fn connected_horn_closure(rel: &OrbitRelation) -> Result<CnfFormula> {
    let n = rel.arity();
    let sem = Semantics::new(n, &|p| rel.contains_pattern(p))?;
    let mut clauses = Vec::new();
    for pi in sem.table.parts.iter() {
        let blocks = nontrivial_blocks(pi);
        if blocks.len() > 2 {
            continue;
        }
        let negs: Vec<Literal> = blocks
            .iter()
            .flat_map(|b| span(b))
            .map(|a| Literal { positive: false, atom: a })
            .collect();
        let under = sem.models_under(pi);
        if under.is_empty() {
            clauses.push(Clause::new(negs));
            continue;
        }
        let imp = implied(&under, n);
        let mut push = |u: usize, v: usize| {
            if !pi.same(u, v) && imp.same(u, v) {
                let mut lits = negs.clone();
                lits.push(Literal::pos(u, v));
                clauses.push(Clause::new(lits));
            }
        };
        match blocks.len() {
            0 => {
                for u in 0..n {
                    for v in u + 1..n {
                        push(u, v);
                    }
                }
            }
            1 => {
                for &u in &blocks[0] {
                    for v in 0..n {
                        push(u, v);
                    }
                }
            }
            _ => {
                for &u in &blocks[0] {
                    for &v in &blocks[1] {
                        push(u, v);
                    }
                }
            }
        }
    }
    Ok(CnfFormula { variables: crate::eqformula::EqFormula::default_names(n), clauses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqcore::builtin_relation;
    use crate::eqformula::{cnf_to_relation, parse_formula, reduce, relation_to_cnf, to_cnf};

    fn ext_relation(f: &ExtendedHornFormula) -> OrbitRelation {
        OrbitRelation::from_predicate(f.variables.len(), |p| f.eval(p)).unwrap()
    }

    fn runder_ext(n: usize) -> ExtendedHornFormula {
        let premise = (0..n).map(|i| Atom::eq(2 * i, 2 * i + 1)).collect();
        let conclusion = (1..2 * n).map(|j| Atom::eq(0, j)).collect();
        ExtendedHornFormula {
            variables: crate::eqformula::EqFormula::default_names(2 * n),
            conjuncts: vec![ExtClause::new(premise, conclusion).unwrap()],
        }
    }

    #[test]
    fn delta3_is_horn_and_negative() {
        let d = to_cnf(&parse_formula("x1!=y1 | x2!=y2 | x3!=y3").unwrap());
        let fl = classify_cnf(&d);
        assert!(fl.horn && fl.negative);
        let two = to_cnf(&parse_formula("x1=x2 | x3=x4").unwrap());
        assert!(!classify_cnf(&two).horn);
    }

    #[test]
    fn runder_definition_is_connected_extended_horn() {
        for n in 2..=4 {
            let f = runder_ext(n);
            assert!(classify_extended(&f).connected_extended_horn);
            assert_eq!(ext_relation(&f), builtin_relation(&format!("Runder({n})")).unwrap());
        }
    }

    #[test]
    fn expand_runder2_stays_connected() {
        let f = runder_ext(2);
        let e = expand_horn(&f).unwrap();
        assert_eq!(ext_relation(&e), ext_relation(&f));
        assert!(is_connected_extended_horn(&e));
    }

    #[test]
    fn expand_exposes_forced_equalities() {
        let cnf = to_cnf(&parse_formula("vars x,y,z: x=y & (x!=z | y=z)").unwrap());
        let f = ExtendedHornFormula::from_horn(&cnf).unwrap();
        let e = expand_horn(&f).unwrap();
        assert!(e.conjuncts.iter().any(|c| c.conclusion.contains(&Atom::Eq(0, 1))));
        assert_eq!(ext_relation(&e), ext_relation(&f));
    }

    #[test]
    fn expand_is_fixpoint_on_expanded_input() {
        let f = runder_ext(2);
        let e = expand_horn(&f).unwrap();
        let again = expand_horn(&e).unwrap();
        let mut a = e.conjuncts.clone();
        let mut b = again.conjuncts.clone();
        a.sort_by(|x, y| format!("{x:?}").cmp(&format!("{y:?}")));
        b.sort_by(|x, y| format!("{x:?}").cmp(&format!("{y:?}")));
        assert_eq!(a, b);
    }

    #[test]
    fn closure_defines_connected_horn_relations() {
        for name in ["neq", "odd3", "Runder(2)", "I"] {
            let rel = builtin_relation(name).unwrap();
            let psi = connected_horn_closure(&rel).unwrap();
            assert!(is_connected_horn(&psi));
            let defines = cnf_to_relation(&psi).unwrap() == rel;
            let expect = name != "I";
            assert_eq!(defines, expect, "{name}");
        }
    }

    #[test]
    fn reduced_definitions() {
        let red = reduce(&relation_to_cnf(&builtin_relation("N").unwrap()).unwrap()).unwrap();
        assert!(is_horn(&red) && !is_negative(&red));
        let red = reduce(&relation_to_cnf(&builtin_relation("Rneq(3)").unwrap()).unwrap()).unwrap();
        assert!(is_negative(&red));
    }
}
