use std::fmt;

use serde::Serialize;

use super::bits::Bits;
use super::expr::{EqFormula, Expr};
use crate::caps::partition_cap;
use crate::eqcore::{partitions, OrbitRelation, Partition};
use crate::error::{Error, Result};

/// Atomic formula: `x = y` (stored with `x ≤ y`) or `false`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Atom {
    Eq(usize, usize),
    False,
}

impl Atom {
    pub fn eq(i: usize, j: usize) -> Atom {
        Atom::Eq(i.min(j), i.max(j))
    }

    pub fn eval(&self, p: &Partition) -> bool {
        match *self {
            Atom::Eq(i, j) => p.same(i, j),
            Atom::False => false,
        }
    }

    pub(crate) fn vars(&self) -> Option<(usize, usize)> {
        match *self {
            Atom::Eq(i, j) => Some((i, j)),
            Atom::False => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

impl Literal {
    pub fn pos(i: usize, j: usize) -> Literal {
        Literal { positive: true, atom: Atom::eq(i, j) }
    }

    pub fn neg(i: usize, j: usize) -> Literal {
        Literal { positive: false, atom: Atom::eq(i, j) }
    }

    pub fn falsum() -> Literal {
        Literal { positive: true, atom: Atom::False }
    }

    pub fn eval(&self, p: &Partition) -> bool {
        self.atom.eval(p) == self.positive
    }

    /// A positive equality literal (not `false`).
    pub fn is_positive_eq(&self) -> bool {
        self.positive && matches!(self.atom, Atom::Eq(..))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Clause {
    pub literals: Vec<Literal>,
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Clause {
        if literals.is_empty() {
            Clause { literals: vec![Literal::falsum()] }
        } else {
            Clause { literals }
        }
    }

    pub fn eval(&self, p: &Partition) -> bool {
        self.literals.iter().any(|l| l.eval(p))
    }

    pub fn positive_count(&self) -> usize {
        self.literals.iter().filter(|l| l.is_positive_eq()).count()
    }
}

/// A formula in conjunctive normal form. An empty clause list is `true`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CnfFormula {
    pub variables: Vec<String>,
    pub clauses: Vec<Clause>,
}

impl CnfFormula {
    pub fn new(variables: Vec<String>, clauses: Vec<Clause>) -> Result<Self> {
        let n = variables.len();
        for c in &clauses {
            for l in &c.literals {
                if let Some((i, j)) = l.atom.vars() {
                    if i >= n || j >= n {
                        return Err(Error::invalid(format!("literal refers to undeclared variable {}", i.max(j))));
                    }
                }
            }
        }
        Ok(CnfFormula { variables, clauses: clauses.into_iter().map(|c| Clause::new(c.literals)).collect() })
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn eval(&self, p: &Partition) -> bool {
        self.clauses.iter().all(|c| c.eval(p))
    }

    pub fn to_expr(&self) -> Expr {
        Expr::And(
            self.clauses
                .iter()
                .map(|c| {
                    Expr::Or(
                        c.literals
                            .iter()
                            .map(|l| {
                                let a = match l.atom {
                                    Atom::Eq(i, j) => Expr::Eq(i, j),
                                    Atom::False => Expr::False,
                                };
                                if l.positive { a } else { Expr::Not(Box::new(a)) }
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    pub fn to_formula(&self) -> EqFormula {
        EqFormula { variables: self.variables.clone(), body: self.to_expr() }
    }
}

impl fmt::Display for CnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return f.write_str("true");
        }
        let v = &self.variables;
        for (k, c) in self.clauses.iter().enumerate() {
            if k > 0 {
                f.write_str(" & ")?;
            }
            if self.clauses.len() > 1 && c.literals.len() > 1 {
                f.write_str("(")?;
            }
            for (m, l) in c.literals.iter().enumerate() {
                if m > 0 {
                    f.write_str(" | ")?;
                }
                match (l.positive, l.atom) {
                    (true, Atom::False) => f.write_str("false")?,
                    (false, Atom::False) => f.write_str("!false")?,
                    (true, Atom::Eq(i, j)) => write!(f, "{}={}", v[i], v[j])?,
                    (false, Atom::Eq(i, j)) => write!(f, "{}!={}", v[i], v[j])?,
                }
            }
            if self.clauses.len() > 1 && c.literals.len() > 1 {
                f.write_str(")")?;
            }
        }
        Ok(())
    }
}

/// Negation normal form leaves: `Some(literal)` or a constant.
enum Nnf {
    Const(bool),
    Lit(Literal),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
}

fn nnf(e: &Expr, positive: bool) -> Nnf {
    match e {
        Expr::True => Nnf::Const(positive),
        Expr::False => Nnf::Const(!positive),
        Expr::Eq(i, j) => Nnf::Lit(Literal { positive, atom: Atom::eq(*i, *j) }),
        Expr::Not(x) => nnf(x, !positive),
        Expr::And(xs) => {
            let ys = xs.iter().map(|x| nnf(x, positive)).collect();
            if positive { Nnf::And(ys) } else { Nnf::Or(ys) }
        }
        Expr::Or(xs) => {
            let ys = xs.iter().map(|x| nnf(x, positive)).collect();
            if positive { Nnf::Or(ys) } else { Nnf::And(ys) }
        }
        Expr::Implies(a, b) => {
            let ys = vec![nnf(a, !positive), nnf(b, positive)];
            if positive { Nnf::Or(ys) } else { Nnf::And(ys) }
        }
    }
}

/// Clause as raw literal list; `None` marks a tautology.
type RawClause = Vec<Literal>;

const DISTRIBUTION_LIMIT: usize = 1 << 14;

/// Returns `None` when distribution would exceed the size limit.
fn cnf_of(n: &Nnf) -> Option<Vec<RawClause>> {
    match n {
        Nnf::Const(true) => Some(vec![]),
        Nnf::Const(false) => Some(vec![vec![]]),
        Nnf::Lit(l) => Some(vec![vec![*l]]),
        Nnf::And(xs) => {
            let mut out = Vec::new();
            for x in xs {
                out.extend(cnf_of(x)?);
                if out.len() > DISTRIBUTION_LIMIT {
                    return None;
                }
            }
            Some(out)
        }
        Nnf::Or(xs) => {
            let mut acc: Vec<RawClause> = vec![vec![]];
            for x in xs {
                let cs = cnf_of(x)?;
                if acc.len().saturating_mul(cs.len()) > DISTRIBUTION_LIMIT {
                    return None;
                }
                let mut next = Vec::with_capacity(acc.len() * cs.len());
                for a in &acc {
                    for c in &cs {
                        let mut m = a.clone();
                        m.extend_from_slice(c);
                        next.push(m);
                    }
                }
                acc = next;
            }
            Some(acc)
        }
    }
}

/// Drops always-false literals; `None` if the clause is a tautology.
fn simplify_clause(raw: RawClause) -> Option<Clause> {
    let mut lits = Vec::with_capacity(raw.len());
    for l in raw {
        match (l.positive, l.atom) {
            (true, Atom::Eq(i, j)) if i == j => return None,
            (false, Atom::False) => return None,
            (false, Atom::Eq(i, j)) if i == j => {}
            (true, Atom::False) => {}
            _ => {
                if lits.contains(&Literal { positive: !l.positive, atom: l.atom }) {
                    return None;
                }
                lits.push(l);
            }
        }
    }
    Some(Clause::new(lits))
}

/// Equivalent CNF; tautological clauses are dropped.
pub fn to_cnf(f: &EqFormula) -> CnfFormula {
    let n = f.variables.len();
    let raw = cnf_of(&nnf(&f.body, true));
    let clauses = match raw {
        Some(raw) => raw.into_iter().filter_map(simplify_clause).collect(),
        None if n >= 1 && n <= partition_cap() => {
            let rel = OrbitRelation::from_predicate(n, |p| f.eval(p)).expect("arity within cap");
            return relation_to_cnf_named(&rel, f.variables.clone());
        }
        None => {
            // Beyond the cap only distribution is available.
            let mut acc = Vec::new();
            distribute_unbounded(&nnf(&f.body, true), &mut acc);
            acc.into_iter().filter_map(simplify_clause).collect()
        }
    };
    CnfFormula { variables: f.variables.clone(), clauses }
}

fn distribute_unbounded(n: &Nnf, out: &mut Vec<RawClause>) {
    match n {
        Nnf::Const(true) => {}
        Nnf::Const(false) => out.push(vec![]),
        Nnf::Lit(l) => out.push(vec![*l]),
        Nnf::And(xs) => xs.iter().for_each(|x| distribute_unbounded(x, out)),
        Nnf::Or(xs) => {
            let mut acc: Vec<RawClause> = vec![vec![]];
            for x in xs {
                let mut cs = Vec::new();
                distribute_unbounded(x, &mut cs);
                acc = acc
                    .iter()
                    .flat_map(|a| cs.iter().map(move |c| a.iter().chain(c).copied().collect()))
                    .collect();
            }
            out.extend(acc);
        }
    }
}

fn check_cap(n: usize) -> Result<()> {
    let cap = partition_cap();
    if n == 0 {
        return Ok(());
    }
    if n > cap {
        return Err(Error::resource(format!("formula over {n} variables"), cap as u64));
    }
    Ok(())
}

/// Orbit relation of a formula over exactly `arity` variables.
pub fn formula_to_relation(f: &EqFormula, arity: usize) -> Result<OrbitRelation> {
    if f.variables.len() != arity {
        return Err(Error::Arity(format!(
            "formula has {} variables, expected {arity}",
            f.variables.len()
        )));
    }
    check_cap(arity)?;
    OrbitRelation::from_predicate(arity, |p| f.eval(p))
}

/// As [`formula_to_relation`] for CNF input.
pub fn cnf_to_relation(f: &CnfFormula) -> Result<OrbitRelation> {
    check_cap(f.num_vars())?;
    OrbitRelation::from_predicate(f.num_vars(), |p| f.eval(p))
}

/// Conjunction of (in)equalities pinning down exactly the pattern `p`.
fn describe(p: &Partition) -> Vec<Literal> {
    let mut reps: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    for (i, &l) in p.labels().iter().enumerate() {
        if (l as usize) < reps.len() {
            out.push(Literal::pos(reps[l as usize], i));
        } else {
            out.extend(reps.iter().map(|&r| Literal::neg(r, i)));
            reps.push(i);
        }
    }
    out
}

/// Disjunction over orbits of their defining conjunctions.
pub fn relation_to_formula(rel: &OrbitRelation) -> EqFormula {
    let lit_expr = |l: &Literal| match l.atom {
        Atom::Eq(i, j) if l.positive => Expr::Eq(i, j),
        Atom::Eq(i, j) => Expr::neq(i, j),
        Atom::False => Expr::False,
    };
    let body = Expr::Or(
        rel.orbits()
            .iter()
            .map(|p| Expr::And(describe(p).iter().map(lit_expr).collect()))
            .collect(),
    );
    EqFormula { variables: EqFormula::default_names(rel.arity()), body }
}

/// One clause per excluded orbit, negating that orbit's description.
pub fn relation_to_cnf(rel: &OrbitRelation) -> Result<CnfFormula> {
    check_cap(rel.arity())?;
    Ok(relation_to_cnf_named(rel, EqFormula::default_names(rel.arity())))
}

fn relation_to_cnf_named(rel: &OrbitRelation, variables: Vec<String>) -> CnfFormula {
    let all = partitions(rel.arity()).expect("arity within cap");
    let clauses = all
        .iter()
        .filter(|p| !rel.contains_pattern(p))
        .map(|p| {
            Clause::new(
                describe(p)
                    .into_iter()
                    .map(|l| Literal { positive: !l.positive, atom: l.atom })
                    .collect(),
            )
        })
        .collect();
    CnfFormula { variables, clauses }
}

/// Truth table of each clause and of the whole formula over all partitions.
pub(crate) struct Table {
    pub parts: std::sync::Arc<[Partition]>,
}

impl Table {
    pub fn new(n: usize) -> Result<Self> {
        check_cap(n)?;
        Ok(Table { parts: partitions(n.max(1))? })
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn literal(&self, l: &Literal) -> Bits {
        Bits::from_fn(self.len(), |i| l.eval(&self.parts[i]))
    }

    pub fn clause(&self, c: &Clause) -> Bits {
        Bits::from_fn(self.len(), |i| c.eval(&self.parts[i]))
    }

    pub fn cnf(&self, f: &CnfFormula) -> Bits {
        Bits::from_fn(self.len(), |i| f.eval(&self.parts[i]))
    }
}

/// Logical equivalence, matching variables by name.
pub fn equivalent(f: &CnfFormula, g: &CnfFormula) -> Result<bool> {
    let mut fv = f.variables.clone();
    let mut gv = g.variables.clone();
    fv.sort();
    gv.sort();
    if fv != gv {
        return Err(Error::invalid("formulas range over different variable sets"));
    }
    let map: Vec<usize> = g
        .variables
        .iter()
        .map(|n| f.variables.iter().position(|m| m == n).unwrap())
        .collect();
    let table = Table::new(f.num_vars())?;
    Ok(table.parts.iter().all(|p| {
        let gp = |i: usize, j: usize| p.same(map[i], map[j]);
        let g_val = g.clauses.iter().all(|c| {
            c.literals.iter().any(|l| match l.atom {
                Atom::Eq(i, j) => gp(i, j) == l.positive,
                Atom::False => !l.positive,
            })
        });
        f.eval(p) == g_val
    }))
}

/// Deletes clauses and literals one at a time while equivalence is kept,
/// scanning clauses in order and literals left to right until a fixpoint.
pub fn reduce(f: &CnfFormula) -> Result<CnfFormula> {
    let table = Table::new(f.num_vars())?;
    let n = table.len();
    let mut clauses: Vec<Vec<Literal>> = f.clauses.iter().map(|c| c.literals.clone()).collect();
    let mut bits: Vec<Bits> = f.clauses.iter().map(|c| table.clause(c)).collect();
    let truth = table.cnf(f);
    let mut false_count = vec![0u32; n];
    for b in &bits {
        for (p, fc) in false_count.iter_mut().enumerate() {
            if !b.get(p) {
                *fc += 1;
            }
        }
    }
    let mut alive = vec![true; clauses.len()];
    loop {
        let mut changed = false;
        for c in 0..clauses.len() {
            if !alive[c] {
                continue;
            }
            // Clause deletion weakens: it must not be the only false clause anywhere.
            if (0..n).all(|p| bits[c].get(p) || false_count[p] >= 2) {
                for (p, fc) in false_count.iter_mut().enumerate() {
                    if !bits[c].get(p) {
                        *fc -= 1;
                    }
                }
                alive[c] = false;
                changed = true;
                continue;
            }
            let mut k = 0;
            while k < clauses[c].len() {
                if clauses[c].len() == 1 && clauses[c][0].atom == Atom::False && clauses[c][0].positive {
                    break;
                }
                let mut nb = Bits::zeros(n);
                for (m, l) in clauses[c].iter().enumerate() {
                    if m != k {
                        nb.or_assign(&table.literal(l));
                    }
                }
                // Literal deletion strengthens: every model must survive.
                if truth.is_subset(&nb) {
                    for (p, fc) in false_count.iter_mut().enumerate() {
                        if bits[c].get(p) && !nb.get(p) {
                            *fc += 1;
                        }
                    }
                    bits[c] = nb;
                    clauses[c].remove(k);
                    if clauses[c].is_empty() {
                        clauses[c].push(Literal::falsum());
                    }
                    changed = true;
                } else {
                    k += 1;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let clauses = clauses
        .into_iter()
        .zip(alive)
        .filter(|(_, a)| *a)
        .map(|(c, _)| Clause::new(c))
        .collect();
    Ok(CnfFormula { variables: f.variables.clone(), clauses })
}
