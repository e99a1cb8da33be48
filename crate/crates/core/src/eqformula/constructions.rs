//! Explicit pp definitions between the named relations, and the generator of
//! pp definitions of connected Horn clauses over `Runder(2)` and `≠`.

use super::cnf::{Atom, Clause};
use super::pp::{PpAtom, PpFormula};
use crate::eqcore::OrbitRelation;
use crate::error::{Error, Result};

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn rel(name: &str, args: Vec<usize>) -> PpAtom {
    PpAtom::Rel { name: name.to_string(), args }
}

/// `∃ w1..w(l+1). I(w1, w(l+1), u, v) ∧ ⋀ I(ui, vi, wi, w(i+1))`, free
/// variables `u1,v1,…,ul,vl,u,v`. Defines `(u1=v1 ∧ … ∧ ul=vl) → u=v`.
pub fn horn_clause_from_i(l: usize) -> PpFormula {
    horn_clause_from_i_with_head(l, l + 1)
}

/// As [`horn_clause_from_i`] but with the first conjunct reading
/// `I(w1, w_head, u, v)`; used to show that `head = l` does not work for `l ≥ 2`.
pub fn horn_clause_from_i_with_head(l: usize, head: usize) -> PpFormula {
    let mut free = Vec::new();
    for i in 1..=l {
        free.push(format!("u{i}"));
        free.push(format!("v{i}"));
    }
    free.push("u".into());
    free.push("v".into());
    let f = free.len();
    let w = |i: usize| f + i - 1;
    let mut conjuncts = vec![rel("I", vec![w(1), w(head), f - 2, f - 1])];
    for i in 1..=l {
        conjuncts.push(rel("I", vec![2 * (i - 1), 2 * (i - 1) + 1, w(i), w(i + 1)]));
    }
    PpFormula { free, bound: names("w", l + 1), conjuncts }
}

/// Relation of `(u1=v1 ∧ … ∧ ul=vl) → u=v` over `(u1,v1,…,ul,vl,u,v)`.
pub fn horn_clause_relation(l: usize) -> Result<OrbitRelation> {
    OrbitRelation::from_predicate(2 * l + 2, |p| {
        !(0..l).all(|i| p.same(2 * i, 2 * i + 1)) || p.same(2 * l, 2 * l + 1)
    })
}

/// `∃ u,v,w. N(a,b,u,v) ∧ N(a,b,v,w) ∧ N(u,w,c,d)`.
pub fn i_from_n() -> PpFormula {
    PpFormula {
        free: vec!["a".into(), "b".into(), "c".into(), "d".into()],
        bound: vec!["u".into(), "v".into(), "w".into()],
        conjuncts: vec![rel("N", vec![0, 1, 4, 5]), rel("N", vec![0, 1, 5, 6]), rel("N", vec![4, 6, 2, 3])],
    }
}

/// The six-conjunct definition of `Runder(2)` from `odd3`.
pub fn runder2_from_odd3() -> PpFormula {
    let (x1, x2, x3, x4) = (0, 1, 2, 3);
    let y = |i: usize| 3 + i;
    PpFormula {
        free: names("x", 4),
        bound: names("y", 5),
        conjuncts: vec![
            rel("odd3", vec![x1, x2, y(1)]),
            rel("odd3", vec![x1, x2, y(2)]),
            rel("odd3", vec![y(1), y(2), y(3)]),
            rel("odd3", vec![y(3), y(4), y(5)]),
            rel("odd3", vec![x3, x4, y(4)]),
            rel("odd3", vec![x3, x4, y(5)]),
        ],
    }
}

/// `∃ u,v. u=v ∧ R(n+1)(x1,y1,…,xn,yn,u,v)`, a definition of `R(n)`.
pub fn r_from_r_next(n: usize) -> PpFormula {
    let mut free = Vec::new();
    for i in 1..=n {
        free.push(format!("x{i}"));
        free.push(format!("y{i}"));
    }
    let f = free.len();
    let mut args: Vec<usize> = (0..f).collect();
    args.extend([f, f + 1]);
    PpFormula {
        free,
        bound: vec!["u".into(), "v".into()],
        conjuncts: vec![PpAtom::Eq(f, f + 1), rel(&format!("R{}", n + 1), args)],
    }
}

/// Vertices of the component of `start` in the graph of `edges`, in BFS order.
fn component(start: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut out = vec![start];
    let mut k = 0;
    while k < out.len() {
        let v = out[k];
        for &(a, b) in edges {
            for (p, q) in [(a, b), (b, a)] {
                if p == v && !out.contains(&q) {
                    out.push(q);
                }
            }
        }
        k += 1;
    }
    out
}

/// Builder state for chains `Runder2(x0,x1,u1,u1) ∧ Runder2(u1,x2,u2,u2) ∧ …`.
struct Builder {
    free: Vec<String>,
    bound: Vec<String>,
    conjuncts: Vec<PpAtom>,
}

impl Builder {
    fn fresh(&mut self, prefix: &str) -> usize {
        self.bound.push(format!("{prefix}{}", self.bound.len() + 1));
        self.free.len() + self.bound.len() - 1
    }

    /// Returns the last chain variable; equals `comp[0]` when every vertex of `comp` agrees.
    fn chain(&mut self, comp: &[usize]) -> usize {
        let mut last = comp[0];
        for &x in &comp[1..] {
            let u = self.fresh("u");
            self.conjuncts.push(rel("Runder2", vec![last, x, u, u]));
            last = u;
        }
        last
    }

    fn finish(self) -> PpFormula {
        PpFormula { free: self.free, bound: self.bound, conjuncts: self.conjuncts }
    }
}

/// pp definition over `Runder2` and `neq` of one connected Horn clause on the
/// variables `vars`. Returns `None` for tautological clauses.
pub fn connected_horn_clause_pp(clause: &Clause, vars: &[String]) -> Result<Option<PpFormula>> {
    let positives: Vec<(usize, usize)> = clause
        .literals
        .iter()
        .filter(|l| l.is_positive_eq())
        .filter_map(|l| l.atom.vars())
        .collect();
    if positives.len() > 1 {
        return Err(Error::invalid("clause is not Horn"));
    }
    let edges: Vec<(usize, usize)> = clause
        .literals
        .iter()
        .filter(|l| !l.positive)
        .filter_map(|l| l.atom.vars())
        .filter(|(i, j)| i != j)
        .collect();
    if clause.literals.iter().any(|l| !l.positive && l.atom == Atom::False) {
        return Ok(None);
    }
    let mut b = Builder { free: vars.to_vec(), bound: Vec::new(), conjuncts: Vec::new() };
    if let Some(&(x0, y0)) = positives.first() {
        if x0 == y0 {
            return Ok(None);
        }
        let cx = component(x0, &edges);
        if cx.contains(&y0) {
            return Ok(None);
        }
        let cy = component(y0, &edges);
        let touched: usize = edges.iter().filter(|(a, _)| !cx.contains(a) && !cy.contains(a)).count();
        if touched > 0 {
            return Err(Error::invalid("clause graph is not connected"));
        }
        let ul = b.chain(&cx);
        let vk = b.chain(&cy);
        b.conjuncts.push(PpAtom::Eq(ul, vk));
        return Ok(Some(b.finish()));
    }
    if edges.is_empty() {
        // The clause is `false`.
        let u = b.fresh("u");
        b.conjuncts.push(PpAtom::Neq(u, u));
        return Ok(Some(b.finish()));
    }
    let c1 = component(edges[0].0, &edges);
    let rest: Vec<(usize, usize)> = edges.iter().copied().filter(|(a, _)| !c1.contains(a)).collect();
    if rest.is_empty() {
        if c1.len() == 2 {
            b.conjuncts.push(PpAtom::Neq(c1[0], c1[1]));
            return Ok(Some(b.finish()));
        }
        let mut last = c1[0];
        let mut first = None;
        for &x in &c1[1..] {
            let u = b.fresh("u");
            b.conjuncts.push(rel("Runder2", vec![last, x, u, u]));
            first.get_or_insert(u);
            last = u;
        }
        b.conjuncts.push(PpAtom::Neq(first.unwrap(), last));
        return Ok(Some(b.finish()));
    }
    let c2 = component(rest[0].0, &rest);
    if rest.iter().any(|(a, _)| !c2.contains(a)) {
        return Err(Error::invalid("negative clause graph has more than two components"));
    }
    let ul = b.chain(&c1);
    let vk = b.chain(&c2);
    let z = b.fresh("z");
    let (xl, yk) = (*c1.last().unwrap(), *c2.last().unwrap());
    b.conjuncts.push(rel("Runder2", vec![xl, ul, z, z]));
    b.conjuncts.push(rel("Runder2", vec![yk, vk, z, z]));
    b.conjuncts.push(PpAtom::Neq(ul, vk));
    Ok(Some(b.finish()))
}
