//! The relations C_n, their Hubie-violators H_n, and the separation evidence
//! showing that distinct sets of C_n have distinct polymorphism clones.
//!
//! Tuples of C_n are laid out as `(x1, y1, x2, y2, …, xn, yn)`.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::eqcore::{pattern_of, OrbitRelation, Partition};
use crate::eqformula::{formula_to_relation, EqFormula, Expr};
use crate::error::{Error, Result};
use crate::patops::{ArgPattern, OutputSpec, PatternOperation, Rule};
use crate::preserve::{preserves_sampled, replay_witness, SampleConfig, SampledVerdict, Witness};

fn x(i: usize) -> usize {
    2 * (i - 1)
}

fn y(i: usize) -> usize {
    2 * (i - 1) + 1
}

/// γ_n: some pair differs, and no proper cycle `y_{j1} = x_{j2}, …, y_{jr} = x_{j1}`
/// over an index set of size 1 < r < n closes up.
pub fn gamma_formula(n: usize) -> Result<EqFormula> {
    if n < 3 {
        return Err(Error::invalid(format!("C_n needs n ≥ 3, got {n}")));
    }
    let mut clauses = vec![Expr::Or((1..=n).map(|i| Expr::neq(x(i), y(i))).collect())];
    for mask in 1u32..(1 << n) {
        let a: Vec<usize> = (1..=n).filter(|i| mask & (1 << (i - 1)) != 0).collect();
        if a.len() <= 1 || a.len() >= n {
            continue;
        }
        let r = a.len();
        clauses.push(Expr::Or((0..r).map(|t| Expr::neq(y(a[t]), x(a[(t + 1) % r]))).collect()));
    }
    let mut names = Vec::with_capacity(2 * n);
    for i in 1..=n {
        names.push(format!("x{i}"));
        names.push(format!("y{i}"));
    }
    EqFormula::new(names, Expr::And(clauses))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaRelation {
    pub n: usize,
    pub relation: OrbitRelation,
}

pub fn c_relation(n: usize) -> Result<GammaRelation> {
    if !(3..=5).contains(&n) {
        return Err(Error::invalid(format!("C_n is supported for 3 ≤ n ≤ 5, got {n}")));
    }
    let relation = formula_to_relation(&gamma_formula(n)?, 2 * n)?;
    Ok(GammaRelation { n, relation })
}

#[derive(Debug, Clone)]
pub struct HubieOperation {
    pub n: usize,
    /// Elements of C_n with entries in `1..=n+1`, in lexicographic order.
    pub rows: Vec<Vec<u64>>,
    pub op: PatternOperation,
}

impl HubieOperation {
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// The m-tuple `(c_1[t], …, c_m[t])` of coordinate `t`.
    pub fn column(&self, t: usize) -> Vec<u64> {
        self.rows.iter().map(|r| r[t]).collect()
    }
}

/// Odometer over `lo..=hi` in each of `len` coordinates, last coordinate fastest.
fn lex_tuples(len: usize, lo: u64, hi: u64, mut visit: impl FnMut(&[u64]) -> Result<()>) -> Result<()> {
    let mut t = vec![lo; len];
    loop {
        visit(&t)?;
        let mut i = len;
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            if t[i] < hi {
                t[i] += 1;
                break;
            }
            t[i] = lo;
        }
    }
}

pub fn hubie_operation(n: usize) -> Result<HubieOperation> {
    if !(3..=4).contains(&n) {
        return Err(Error::invalid(format!("H_n is supported for n ∈ {{3, 4}}, got {n}")));
    }
    let c = c_relation(n)?.relation;
    let mut rows = Vec::new();
    lex_tuples(2 * n, 1, n as u64 + 1, |t| {
        if c.contains_pattern(&pattern_of(t)?) {
            rows.push(t.to_vec());
        }
        Ok(())
    })?;
    if rows.is_empty() {
        return Err(Error::Internal(format!("C_{n} has no tuple over 1..={}", n + 1)));
    }
    let m = rows.len();
    let mut seen: Vec<(Vec<u64>, u64)> = Vec::new();
    let mut rules = Vec::with_capacity(2 * n);
    for t in 0..2 * n {
        let out = (t / 2 + 1) as u64;
        let col: Vec<u64> = rows.iter().map(|r| r[t]).collect();
        if let Some((_, prev)) = seen.iter().find(|(c, _)| *c == col) {
            if *prev != out {
                return Err(Error::Internal(format!(
                    "H_{n}: column {} coincides with a column mapped to {prev}",
                    t + 1
                )));
            }
        }
        rules.push(Rule {
            patterns: col.iter().map(|&v| ArgPattern::in_set([v])).collect(),
            output: OutputSpec::Const(out),
        });
        seen.push((col, out));
    }
    let op = PatternOperation::build(format!("H_{n}"), m, rules)?;
    Ok(HubieOperation { n, rows, op })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HubieCheck {
    pub ok: bool,
    pub output: Vec<u64>,
    pub output_pattern: Partition,
}

/// Applies H_n to its own rows and confirms the image `(1,1,…,n,n)` leaves C_n.
pub fn hubie_violation_check(h: &HubieOperation) -> Result<(HubieCheck, Witness)> {
    let c = c_relation(h.n)?.relation;
    let witness = replay_witness(&h.op, &c, &h.rows)?;
    let expected: Vec<u64> = (1..=h.n as u64).flat_map(|j| [j, j]).collect();
    let ok = witness.output == expected && !c.contains_pattern(&witness.output_pattern);
    let check = HubieCheck { ok, output: witness.output.clone(), output_pattern: witness.output_pattern.clone() };
    Ok((check, witness))
}

/// Sample count and seed used by default for cross-preservation checks.
pub const DEFAULT_SAMPLES: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossCheck {
    pub k: usize,
    pub samples: u64,
    pub seed: u64,
    pub verdict: SampledVerdict,
}

/// Samples whether H_n preserves C_k, drawing values from `0..4k`.
pub fn cross_check(h: &HubieOperation, k: usize, samples: u64, seed: u64) -> Result<CrossCheck> {
    let c = c_relation(k)?.relation;
    let cfg = SampleConfig { samples, seed, pool: Some(4 * k) };
    Ok(CrossCheck { k, samples, seed, verdict: preserves_sampled(&h.op, &c, &cfg)? })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContinuumReport {
    pub n: usize,
    pub m: usize,
    pub violation: HubieCheck,
    pub cross: Vec<CrossCheck>,
}

pub fn continuum_report(n: usize, ks: &[usize], samples: u64, seed: u64) -> Result<ContinuumReport> {
    let h = hubie_operation(n)?;
    let (violation, _) = hubie_violation_check(&h)?;
    let cross = ks.iter().map(|&k| cross_check(&h, k, samples, seed)).collect::<Result<_>>()?;
    Ok(ContinuumReport { n, m: h.m(), violation, cross })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Separation {
    /// H_n violates C_n, which is required by the side containing n only.
    pub n: usize,
    pub violation: HubieCheck,
    /// Sampled evidence that H_n preserves each C_k on the other side.
    pub cross: Vec<CrossCheck>,
    /// The operation lies in the clone of this side and outside the other.
    pub member_of: char,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AntichainReport {
    pub a: BTreeSet<usize>,
    pub b: BTreeSet<usize>,
    pub separations: Vec<Separation>,
    /// Preservation on the other side is sampled, not proved by search.
    pub note: String,
}

/// Evidence that Pol{C_n : n ∈ A} and Pol{C_n : n ∈ B} differ, with n ∈ {3, 4}.
pub fn antichain_demo(a: &BTreeSet<usize>, b: &BTreeSet<usize>, samples: u64, seed: u64) -> Result<AntichainReport> {
    if a == b {
        return Err(Error::invalid("the two index sets are identical"));
    }
    if let Some(&n) = a.union(b).find(|n| !(3..=4).contains(*n)) {
        return Err(Error::invalid(format!("index {n} is outside the available range 3..=4")));
    }
    let mut separations = Vec::new();
    for &n in a.symmetric_difference(b) {
        let (other, member_of) = if a.contains(&n) { (b, 'B') } else { (a, 'A') };
        let h = hubie_operation(n)?;
        let (violation, _) = hubie_violation_check(&h)?;
        let cross = other.iter().map(|&k| cross_check(&h, k, samples, seed)).collect::<Result<_>>()?;
        separations.push(Separation { n, violation, cross, member_of });
    }
    Ok(AntichainReport {
        a: a.clone(),
        b: b.clone(),
        separations,
        note: "preservation of C_k by H_n for k ≠ n is sampled evidence; it holds for all inputs by a combinatorial argument not replayed here".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_gamma(n: usize, t: &[u64]) -> bool {
        let xs = |i: usize| t[2 * (i - 1)];
        let ys = |i: usize| t[2 * (i - 1) + 1];
        if (1..=n).all(|i| xs(i) == ys(i)) {
            return false;
        }
        for mask in 1u32..(1 << n) {
            let a: Vec<usize> = (1..=n).filter(|i| mask & (1 << (i - 1)) != 0).collect();
            if a.len() > 1 && a.len() < n && (0..a.len()).all(|s| ys(a[s]) == xs(a[(s + 1) % a.len()])) {
                return false;
            }
        }
        true
    }

    #[test]
    fn c3_examples() {
        let c = c_relation(3).unwrap().relation;
        assert!(c.contains_pattern(&pattern_of(&[0, 1, 0, 1, 0, 1]).unwrap()));
        assert!(!c.contains_pattern(&pattern_of(&[0; 6]).unwrap()));
        assert!(!c.contains_pattern(&pattern_of(&[1, 1, 2, 2, 3, 3]).unwrap()));
    }

    #[test]
    fn c_matches_raw_evaluation() {
        for n in 3..=4 {
            let c = c_relation(n).unwrap().relation;
            lex_tuples(2 * n, 0, 2 * n as u64 - 1, |t| {
                if t.iter().enumerate().all(|(i, &v)| v <= i as u64) {
                    assert_eq!(c.contains_pattern(&pattern_of(t).unwrap()), raw_gamma(n, t), "{t:?}");
                }
                Ok(())
            })
            .unwrap();
        }
    }

    #[test]
    fn h3_shape() {
        let h = hubie_operation(3).unwrap();
        let mut count = 0;
        lex_tuples(6, 1, 4, |t| {
            count += raw_gamma(3, t) as usize;
            Ok(())
        })
        .unwrap();
        assert_eq!(h.m(), count);
        assert!(h.rows.windows(2).all(|w| w[0] < w[1]));
        let consts: Vec<u64> = h
            .op
            .rules()
            .iter()
            .filter_map(|r| match r.output {
                OutputSpec::Const(c) => Some(c),
                _ => None,
            })
            .collect();
        assert_eq!(consts, vec![1, 1, 2, 2, 3, 3]);
        let (check, _) = hubie_violation_check(&h).unwrap();
        assert!(check.ok);
        assert_eq!(check.output_pattern, Partition::from_labels(vec![0, 0, 1, 1, 2, 2]).unwrap());
    }

    #[test]
    fn ranges_enforced() {
        assert!(c_relation(2).is_err());
        assert!(c_relation(6).is_err());
        assert!(hubie_operation(5).is_err());
        let s: BTreeSet<usize> = [3].into();
        assert!(antichain_demo(&s, &s, 10, 1).is_err());
    }
}
