//! Exhaustive symbolic search.
//!
//! Which rule fires on an argument row depends only on which pattern sets
//! contain each argument, and two outputs agree only through equal constants
//! or equal key values within the same argument position. So each argument
//! tuple may be drawn from the named values its position tests plus fresh
//! symbols local to that tuple, named in first-use order. The search fills
//! all n tuples one coordinate at a time and prunes any prefix that leaves
//! the relation or whose image prefix can no longer leave it.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::hash::{Hash, Hasher};

use super::{replay_witness, PreservationVerdict};
use crate::caps::DEFAULT_BUDGET;
use crate::eqcore::{partitions, OrbitRelation, Partition};
use crate::error::{Error, Result};
use crate::patops::{OutputSpec, OutputTerm, PatternOperation, SymbolicValue};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactConfig {
    /// Maximum number of visited partial assignments.
    pub budget: u64,
    /// Only accept violations whose output has one of these patterns.
    pub targets: Option<Vec<Partition>>,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig { budget: DEFAULT_BUDGET, targets: None }
    }
}

pub fn preserves_exact(op: &PatternOperation, rel: &OrbitRelation) -> Result<PreservationVerdict> {
    preserves_exact_with(op, rel, &ExactConfig::default())
}

/// Upper bound on the leaves of the search: valued tuples per argument to the n-th power.
pub fn estimate_exact_cost(op: &PatternOperation, rel: &OrbitRelation) -> f64 {
    let per_arg = |named: usize| -> f64 {
        rel.orbits()
            .iter()
            .map(|p| {
                let b = p.num_blocks();
                (0..=b.min(named))
                    .map(|m| {
                        let choose = (0..m).fold(1.0, |a, i| a * (b - i) as f64 / (i + 1) as f64);
                        let perm = (0..m).fold(1.0, |a, i| a * (named - i) as f64);
                        choose * perm
                    })
                    .sum::<f64>()
            })
            .sum()
    };
    named_per_position(op).iter().map(|s| per_arg(s.len())).product()
}

fn named_per_position(op: &PatternOperation) -> Vec<Vec<u64>> {
    (0..op.arity())
        .map(|j| {
            let mut v: Vec<u64> = op.rules().iter().flat_map(|r| r.patterns[j].values().iter().copied()).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect()
}

fn pack(labels: &[u8]) -> u64 {
    labels.iter().enumerate().fold(0u64, |acc, (i, &l)| acc | (l as u64) << (4 * i))
}

fn prefix_sets<'a>(k: usize, pats: impl Iterator<Item = &'a Partition>) -> Vec<HashSet<u64>> {
    let mut sets = vec![HashSet::new(); k + 1];
    for p in pats {
        for len in 0..=k {
            sets[len].insert(pack(&p.labels()[..len]));
        }
    }
    sets
}

/// Ids of prefixes such that equal ids have equal sets of completions.
fn residual_ids<'a>(k: usize, pats: impl Iterator<Item = &'a Partition> + Clone) -> Vec<HashMap<u64, u32>> {
    let mut intern: HashMap<(usize, Vec<u64>), u32> = HashMap::new();
    let mut out = vec![HashMap::new(); k + 1];
    for len in 0..=k {
        let mut groups: HashMap<u64, Vec<u64>> = HashMap::new();
        for p in pats.clone() {
            let l = p.labels();
            groups.entry(pack(&l[..len])).or_default().push(pack(&l[len..]));
        }
        for (prefix, mut suffixes) in groups {
            suffixes.sort_unstable();
            let next = intern.len() as u32;
            let id = *intern.entry((len, suffixes)).or_insert(next);
            out[len].insert(prefix, id);
        }
    }
    out
}

/// Memo entries kept before new failures stop being recorded.
const MEMO_CAP: usize = 20_000_000;

struct Search<'a> {
    op: &'a PatternOperation,
    n: usize,
    k: usize,
    named: Vec<Vec<u64>>,
    rel_prefix: Vec<HashSet<u64>>,
    target_prefix: Vec<HashSet<u64>>,
    vals: Vec<Vec<SymbolicValue>>,
    labels: Vec<Vec<u8>>,
    fresh: Vec<u32>,
    outs: Vec<OutputTerm<SymbolicValue>>,
    out_labels: Vec<u8>,
    allowed: Vec<Vec<u8>>,
    rel_residual: Vec<HashMap<u64, u32>>,
    target_residual: Vec<HashMap<u64, u32>>,
    failed: HashSet<u128>,
    nodes: u64,
    budget: u64,
}

impl Search<'_> {
    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::resource("preservation search nodes", self.budget));
        }
        Ok(())
    }

    fn next_label(ls: &[u8]) -> u8 {
        ls.iter().max().map_or(0, |m| m + 1)
    }

    /// Fingerprint of everything the completion of a prefix of length t depends on.
    fn state_key(&self, t: usize) -> u128 {
        let mut words: Vec<u64> = vec![t as u64];
        let class_of = |p: usize, v: SymbolicValue| -> u64 {
            let s = self.vals[p].iter().position(|&x| x == v).expect("key value occurs");
            self.labels[p][s] as u64
        };
        for j in 0..self.n {
            words.push(self.rel_residual[t][&pack(&self.labels[j])] as u64);
            let classes = Self::next_label(&self.labels[j]);
            for c in 0..classes {
                let s = self.labels[j].iter().position(|&l| l == c).expect("class occurs");
                words.push(match self.vals[j][s] {
                    SymbolicValue::Named(v) => v + 1,
                    SymbolicValue::Fresh(_) => 0,
                });
            }
            words.push(u64::MAX);
        }
        words.push(self.target_residual[t][&pack(&self.out_labels)] as u64);
        for c in 0..Self::next_label(&self.out_labels) {
            let s = self.out_labels.iter().position(|&l| l == c).expect("class occurs");
            match &self.outs[s] {
                OutputTerm::Const(v) => words.extend([0, *v]),
                OutputTerm::Fresh { stream, key } => {
                    words.extend([1, *stream as u64]);
                    let spec = self.op.rules().iter().find_map(|r| match &r.output {
                        OutputSpec::Fresh { stream: st, key: k } if st == stream => Some(k),
                        _ => None,
                    });
                    for (&p, &v) in spec.expect("stream exists").iter().zip(key) {
                        words.push(class_of(p, v));
                    }
                }
            }
        }
        let mut h1 = DefaultHasher::new();
        words.hash(&mut h1);
        let mut h2 = DefaultHasher::new();
        0xa5a5_u16.hash(&mut h2);
        words.hash(&mut h2);
        (h1.finish() as u128) << 64 | h2.finish() as u128
    }

    /// Output labels at coordinate t that keep the image prefix extendable to a target.
    fn compute_allowed(&self, t: usize) -> Vec<u8> {
        let mut ls = self.out_labels.clone();
        (0..=Self::next_label(&self.out_labels))
            .filter(|&l| {
                ls.push(l);
                let ok = self.target_prefix[t + 1].contains(&pack(&ls));
                ls.pop();
                ok
            })
            .collect()
    }

    /// Some rule still matching the first `j+1` arguments at coordinate t
    /// could produce an allowed output label.
    fn rule_feasible(&self, t: usize, j: usize) -> bool {
        let allowed = &self.allowed[t];
        let fresh_label = Self::next_label(&self.out_labels);
        let rep = |l: u8| -> &OutputTerm<SymbolicValue> {
            let s = self.out_labels.iter().position(|&x| x == l).expect("label in use");
            &self.outs[s]
        };
        self.op.rules().iter().any(|r| {
            if !(0..=j).all(|p| r.patterns[p].matches(&self.vals[p][t])) {
                return false;
            }
            allowed.iter().any(|&l| match &r.output {
                OutputSpec::Const(c) => {
                    if l == fresh_label {
                        !self.outs.contains(&OutputTerm::Const(*c))
                    } else {
                        *rep(l) == OutputTerm::Const(*c)
                    }
                }
                OutputSpec::Fresh { stream, key } => {
                    if l == fresh_label {
                        return true;
                    }
                    match rep(l) {
                        OutputTerm::Fresh { stream: s, key: kv } if s == stream => {
                            key.iter().zip(kv).all(|(&p, v)| p > j || self.vals[p][t] == *v)
                        }
                        _ => false,
                    }
                }
            })
        })
    }

    /// Extends a complete prefix of length t.
    fn dfs(&mut self, t: usize) -> Result<bool> {
        if t == self.k {
            return Ok(true);
        }
        let a = self.compute_allowed(t);
        if a.is_empty() {
            return Ok(false);
        }
        // The last coordinate is cheap to redo and rarely repeats.
        let memo = t + 1 < self.k;
        let key = if memo { self.state_key(t) } else { 0 };
        if memo && self.failed.contains(&key) {
            return Ok(false);
        }
        self.allowed.truncate(t);
        self.allowed.push(a);
        let found = self.fill(t, 0)?;
        if memo && !found && self.failed.len() < MEMO_CAP {
            self.failed.insert(key);
        }
        Ok(found)
    }

    /// Chooses the value of argument j at coordinate t.
    fn fill(&mut self, t: usize, j: usize) -> Result<bool> {
        if j == self.n {
            let row: Vec<SymbolicValue> = (0..self.n).map(|p| self.vals[p][t]).collect();
            let term = self.op.eval_term(&row);
            let label = match self.outs.iter().position(|o| *o == term) {
                Some(s) => self.out_labels[s],
                None => Self::next_label(&self.out_labels),
            };
            if !self.allowed[t].contains(&label) {
                return Ok(false);
            }
            self.outs.push(term);
            self.out_labels.push(label);
            let found = self.dfs(t + 1)?;
            if !found {
                self.outs.pop();
                self.out_labels.pop();
            }
            return Ok(found);
        }
        let fresh = self.fresh[j];
        let candidates: Vec<SymbolicValue> = self.named[j]
            .iter()
            .map(|&v| SymbolicValue::Named(v))
            .chain((0..=fresh).map(SymbolicValue::Fresh))
            .collect();
        for v in candidates {
            self.tick()?;
            let label = match self.vals[j].iter().position(|&x| x == v) {
                Some(s) => self.labels[j][s],
                None => Self::next_label(&self.labels[j]),
            };
            self.labels[j].push(label);
            if !self.rel_prefix[t + 1].contains(&pack(&self.labels[j])) {
                self.labels[j].pop();
                continue;
            }
            self.vals[j].push(v);
            if v == SymbolicValue::Fresh(fresh) {
                self.fresh[j] += 1;
            }
            let ok = j + 1 == self.n || self.rule_feasible(t, j);
            if ok && self.fill(t, j + 1)? {
                return Ok(true);
            }
            if v == SymbolicValue::Fresh(fresh) {
                self.fresh[j] -= 1;
            }
            self.vals[j].pop();
            self.labels[j].pop();
        }
        Ok(false)
    }
}

/// Exact decision with an explicit node budget and optional target output patterns.
pub fn preserves_exact_with(op: &PatternOperation, rel: &OrbitRelation, cfg: &ExactConfig) -> Result<PreservationVerdict> {
    let k = rel.arity();
    if k > 16 {
        return Err(Error::resource("relation arity for exact search", 16));
    }
    let targets: Vec<Partition> = match &cfg.targets {
        Some(ts) => {
            for t in ts {
                if t.arity() != k {
                    return Err(Error::Arity(format!("target pattern {t} does not have arity {k}")));
                }
                if rel.contains_pattern(t) {
                    return Err(Error::invalid(format!("target pattern {t} lies in the relation")));
                }
            }
            ts.clone()
        }
        None => partitions(k)?.iter().filter(|p| !rel.contains_pattern(p)).cloned().collect(),
    };
    if targets.is_empty() || rel.is_empty() {
        return Ok(PreservationVerdict::Preserves);
    }
    let n = op.arity();
    let mut s = Search {
        op,
        n,
        k,
        named: named_per_position(op),
        rel_prefix: prefix_sets(k, rel.orbits().iter()),
        target_prefix: prefix_sets(k, targets.iter()),
        vals: vec![Vec::with_capacity(k); n],
        labels: vec![Vec::with_capacity(k); n],
        fresh: vec![0; n],
        outs: Vec::with_capacity(k),
        out_labels: Vec::with_capacity(k),
        allowed: Vec::with_capacity(k),
        rel_residual: residual_ids(k, rel.orbits().iter()),
        target_residual: residual_ids(k, targets.iter()),
        failed: HashSet::new(),
        nodes: 0,
        budget: cfg.budget,
    };
    if !s.dfs(0)? {
        return Ok(PreservationVerdict::Preserves);
    }
    // Fresh symbols become the smallest naturals outside every pattern set.
    let support = op.pattern_support();
    let outside: Vec<u64> = (0u64..).filter(|v| support.binary_search(v).is_err()).take(k).collect();
    let inputs: Vec<Vec<u64>> = s
        .vals
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| match v {
                    SymbolicValue::Named(x) => *x,
                    SymbolicValue::Fresh(i) => outside[*i as usize],
                })
                .collect()
        })
        .collect();
    let witness = replay_witness(op, rel, &inputs)?;
    if !targets.contains(&witness.output_pattern) {
        return Err(Error::Internal(format!(
            "replayed output pattern {} differs from the symbolic one",
            witness.output_pattern
        )));
    }
    Ok(PreservationVerdict::Violates { witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqcore::builtin_relation;
    use crate::patops::builtin_operation;

    fn exact(op: &str, rel: &str) -> PreservationVerdict {
        preserves_exact(&builtin_operation(op).unwrap(), &builtin_relation(rel).unwrap()).unwrap()
    }

    #[test]
    fn small_examples() {
        assert!(exact("inj(2)", "N").preserves());
        assert!(exact("f3", "odd3").preserves());
        assert!(!exact("richard", "odd3").preserves());
        assert!(exact("bar(1)", "Runder2").preserves());
        assert!(exact("bar(1)", "Runder3").preserves());
        assert!(!exact("bar(1)", "N").preserves());
        assert!(exact("f3", "Runder2").preserves());
        assert!(!exact("f3", "Runder3").preserves());
    }

    #[test]
    fn target_pattern_is_honoured() {
        let target = Partition::of_slice(&[0, 0, 2, 2, 3, 3]).unwrap();
        let cfg = ExactConfig { targets: Some(vec![target.clone()]), ..ExactConfig::default() };
        let v = preserves_exact_with(&builtin_operation("f3").unwrap(), &builtin_relation("Rneq3").unwrap(), &cfg).unwrap();
        assert_eq!(v.witness().unwrap().output_pattern, target);
    }

    #[test]
    fn budget_is_enforced() {
        let cfg = ExactConfig { budget: 10, targets: None };
        let e = preserves_exact_with(&builtin_operation("f3").unwrap(), &builtin_relation("Runder2").unwrap(), &cfg);
        assert!(e.unwrap_err().is_resource());
    }
}
