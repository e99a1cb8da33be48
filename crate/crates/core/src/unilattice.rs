//! Unary operations up to permutations: kernel tuples, the order ⊑ on them,
//! and closed monoids described by finite antichains.
//!
//! A unary operation is determined up to composition with permutations by
//! the sorted sizes of its kernel classes. For a relation of arity k every
//! class of size at least k behaves like an infinite one, so relations are
//! tested against *capped profiles* whose entries lie in `{1, …, k-1, ω}`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::eqcore::{enumerate_partitions, OrbitRelation, Partition};
use crate::error::{Error, Result};

/// Entry of a kernel tuple: a finite class size or ω.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entry {
    Fin(u64),
    Omega,
}

impl Entry {
    fn add(self, other: Entry) -> Entry {
        match (self, other) {
            (Entry::Fin(a), Entry::Fin(b)) => Entry::Fin(a.saturating_add(b)),
            _ => Entry::Omega,
        }
    }
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entry::Fin(v) => write!(f, "{v}"),
            Entry::Omega => f.write_str("w"),
        }
    }
}

/// A nondecreasing sequence of entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KernelTuple(Vec<Entry>);

impl KernelTuple {
    /// Sorts the entries; rejects zero sizes.
    pub fn new(mut entries: Vec<Entry>) -> Result<Self> {
        if entries.contains(&Entry::Fin(0)) {
            return Err(Error::invalid("kernel classes are nonempty"));
        }
        entries.sort_unstable();
        Ok(KernelTuple(entries))
    }

    pub fn entries(&self) -> &[Entry] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Ends in ω, as the kernel of a total unary operation on ℕ must.
    pub fn is_full(&self) -> bool {
        self.0.last() == Some(&Entry::Omega)
    }

    /// Entries in `{1..k-1, ω}` and length at most k.
    pub fn is_capped(&self, k: usize) -> bool {
        self.0.len() <= k && self.0.iter().all(|e| matches!(e, Entry::Omega) || matches!(e, Entry::Fin(s) if (*s as usize) < k))
    }

    /// The profile relevant to relations of arity k: the k largest classes,
    /// sizes of at least k replaced by ω.
    pub fn capped(&self, k: usize) -> KernelTuple {
        let skip = self.0.len().saturating_sub(k);
        let entries = self.0[skip..]
            .iter()
            .map(|&e| match e {
                Entry::Fin(s) if (s as usize) < k => e,
                _ => Entry::Omega,
            })
            .collect();
        KernelTuple::new(entries).expect("entries stay nonzero")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let b = text.trim();
        let off = text.len() - text.trim_start().len();
        let inner = b
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| Error::syntax(off, "kernel tuple must be written (a,b,…)"))?;
        let mut entries = Vec::new();
        let mut pos = off + 1;
        for part in inner.split(',') {
            let t = part.trim();
            let e = match t {
                "w" | "ω" | "omega" => Entry::Omega,
                _ => Entry::Fin(
                    t.parse::<u64>()
                        .map_err(|_| Error::syntax(pos + part.len() - part.trim_start().len(), format!("bad tuple entry '{t}'")))?,
                ),
            };
            if e == Entry::Fin(0) {
                return Err(Error::syntax(pos, "tuple entries are at least 1"));
            }
            entries.push(e);
            pos += part.len() + 1;
        }
        KernelTuple::new(entries)
    }
}

impl fmt::Display for KernelTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

impl FromStr for KernelTuple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelTuple::parse(s)
    }
}

impl Serialize for KernelTuple {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Kernel tuple from class sizes; `full` demands an infinite class.
pub fn make_kernel_tuple(sizes: &[Entry], full: bool) -> Result<KernelTuple> {
    if sizes.is_empty() {
        return Err(Error::invalid("a kernel tuple needs at least one class"));
    }
    let t = KernelTuple::new(sizes.to_vec())?;
    if full && !t.is_full() {
        return Err(Error::invalid("a total operation on ℕ has an infinite kernel class"));
    }
    Ok(t)
}

/// `a ⊑ b`: the positions of b split into `len a` parts, the i-th summing to at least `a_i`.
pub fn seq_leq(a: &[Entry], b: &[Entry]) -> bool {
    if a.len() > b.len() {
        return false;
    }
    if a.is_empty() {
        return b.is_empty();
    }
    if b.len() > 64 {
        return false;
    }
    let mut need: Vec<Entry> = a.to_vec();
    need.sort_unstable_by(|x, y| y.cmp(x));
    let full: u64 = if b.len() == 64 { u64::MAX } else { (1u64 << b.len()) - 1 };
    let mut failed = HashSet::new();
    leq_rec(&need, 0, b, full, &mut failed)
}

fn mask_sum(b: &[Entry], mask: u64) -> Entry {
    let mut s = Entry::Fin(0);
    let mut m = mask;
    while m != 0 {
        let j = m.trailing_zeros() as usize;
        s = s.add(b[j]);
        m &= m - 1;
    }
    s
}

fn covers(sum: Entry, want: Entry) -> bool {
    match (want, sum) {
        (Entry::Omega, s) => s == Entry::Omega,
        (Entry::Fin(_), Entry::Omega) => true,
        (Entry::Fin(w), Entry::Fin(s)) => s >= w,
    }
}

fn leq_rec(need: &[Entry], i: usize, b: &[Entry], unused: u64, failed: &mut HashSet<(usize, u64)>) -> bool {
    if i == need.len() {
        return true;
    }
    if (unused.count_ones() as usize) < need.len() - i || failed.contains(&(i, unused)) {
        return false;
    }
    // Minimal sufficient subsets only; leftover positions join any part.
    let mut sub = unused;
    loop {
        if sub != 0 && covers(mask_sum(b, sub), need[i]) {
            let minimal = {
                let mut m = sub;
                let mut ok = true;
                while m != 0 {
                    let bit = m & m.wrapping_neg();
                    if covers(mask_sum(b, sub & !bit), need[i]) {
                        ok = false;
                        break;
                    }
                    m &= m - 1;
                }
                ok
            };
            if minimal && leq_rec(need, i + 1, b, unused & !sub, failed) {
                return true;
            }
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & unused;
    }
    failed.insert((i, unused));
    false
}

/// Keeps the ⊑-maximal elements.
pub fn antichain_reduce(set: impl IntoIterator<Item = KernelTuple>) -> Vec<KernelTuple> {
    let all: Vec<KernelTuple> = set.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    all.iter()
        .filter(|t| !all.iter().any(|u| u != *t && seq_leq(t.entries(), u.entries())))
        .cloned()
        .collect()
}

/// A closed monoid containing the permutations: all unary operations, or
/// the downward closure of a finite antichain of full kernel tuples.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MonoidDescriptor {
    Top,
    Antichain(Vec<KernelTuple>),
}

impl MonoidDescriptor {
    /// Only the injections.
    pub fn injections() -> Self {
        MonoidDescriptor::Antichain(Vec::new())
    }

    /// Injections and constants.
    pub fn injections_and_constants() -> Self {
        MonoidDescriptor::Antichain(vec![KernelTuple(vec![Entry::Omega])])
    }

    pub fn from_generators(gens: impl IntoIterator<Item = KernelTuple>) -> Result<Self> {
        let gens: Vec<KernelTuple> = gens.into_iter().collect();
        if let Some(g) = gens.iter().find(|g| !g.is_full()) {
            return Err(Error::invalid(format!("generator {g} does not end in w")));
        }
        Ok(MonoidDescriptor::Antichain(antichain_reduce(gens)))
    }

    pub fn is_top(&self) -> bool {
        matches!(self, MonoidDescriptor::Top)
    }

    pub fn is_injections(&self) -> bool {
        matches!(self, MonoidDescriptor::Antichain(a) if a.is_empty())
    }

    pub fn is_injections_and_constants(&self) -> bool {
        *self == MonoidDescriptor::injections_and_constants()
    }

    pub fn generators(&self) -> Option<&[KernelTuple]> {
        match self {
            MonoidDescriptor::Top => None,
            MonoidDescriptor::Antichain(a) => Some(a),
        }
    }
}

impl fmt::Display for MonoidDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonoidDescriptor::Top => f.write_str("TOP"),
            m if m.is_injections() => f.write_str("I"),
            m if m.is_injections_and_constants() => f.write_str("I+"),
            MonoidDescriptor::Antichain(a) => {
                let s: Vec<String> = a.iter().map(|t| t.to_string()).collect();
                write!(f, "{{{}}}", s.join(","))
            }
        }
    }
}

impl Serialize for MonoidDescriptor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub fn monoid_member(kappa: &KernelTuple, m: &MonoidDescriptor) -> bool {
    match m {
        MonoidDescriptor::Top => true,
        MonoidDescriptor::Antichain(a) => a.iter().any(|g| seq_leq(kappa.entries(), g.entries())),
    }
}

pub fn monoid_join(a: &MonoidDescriptor, b: &MonoidDescriptor) -> MonoidDescriptor {
    match (a, b) {
        (MonoidDescriptor::Antichain(x), MonoidDescriptor::Antichain(y)) => {
            MonoidDescriptor::Antichain(antichain_reduce(x.iter().chain(y).cloned()))
        }
        _ => MonoidDescriptor::Top,
    }
}

pub fn monoid_leq(a: &MonoidDescriptor, b: &MonoidDescriptor) -> bool {
    match (a, b) {
        (_, MonoidDescriptor::Top) => true,
        (MonoidDescriptor::Top, _) => false,
        (MonoidDescriptor::Antichain(x), _) => x.iter().all(|g| monoid_member(g, b)),
    }
}

/// Default bound on the candidate count explored by [`monoid_meet`].
pub const MEET_CANDIDATE_CAP: u64 = 1_000_000;

/// Intersection of two monoids.
pub fn monoid_meet(a: &MonoidDescriptor, b: &MonoidDescriptor) -> Result<MonoidDescriptor> {
    let (x, y) = match (a, b) {
        (MonoidDescriptor::Top, o) | (o, MonoidDescriptor::Top) => return Ok(o.clone()),
        (MonoidDescriptor::Antichain(x), MonoidDescriptor::Antichain(y)) => (x, y),
    };
    let mut out = Vec::new();
    for g in x {
        for h in y {
            out.extend(meet_pair(g, h)?);
        }
    }
    Ok(MonoidDescriptor::Antichain(antichain_reduce(out)))
}

fn subset_sums(t: &KernelTuple, into: &mut BTreeSet<u64>) {
    let fin: Vec<u64> = t
        .entries()
        .iter()
        .filter_map(|e| match e {
            Entry::Fin(v) => Some(*v),
            Entry::Omega => None,
        })
        .collect();
    let mut sums = BTreeSet::from([0u64]);
    for v in fin {
        let next: Vec<u64> = sums.iter().map(|s| s + v).collect();
        sums.extend(next);
    }
    sums.remove(&0);
    into.extend(sums);
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn meet_pair(g: &KernelTuple, h: &KernelTuple) -> Result<Vec<KernelTuple>> {
    let mut vals = BTreeSet::new();
    subset_sums(g, &mut vals);
    subset_sums(h, &mut vals);
    let mut values: Vec<Entry> = vals.into_iter().map(Entry::Fin).collect();
    values.push(Entry::Omega);
    let max_len = g.len().min(h.len());
    let est: f64 = (1..=max_len as u64).map(|l| binomial(values.len() as u64 + l - 2, l - 1)).sum();
    if est > MEET_CANDIDATE_CAP as f64 {
        return Err(Error::resource("monoid meet candidates", MEET_CANDIDATE_CAP));
    }
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(values: &[Entry], start: usize, left: usize, cur: &mut Vec<Entry>, g: &KernelTuple, h: &KernelTuple, out: &mut Vec<KernelTuple>) {
        let mut t = cur.clone();
        t.push(Entry::Omega);
        if seq_leq(&t, g.entries()) && seq_leq(&t, h.entries()) {
            out.push(KernelTuple(t));
        } else {
            // Longer candidates extend this prefix and are only harder to fit.
            return;
        }
        if left == 0 {
            return;
        }
        for i in start..values.len() - 1 {
            cur.push(values[i]);
            rec(values, i, left - 1, cur, g, h, out);
            cur.pop();
        }
    }
    rec(&values, 0, max_len - 1, &mut cur, g, h, &mut out);
    Ok(out)
}

/// Groups of merged blocks fit injectively into classes of the given sizes.
fn fits(groups: &mut [usize], classes: &[Entry]) -> bool {
    if groups.len() > classes.len() {
        return false;
    }
    groups.sort_unstable_by(|a, b| b.cmp(a));
    let mut cls: Vec<Entry> = classes.to_vec();
    cls.sort_unstable_by(|a, b| b.cmp(a));
    groups.iter().zip(&cls).all(|(&g, &c)| covers(c, Entry::Fin(g as u64)))
}

/// Whether a unary operation with capped profile `kappa` preserves `rel`.
pub fn unary_preserves(kappa: &KernelTuple, rel: &OrbitRelation) -> Result<bool> {
    let k = rel.arity();
    if kappa.is_empty() || !kappa.is_capped(k.max(1)) {
        return Err(Error::invalid(format!("profile {kappa} is not capped at arity {k}")));
    }
    for p in rel.orbits() {
        let b = p.num_blocks();
        for merge in enumerate_partitions(b)? {
            let mut sizes = vec![0usize; merge.num_blocks()];
            for &l in merge.labels() {
                sizes[l as usize] += 1;
            }
            if !fits(&mut sizes, kappa.entries()) {
                continue;
            }
            let labels: Vec<u8> = p.labels().iter().map(|&l| merge.labels()[l as usize]).collect();
            let coarse = Partition::of_slice(&labels)?;
            if !rel.contains_pattern(&coarse) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Every capped profile of length at most k ending in ω.
pub fn capped_profiles(k: usize) -> Vec<KernelTuple> {
    fn rec(k: usize, start: u64, cur: &mut Vec<Entry>, out: &mut Vec<KernelTuple>) {
        for w in 1..=k - cur.len() {
            let mut t = cur.clone();
            t.extend(std::iter::repeat(Entry::Omega).take(w));
            out.push(KernelTuple(t));
        }
        if cur.len() + 1 < k {
            for v in start..k as u64 {
                cur.push(Entry::Fin(v));
                rec(k, v, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(k.max(1), 1, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// The unary part of the polymorphism clone of `rel`.
pub fn monoid_of_relation(rel: &OrbitRelation) -> Result<MonoidDescriptor> {
    let k = rel.arity().max(1);
    let top = KernelTuple(vec![Entry::Omega; k]);
    if unary_preserves(&top, rel)? {
        return Ok(MonoidDescriptor::Top);
    }
    let mut good = Vec::new();
    for t in capped_profiles(k) {
        if unary_preserves(&t, rel)? {
            good.push(t);
        }
    }
    Ok(MonoidDescriptor::Antichain(antichain_reduce(good)))
}
