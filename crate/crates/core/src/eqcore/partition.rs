use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Serialize, Serializer};

use crate::caps::partition_cap;
use crate::error::{Error, Result};

/// Largest supported tuple length.
pub const MAX_ARITY: usize = 255;

/// An equality pattern in restricted-growth form: `labels[0] = 0` and every
/// label is at most one more than the largest label before it.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    labels: Vec<u8>,
}

impl Partition {
    /// Validates a restricted-growth label sequence.
    pub fn from_labels(labels: Vec<u8>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Arity("empty label sequence".into()));
        }
        if labels.len() > MAX_ARITY {
            return Err(Error::Arity(format!("arity {} exceeds {MAX_ARITY}", labels.len())));
        }
        let mut next = 0u8;
        for (i, &l) in labels.iter().enumerate() {
            if l > next {
                return Err(Error::invalid(format!(
                    "label {l} at position {i} breaks restricted growth"
                )));
            }
            if l == next {
                next += 1;
            }
        }
        Ok(Partition { labels })
    }

    /// Pattern of an arbitrary sequence under a given equality.
    pub fn of_slice<T: Eq + Hash>(tuple: &[T]) -> Result<Self> {
        if tuple.is_empty() {
            return Err(Error::Arity("empty tuple".into()));
        }
        if tuple.len() > MAX_ARITY {
            return Err(Error::Arity(format!("arity {} exceeds {MAX_ARITY}", tuple.len())));
        }
        let mut seen: HashMap<&T, u8> = HashMap::with_capacity(tuple.len());
        let labels = tuple
            .iter()
            .map(|v| {
                let n = seen.len() as u8;
                *seen.entry(v).or_insert(n)
            })
            .collect();
        Ok(Partition { labels })
    }

    /// Parses 1-based block ids, e.g. `[1,1,2]`.
    pub fn from_one_based(ids: &[u64]) -> Result<Self> {
        if ids.iter().any(|&i| i == 0) {
            return Err(Error::invalid("orbit literal block ids are 1-based"));
        }
        let p = Partition::of_slice(ids)?;
        let zero: Vec<u64> = ids.iter().map(|&i| i - 1).collect();
        if p.labels.iter().zip(&zero).any(|(&a, &b)| a as u64 != b) {
            return Err(Error::invalid(format!(
                "orbit literal {ids:?} is not in restricted-growth form"
            )));
        }
        Ok(p)
    }

    pub fn arity(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn num_blocks(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| m as usize + 1)
    }

    /// True iff positions `i` and `j` lie in the same block.
    pub fn same(&self, i: usize, j: usize) -> bool {
        self.labels[i] == self.labels[j]
    }

    /// Positions grouped by block, blocks in label order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i);
        }
        out
    }

    /// Pattern of the sub-tuple at `positions` (repetitions allowed).
    pub fn restrict(&self, positions: &[usize]) -> Partition {
        let sub: Vec<u8> = positions.iter().map(|&p| self.labels[p]).collect();
        Partition::of_slice(&sub).expect("restriction of a nonempty position list")
    }

    /// True iff every position is in a single block.
    pub fn is_all_equal(&self) -> bool {
        self.labels.iter().all(|&l| l == 0)
    }

    /// True iff all positions are in distinct blocks.
    pub fn is_all_distinct(&self) -> bool {
        self.num_blocks() == self.arity()
    }

    /// The 1-based orbit literal, e.g. `[1,1,2]`.
    pub fn to_literal(&self) -> String {
        let parts: Vec<String> = self.labels.iter().map(|l| (l + 1).to_string()).collect();
        format!("[{}]", parts.join(","))
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Partition{:?}", self.labels)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_literal())
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_literal())
    }
}

/// Equality pattern of a tuple of naturals.
pub fn pattern_of(tuple: &[u64]) -> Result<Partition> {
    Partition::of_slice(tuple)
}

/// Bell number `B(k)`, saturating at `u64::MAX`.
pub fn bell(k: usize) -> u64 {
    let mut row: Vec<u64> = vec![1];
    for _ in 0..k {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &r in &row {
            let last = *next.last().unwrap();
            next.push(last.saturating_add(r));
        }
        row = next;
    }
    row[0]
}

/// All restricted-growth sequences of length `k` in lexicographic order,
/// subject to the process-wide partition cap.
pub fn enumerate_partitions(k: usize) -> Result<Vec<Partition>> {
    enumerate_partitions_capped(k, partition_cap())
}

/// As [`enumerate_partitions`] with an explicit cap.
pub fn enumerate_partitions_capped(k: usize, cap: usize) -> Result<Vec<Partition>> {
    if k == 0 {
        return Err(Error::Arity("partitions of an empty position set".into()));
    }
    if k > cap || k > MAX_ARITY {
        return Err(Error::resource(format!("partition enumeration of arity {k}"), cap as u64));
    }
    let mut out = Vec::with_capacity(bell(k).min(1 << 24) as usize);
    let mut labels = vec![0u8; k];
    let mut maxes = vec![0u8; k];
    loop {
        out.push(Partition { labels: labels.clone() });
        // Advance to the lexicographic successor.
        let mut i = k - 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            if labels[i] <= maxes[i - 1] {
                labels[i] += 1;
                maxes[i] = maxes[i - 1].max(labels[i]);
                for j in i + 1..k {
                    labels[j] = 0;
                    maxes[j] = maxes[i];
                }
                break;
            }
            i -= 1;
        }
    }
}

type Cache = Mutex<HashMap<usize, Arc<[Partition]>>>;

/// Cached, shared copy of [`enumerate_partitions`].
pub fn partitions(k: usize) -> Result<Arc<[Partition]>> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&k) {
        return Ok(v.clone());
    }
    let v: Arc<[Partition]> = enumerate_partitions(k)?.into();
    cache.lock().unwrap().insert(k, v.clone());
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent count of equivalence relations via Stirling numbers of the second kind.
    fn stirling_bell(n: usize) -> u64 {
        let mut s = vec![vec![0u64; n + 1]; n + 1];
        s[0][0] = 1;
        for i in 1..=n {
            for j in 1..=i {
                s[i][j] = j as u64 * s[i - 1][j] + s[i - 1][j - 1];
            }
        }
        s[n].iter().sum()
    }

    #[test]
    fn pattern_examples() {
        assert_eq!(pattern_of(&[5, 5, 7]).unwrap().labels(), &[0, 0, 1]);
        assert_eq!(pattern_of(&[3, 1, 3, 2]).unwrap().labels(), &[0, 1, 0, 2]);
        assert_eq!(pattern_of(&[9]).unwrap().labels(), &[0]);
        assert!(matches!(pattern_of(&[]), Err(Error::Arity(_))));
    }

    #[test]
    fn enumeration_counts_match_stirling_sums() {
        for k in 1..=8 {
            let ps = enumerate_partitions_capped(k, 10).unwrap();
            assert_eq!(ps.len() as u64, stirling_bell(k), "k={k}");
            assert_eq!(bell(k), stirling_bell(k));
            assert!(ps.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(enumerate_partitions_capped(3, 10).unwrap().len(), 5);
        assert_eq!(enumerate_partitions_capped(4, 10).unwrap().len(), 15);
        assert_eq!(bell(10), 115975);
    }

    #[test]
    fn cap_is_enforced() {
        let err = enumerate_partitions_capped(5, 4).unwrap_err();
        assert_eq!(err, Error::Resource { what: "partition enumeration of arity 5".into(), cap: 4 });
    }

    #[test]
    fn restricted_growth_validation() {
        assert!(Partition::from_labels(vec![0, 1, 0, 2]).is_ok());
        assert!(Partition::from_labels(vec![1]).is_err());
        assert!(Partition::from_labels(vec![0, 2]).is_err());
        assert_eq!(Partition::from_one_based(&[1, 1, 2]).unwrap().labels(), &[0, 0, 1]);
        assert!(Partition::from_one_based(&[2, 1]).is_err());
    }

    #[test]
    fn restrict_and_blocks() {
        let p = pattern_of(&[4, 7, 4, 9]).unwrap();
        assert_eq!(p.restrict(&[1, 3]).labels(), &[0, 1]);
        assert_eq!(p.restrict(&[2, 0]).labels(), &[0, 0]);
        assert_eq!(p.blocks(), vec![vec![0, 2], vec![1], vec![3]]);
        assert_eq!(p.to_literal(), "[1,2,1,3]");
    }
}
