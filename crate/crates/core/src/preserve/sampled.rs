use std::collections::HashMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{replay_witness, SampledVerdict};
use crate::eqcore::{OrbitRelation, Partition};
use crate::error::{Error, Result};
use crate::patops::{ArgPattern, OutputSpec, PatternOperation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleConfig {
    pub samples: u64,
    pub seed: u64,
    /// Values are drawn from `0..pool`; defaults to four times the relation arity.
    pub pool: Option<usize>,
}

impl SampleConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        SampleConfig { samples, seed, pool: None }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Argument tuples of one sample, generated on first use from a seed
/// derived from (seed, sample, argument), so results do not depend on
/// evaluation order.
struct LazyArgs<'a> {
    orbits: &'a [Partition],
    pool: usize,
    base: u64,
    rows: HashMap<usize, Vec<u64>>,
}

impl LazyArgs<'_> {
    fn get(&mut self, arg: usize, t: usize) -> u64 {
        if let Some(r) = self.rows.get(&arg) {
            return r[t];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(self.base ^ splitmix(arg as u64)));
        let p = &self.orbits[rng.gen_range(0..self.orbits.len())];
        let vals = sample(&mut rng, self.pool, p.num_blocks());
        let row: Vec<u64> = p.labels().iter().map(|&l| vals.index(l as usize) as u64).collect();
        let v = row[t];
        self.rows.insert(arg, row);
        v
    }
}

/// Tests `samples` random choices of input tuples; deterministic in `seed`.
pub fn preserves_sampled(op: &PatternOperation, rel: &OrbitRelation, cfg: &SampleConfig) -> Result<SampledVerdict> {
    if cfg.samples == 0 {
        return Err(Error::invalid("at least one sample is required"));
    }
    let k = rel.arity();
    let pool = cfg.pool.unwrap_or(4 * k);
    let orbits: Vec<Partition> = rel.orbits().iter().cloned().collect();
    if orbits.is_empty() {
        return Ok(SampledVerdict::NoCounterexampleFound { samples: cfg.samples, seed: cfg.seed });
    }
    let widest = orbits.iter().map(|p| p.num_blocks()).max().unwrap_or(0);
    if pool < widest {
        return Err(Error::invalid(format!("value pool of size {pool} cannot instantiate an orbit with {widest} blocks")));
    }
    let n = op.arity();
    let rules = op.rules();
    let tests: Vec<Vec<(usize, &ArgPattern)>> = rules
        .iter()
        .map(|r| r.patterns.iter().enumerate().filter(|(_, p)| **p != ArgPattern::Any).collect())
        .collect();
    for s in 0..cfg.samples {
        let mut args = LazyArgs {
            orbits: &orbits,
            pool,
            base: splitmix(splitmix(cfg.seed) ^ s),
            rows: HashMap::new(),
        };
        let fired: Vec<usize> = (0..k)
            .map(|t| {
                tests
                    .iter()
                    .position(|r| r.iter().all(|&(j, p)| p.matches(&args.get(j, t))))
                    .expect("the last rule matches everything")
            })
            .collect();
        let mut eq = |a: usize, b: usize| -> bool {
            match (&rules[fired[a]].output, &rules[fired[b]].output) {
                (OutputSpec::Const(x), OutputSpec::Const(y)) => x == y,
                (OutputSpec::Fresh { key, .. }, OutputSpec::Fresh { .. }) if fired[a] == fired[b] => {
                    key.iter().all(|&p| args.get(p, a) == args.get(p, b))
                }
                _ => false,
            }
        };
        let mut labels = vec![0u8; k];
        let mut next = 0u8;
        for t in 0..k {
            labels[t] = match (0..t).find(|&u| eq(u, t)) {
                Some(u) => labels[u],
                None => {
                    next += 1;
                    next - 1
                }
            };
        }
        let pattern = Partition::from_labels(labels)?;
        if !rel.contains_pattern(&pattern) {
            let inputs: Vec<Vec<u64>> = (0..n)
                .map(|j| {
                    args.get(j, 0);
                    args.rows[&j].clone()
                })
                .collect();
            let witness = replay_witness(op, rel, &inputs)?;
            return Ok(SampledVerdict::Violates { witness, sample: s, seed: cfg.seed });
        }
    }
    Ok(SampledVerdict::NoCounterexampleFound { samples: cfg.samples, seed: cfg.seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqcore::builtin_relation;
    use crate::patops::builtin_operation;

    #[test]
    fn finds_richard_violation() {
        let v = preserves_sampled(
            &builtin_operation("richard").unwrap(),
            &builtin_relation("odd3").unwrap(),
            &SampleConfig::new(2000, 7),
        )
        .unwrap();
        assert!(v.is_violation());
    }

    #[test]
    fn deterministic_and_sound() {
        let op = builtin_operation("f3").unwrap();
        let rel = builtin_relation("odd3").unwrap();
        let a = preserves_sampled(&op, &rel, &SampleConfig::new(500, 3)).unwrap();
        assert_eq!(a, SampledVerdict::NoCounterexampleFound { samples: 500, seed: 3 });
        let op = builtin_operation("richard").unwrap();
        let x = preserves_sampled(&op, &rel, &SampleConfig::new(2000, 11)).unwrap();
        let y = preserves_sampled(&op, &rel, &SampleConfig::new(2000, 11)).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn pool_must_fit() {
        let cfg = SampleConfig { samples: 1, seed: 0, pool: Some(2) };
        let e = preserves_sampled(&builtin_operation("f3").unwrap(), &builtin_relation("odd3").unwrap(), &cfg);
        assert!(matches!(e, Err(Error::Invalid(_))));
    }
}
