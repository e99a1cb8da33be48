//! Preservation of orbit relations by pattern operations.
//!
//! An operation `f` of arity n preserves a relation R of arity k when applying
//! `f` componentwise to any n tuples of R yields a tuple of R. The exact
//! search is complete for the decision-list model; sampling is offered for
//! operations whose arity makes exhaustive search hopeless.

mod exact;
mod sampled;

use serde::Serialize;

use crate::eqcore::{contains, OrbitRelation, Partition};
use crate::error::{Error, Result};
use crate::patops::{ConcreteEvaluator, PatternOperation};

pub use exact::{estimate_exact_cost, preserves_exact, preserves_exact_with, ExactConfig};
pub use sampled::{preserves_sampled, SampleConfig};

/// n concrete input tuples in the relation whose image lies outside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub inputs: Vec<Vec<u64>>,
    pub output: Vec<u64>,
    pub output_pattern: Partition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum PreservationVerdict {
    Preserves,
    Violates { witness: Witness },
}

impl PreservationVerdict {
    pub fn preserves(&self) -> bool {
        matches!(self, PreservationVerdict::Preserves)
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            PreservationVerdict::Preserves => None,
            PreservationVerdict::Violates { witness } => Some(witness),
        }
    }
}

/// Outcome of sampling. Only `Violates` is conclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SampledVerdict {
    NoCounterexampleFound { samples: u64, seed: u64 },
    Violates { witness: Witness, sample: u64, seed: u64 },
}

impl SampledVerdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, SampledVerdict::Violates { .. })
    }
}

/// Arity at which a violating operation must exist if any does: the number of orbits.
pub fn violation_arity_bound(rel: &OrbitRelation) -> usize {
    rel.len()
}

/// Re-evaluates a witness on naturals; errors unless every input is in `rel`
/// and the output is not.
pub fn replay_witness(op: &PatternOperation, rel: &OrbitRelation, inputs: &[Vec<u64>]) -> Result<Witness> {
    if inputs.len() != op.arity() {
        return Err(Error::Arity(format!("{} inputs for an operation of arity {}", inputs.len(), op.arity())));
    }
    for t in inputs {
        if !contains(rel, t)? {
            return Err(Error::Internal(format!("witness input {t:?} is not in the relation")));
        }
    }
    let output = ConcreteEvaluator::new(op).apply(inputs);
    let output_pattern = Partition::of_slice(&output)?;
    if rel.contains_pattern(&output_pattern) {
        return Err(Error::Internal(format!("witness output {output:?} lies in the relation")));
    }
    Ok(Witness { inputs: inputs.to_vec(), output, output_pattern })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqcore::builtin_relation;

    #[test]
    fn arity_bound_examples() {
        assert_eq!(violation_arity_bound(&builtin_relation("N").unwrap()), 2);
        assert_eq!(violation_arity_bound(&builtin_relation("odd3").unwrap()), 2);
        assert_eq!(violation_arity_bound(&builtin_relation("neq").unwrap()), 1);
    }
}
