//! Equality patterns (orbits of tuples under all permutations of ℕ) and
//! relations given as finite sets of patterns.

mod builtins;
mod partition;
mod relation;

pub use builtins::{builtin_relation, BuiltinRelation};
pub use partition::{bell, enumerate_partitions, enumerate_partitions_capped, partitions, pattern_of, Partition};
pub use relation::{contains, OrbitRelation};
