//! Decision procedures for equality constraint languages.
//!
//! Relations over a countably infinite set that are invariant under all
//! permutations are stored as finite sets of equality patterns. Operations
//! are finitely presented decision lists. On top of these the crate decides
//! preservation, computes unary polymorphism monoids, classifies languages in
//! the lattice of local clones above the permutations, and solves the
//! associated constraint satisfaction problems.

pub mod caps;
pub mod classify;
pub mod continuum;
pub mod eqcore;
pub mod eqcsp;
pub mod eqformula;
pub mod lang;
mod error;
pub mod patops;
pub mod preserve;
pub mod unilattice;

pub use caps::Caps;
pub use error::{Error, Result};

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
