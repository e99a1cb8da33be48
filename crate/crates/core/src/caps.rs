//! Resource caps shared by the enumeration-based procedures.

use serde::Serialize;

/// Default largest arity for exhaustive partition enumeration.
pub const DEFAULT_PARTITION_CAP: usize = 10;
/// Default node budget of the exact preservation search.
pub const DEFAULT_BUDGET: u64 = 100_000_000;
/// Environment variable overriding [`DEFAULT_PARTITION_CAP`].
pub const PARTITION_CAP_ENV: &str = "EQ_PARTITION_CAP";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Caps {
    pub partition_cap: usize,
    pub budget: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { partition_cap: DEFAULT_PARTITION_CAP, budget: DEFAULT_BUDGET }
    }
}

impl Caps {
    /// Defaults, with the partition cap taken from `EQ_PARTITION_CAP` when set and valid.
    pub fn from_env() -> Self {
        let mut caps = Caps::default();
        if let Ok(v) = std::env::var(PARTITION_CAP_ENV) {
            if let Ok(n) = v.trim().parse::<usize>() {
                if n >= 1 {
                    caps.partition_cap = n;
                }
            }
        }
        caps
    }
}

static GLOBAL_PARTITION_CAP: std::sync::OnceLock<usize> = std::sync::OnceLock::new();

/// Process-wide partition cap, read once from the environment.
pub fn partition_cap() -> usize {
    *GLOBAL_PARTITION_CAP.get_or_init(|| Caps::from_env().partition_cap)
}
