use std::fmt;
use std::str::FromStr;

use super::partition::Partition;
use super::relation::OrbitRelation;
use crate::caps::partition_cap;
use crate::error::{Error, Result};

/// The named relations. Pair relations use the column order `(x1,y1,…,xn,yn)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinRelation {
    /// `x ≠ y`.
    Neq,
    /// `a=b → c=d`.
    I,
    /// `(a=b ≠ c=d)` or all four distinct.
    N,
    /// All equal or pairwise distinct.
    Odd3,
    /// Some `xi ≠ yi`.
    R(usize),
    /// `R(n)` or all entries equal.
    RUnder(usize),
    /// `R(n)` with `xi ≠ xj`, `yi ≠ yj`, `xi ≠ yj` for all `i ≠ j`.
    RNeq(usize),
}

impl BuiltinRelation {
    pub fn arity(&self) -> usize {
        match self {
            BuiltinRelation::Neq => 2,
            BuiltinRelation::Odd3 => 3,
            BuiltinRelation::I | BuiltinRelation::N => 4,
            BuiltinRelation::R(n) | BuiltinRelation::RUnder(n) | BuiltinRelation::RNeq(n) => 2 * n,
        }
    }

    fn holds(&self, p: &Partition) -> bool {
        let e = |i: usize, j: usize| p.same(i, j);
        match *self {
            BuiltinRelation::Neq => !e(0, 1),
            BuiltinRelation::I => !e(0, 1) || e(2, 3),
            BuiltinRelation::N => (e(0, 1) && e(2, 3) && !e(1, 2)) || p.is_all_distinct(),
            BuiltinRelation::Odd3 => p.is_all_equal() || p.is_all_distinct(),
            BuiltinRelation::R(n) => pairs_differ(p, n),
            BuiltinRelation::RUnder(n) => pairs_differ(p, n) || p.is_all_equal(),
            BuiltinRelation::RNeq(n) => {
                pairs_differ(p, n)
                    && (0..n).all(|i| {
                        (0..n).filter(|&j| j != i).all(|j| {
                            !e(2 * i, 2 * j + 1) && !e(2 * i, 2 * j) && !e(2 * i + 1, 2 * j + 1)
                        })
                    })
            }
        }
    }

    /// Orbit set of the defining formula, evaluated over every pattern.
    pub fn relation(&self) -> Result<OrbitRelation> {
        if let BuiltinRelation::R(n) | BuiltinRelation::RUnder(n) | BuiltinRelation::RNeq(n) = *self {
            if n < 2 {
                return Err(Error::invalid(format!("{self}: n must be at least 2")));
            }
            let cap = partition_cap();
            if 2 * n > cap {
                return Err(Error::resource(format!("{self} needs arity {}", 2 * n), cap as u64));
            }
        }
        OrbitRelation::from_predicate(self.arity(), |p| self.holds(p))
    }
}

fn pairs_differ(p: &Partition, n: usize) -> bool {
    (0..n).any(|i| !p.same(2 * i, 2 * i + 1))
}

impl fmt::Display for BuiltinRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinRelation::Neq => f.write_str("neq"),
            BuiltinRelation::I => f.write_str("I"),
            BuiltinRelation::N => f.write_str("N"),
            BuiltinRelation::Odd3 => f.write_str("odd3"),
            BuiltinRelation::R(n) => write!(f, "R({n})"),
            BuiltinRelation::RUnder(n) => write!(f, "Runder({n})"),
            BuiltinRelation::RNeq(n) => write!(f, "Rneq({n})"),
        }
    }
}

impl FromStr for BuiltinRelation {
    type Err = Error;

    /// Accepts `neq`, `I`, `N`, `odd3`, `R(n)`, `Runder(n)`, `Rneq(n)`, case-insensitively;
    /// the parentheses may be omitted (`R3`).
    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        let param = |head: &str| -> Option<usize> {
            let rest = t.strip_prefix(head)?;
            let rest = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(rest);
            rest.parse().ok()
        };
        let b = match t.as_str() {
            "neq" | "!=" => BuiltinRelation::Neq,
            "i" => BuiltinRelation::I,
            "n" => BuiltinRelation::N,
            "odd3" => BuiltinRelation::Odd3,
            _ => {
                if let Some(n) = param("runder") {
                    BuiltinRelation::RUnder(n)
                } else if let Some(n) = param("rneq") {
                    BuiltinRelation::RNeq(n)
                } else if let Some(n) = param("r") {
                    BuiltinRelation::R(n)
                } else {
                    return Err(Error::Unknown(format!("builtin relation '{s}'")));
                }
            }
        };
        Ok(b)
    }
}

/// Looks up a named relation, e.g. `builtin_relation("Runder(2)")`.
pub fn builtin_relation(name: &str) -> Result<OrbitRelation> {
    name.parse::<BuiltinRelation>()?.relation()
}
