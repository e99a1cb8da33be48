use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::partition::{partitions, pattern_of, Partition};
use crate::error::{Error, Result};

/// A permutation-invariant relation, stored as its set of orbits.
#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct OrbitRelation {
    arity: usize,
    orbits: BTreeSet<Partition>,
}

impl OrbitRelation {
    pub fn new(arity: usize, orbits: impl IntoIterator<Item = Partition>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::Arity("relations must have positive arity".into()));
        }
        let orbits: BTreeSet<Partition> = orbits.into_iter().collect();
        if let Some(p) = orbits.iter().find(|p| p.arity() != arity) {
            return Err(Error::Arity(format!("orbit {p} does not have arity {arity}")));
        }
        Ok(OrbitRelation { arity, orbits })
    }

    /// The relation of all patterns satisfying `pred`.
    pub fn from_predicate(arity: usize, pred: impl Fn(&Partition) -> bool) -> Result<Self> {
        let all = partitions(arity)?;
        Ok(OrbitRelation { arity, orbits: all.iter().filter(|p| pred(p)).cloned().collect() })
    }

    /// Every tuple of the given arity.
    pub fn full(arity: usize) -> Result<Self> {
        Self::from_predicate(arity, |_| true)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn orbits(&self) -> &BTreeSet<Partition> {
        &self.orbits
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn contains_pattern(&self, p: &Partition) -> bool {
        self.orbits.contains(p)
    }

    /// True iff the all-equal orbit is a member.
    pub fn has_constant_orbit(&self) -> bool {
        self.orbits.iter().next().is_some_and(|p| p.is_all_equal())
    }

    pub fn is_subset(&self, other: &OrbitRelation) -> bool {
        self.arity == other.arity && self.orbits.is_subset(&other.orbits)
    }

    /// Patterns of the same arity that are not members.
    pub fn complement(&self) -> Result<OrbitRelation> {
        Self::from_predicate(self.arity, |p| !self.orbits.contains(p))
    }

    /// The literal form `orbits { [1,1,1], [1,2,3] }`.
    pub fn to_literal(&self) -> String {
        if self.orbits.is_empty() {
            return format!("orbits/{} {{ }}", self.arity);
        }
        let parts: Vec<String> = self.orbits.iter().map(|p| p.to_literal()).collect();
        format!("orbits {{ {} }}", parts.join(", "))
    }

    /// Parses the literal form; an empty set needs the arity suffix `orbits/3 { }`.
    pub fn parse_literal(text: &str) -> Result<OrbitRelation> {
        let mut p = LiteralParser { s: text.as_bytes(), pos: 0 };
        let rel = p.relation()?;
        p.ws();
        if p.pos != p.s.len() {
            return Err(Error::syntax(p.pos, "trailing input after orbit literal"));
        }
        Ok(rel)
    }
}

impl fmt::Debug for OrbitRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OrbitRelation/{} {}", self.arity, self.to_literal())
    }
}

/// True iff the pattern of `tuple` is an orbit of `rel`.
pub fn contains(rel: &OrbitRelation, tuple: &[u64]) -> Result<bool> {
    if tuple.len() != rel.arity {
        return Err(Error::Arity(format!(
            "tuple of length {} against relation of arity {}",
            tuple.len(),
            rel.arity
        )));
    }
    Ok(rel.orbits.contains(&pattern_of(tuple)?))
}

pub(crate) struct LiteralParser<'a> {
    pub(crate) s: &'a [u8],
    pub(crate) pos: usize,
}

impl LiteralParser<'_> {
    pub(crate) fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::syntax(self.pos, format!("expected '{}'", c as char)))
        }
    }

    fn number(&mut self) -> Result<u64> {
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::syntax(start, "expected a number"))
    }

    pub(crate) fn partition(&mut self) -> Result<Partition> {
        let start = self.pos;
        self.expect(b'[')?;
        let mut ids = vec![self.number()?];
        while self.eat(b',') {
            ids.push(self.number()?);
        }
        self.expect(b']')?;
        Partition::from_one_based(&ids).map_err(|e| Error::syntax(start, e.to_string()))
    }

    pub(crate) fn relation(&mut self) -> Result<OrbitRelation> {
        self.ws();
        if !self.s[self.pos..].starts_with(b"orbits") {
            return Err(Error::syntax(self.pos, "expected 'orbits'"));
        }
        self.pos += b"orbits".len();
        let mut arity = None;
        if self.eat(b'/') {
            arity = Some(self.number()? as usize);
        }
        self.expect(b'{')?;
        let mut orbits = Vec::new();
        if !self.eat(b'}') {
            loop {
                orbits.push(self.partition()?);
                if self.eat(b'}') {
                    break;
                }
                self.expect(b',')?;
            }
        }
        let arity = match (arity, orbits.first()) {
            (Some(a), _) => a,
            (None, Some(p)) => p.arity(),
            (None, None) => {
                return Err(Error::syntax(self.pos, "empty orbit set needs an explicit arity"))
            }
        };
        OrbitRelation::new(arity, orbits).map_err(|e| Error::syntax(self.pos, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_round_trip() {
        let r = OrbitRelation::parse_literal("orbits { [1,1,1], [1,2,3] }").unwrap();
        assert_eq!(r.arity(), 3);
        assert_eq!(r.len(), 2);
        assert_eq!(OrbitRelation::parse_literal(&r.to_literal()).unwrap(), r);
        let e = OrbitRelation::parse_literal("orbits/2 { }").unwrap();
        assert!(e.is_empty());
        assert_eq!(OrbitRelation::parse_literal(&e.to_literal()).unwrap(), e);
    }

    #[test]
    fn literal_errors() {
        assert!(OrbitRelation::parse_literal("orbits { [1,2], [1] }").is_err());
        assert!(OrbitRelation::parse_literal("orbits { [2,1] }").is_err());
        assert!(OrbitRelation::parse_literal("orbits { }").is_err());
        assert!(OrbitRelation::parse_literal("orbits { [1] } x").is_err());
    }

    #[test]
    fn contains_checks_arity() {
        let r = OrbitRelation::parse_literal("orbits { [1,2] }").unwrap();
        assert!(!contains(&r, &[0, 0]).unwrap());
        assert!(contains(&r, &[0, 3]).unwrap());
        assert!(contains(&r, &[0]).is_err());
    }
}
