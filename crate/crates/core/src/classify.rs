//! Locating a finite equality language in the lattice of local clones
//! containing the permutations.
//!
//! The unary part of the polymorphism clone is computed exactly. When it
//! consists of injections (possibly with constants), membership of the
//! landmark clones is decided by one canonical witness operation each and
//! cross-checked against the matching syntactic normal form; the two routes
//! must agree. Larger monoids fall into a chain indexed by the range bound.

use serde::Serialize;

use crate::caps::DEFAULT_BUDGET;
use crate::eqcore::OrbitRelation;
use crate::eqformula::{
    cnf_to_relation, connected_horn_closure, expand_horn, is_connected_extended_horn, is_horn, is_negative,
    reduced_definition, ExtendedHornFormula,
};
use crate::error::{Error, Result};
use crate::patops::{builtin_operation, BuiltinOperation, PatternOperation};
use crate::preserve::{preserves_exact_with, preserves_sampled, ExactConfig, PreservationVerdict, SampleConfig, Witness};
use crate::unilattice::{monoid_meet, monoid_of_relation, Entry, MonoidDescriptor};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifyConfig {
    pub budget: u64,
    /// Largest k for which `f_k` is tried when locating the language below the bar clone.
    pub rchain_max_k: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig { budget: DEFAULT_BUDGET, rchain_max_k: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IIFlags {
    pub above_h: bool,
    pub above_b: bool,
    /// `f_3` is a polymorphism: the odd clone S is contained in Pol(Γ).
    pub contains_s: bool,
    /// Pol(Γ) is contained in S. Every clone of the interval is either
    /// contained in S or contains R, and not both, so this is `!above_r`.
    pub inside_s: bool,
    pub above_r: bool,
    /// Least k such that `f_k` preserves the language, among those tried.
    pub rchain_level: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum IntervalCase {
    /// Unary part beyond injections and constants. `k` is the largest r such
    /// that every unary operation with at most r values is a polymorphism,
    /// `None` when all unary operations are.
    Chain { k: Option<usize>, level: String },
    /// Unary part consisting of the injections, possibly with the constants.
    Injective { flags: IIFlags },
    Singleton,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Evidence {
    pub claim: String,
    /// Index of the relation in the language, if the claim is per relation.
    pub relation: Option<usize>,
    pub operation: Option<String>,
    pub holds: bool,
    /// Outcome of the syntactic route, when one exists.
    pub certificate: Option<bool>,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClonePosition {
    /// Short name of the position, e.g. `H`, `S+` or `K_3`.
    pub position: String,
    pub monoid: MonoidDescriptor,
    pub interval: IntervalCase,
    pub evidence: Vec<Evidence>,
}

fn op(name: &str) -> PatternOperation {
    builtin_operation(name).expect("builtin name")
}

fn exact(o: &PatternOperation, rel: &OrbitRelation, budget: u64) -> Result<PreservationVerdict> {
    preserves_exact_with(o, rel, &ExactConfig { budget, targets: None })
}

/// Preservation of every relation, stopping at the first violation.
fn all_preserve(o: &PatternOperation, gamma: &[OrbitRelation], budget: u64) -> Result<(bool, Option<Witness>)> {
    for r in gamma {
        if let PreservationVerdict::Violates { witness } = exact(o, r, budget)? {
            return Ok((false, Some(witness)));
        }
    }
    Ok((true, None))
}

/// Unary part of the polymorphism clone of Γ.
pub fn language_monoid(gamma: &[OrbitRelation]) -> Result<MonoidDescriptor> {
    let mut m = MonoidDescriptor::Top;
    for r in gamma {
        m = monoid_meet(&m, &monoid_of_relation(r)?)?;
    }
    Ok(m)
}

struct Certificates {
    horn: bool,
    negative: bool,
    connected_extended: bool,
    connected: bool,
}

fn certificates(rel: &OrbitRelation) -> Result<Certificates> {
    let red = reduced_definition(rel)?;
    let horn = is_horn(&red);
    let connected_extended = horn && is_connected_extended_horn(&expand_horn(&ExtendedHornFormula::from_horn(&red)?)?);
    let connected = cnf_to_relation(&connected_horn_closure(rel)?)? == *rel;
    Ok(Certificates { horn, negative: is_negative(&red), connected_extended, connected })
}

fn mismatch(claim: &str, i: usize, rel: &OrbitRelation, op: bool, syn: bool) -> Error {
    Error::Internal(format!(
        "{claim} for relation {i} ({}): witness operation says {op}, normal form says {syn}",
        rel.to_literal()
    ))
}

fn classify_ii(gamma: &[OrbitRelation], cfg: &ClassifyConfig, evidence: &mut Vec<Evidence>) -> Result<IIFlags> {
    let inj = op("inj(2)");
    let bar = op("bar(1)");
    let f3 = op("f3");
    let richard = op("richard");
    let mut flags =
        IIFlags { above_h: true, above_b: true, contains_s: true, inside_s: false, above_r: true, rchain_level: None };
    for (i, rel) in gamma.iter().enumerate() {
        let cert = certificates(rel)?;
        let checks: [(&str, &PatternOperation, bool); 4] = [
            ("preserved by a binary injection; reduced definition is Horn", &inj, cert.horn),
            ("preserved by bar(1); expanded definition is connected extended Horn", &bar, cert.connected_extended),
            ("preserved by f(3); definable by connected Horn clauses", &f3, cert.connected),
            ("preserved by richard; reduced definition is negative", &richard, cert.negative),
        ];
        let mut verdicts = [false; 4];
        for (slot, (claim, o, syn)) in checks.iter().enumerate() {
            let v = exact(o, rel, cfg.budget)?;
            let mut holds = v.preserves();
            if slot == 3 {
                holds = holds && verdicts[0];
            }
            verdicts[slot] = holds;
            if holds != *syn {
                return Err(mismatch(claim, i, rel, holds, *syn));
            }
            evidence.push(Evidence {
                claim: claim.to_string(),
                relation: Some(i),
                operation: Some(o.name.clone()),
                holds,
                certificate: Some(*syn),
                witness: v.witness().cloned(),
            });
        }
        flags.above_h &= verdicts[0];
        flags.above_b &= verdicts[1];
        flags.contains_s &= verdicts[2];
        flags.above_r &= verdicts[3];
    }
    flags.inside_s = !flags.above_r;
    // H ⊆ B, B ⊆ S and B ⊆ R.
    if flags.above_b && !flags.above_h {
        return Err(Error::Internal("bar clone contained without the Horn clone".into()));
    }
    if (flags.contains_s || flags.above_r) && !flags.above_b {
        return Err(Error::Internal("S or R contained without the bar clone".into()));
    }
    if flags.above_b {
        if flags.contains_s {
            flags.rchain_level = Some(3);
        } else {
            for k in 4..=cfg.rchain_max_k {
                let (ok, _) = all_preserve(&BuiltinOperation::F(k).build()?, gamma, cfg.budget)?;
                if ok {
                    flags.rchain_level = Some(k);
                    break;
                }
            }
        }
    }
    Ok(flags)
}

/// Largest r such that every unary operation with at most r values is in `m`.
fn range_bound(m: &MonoidDescriptor) -> Option<usize> {
    m.generators().map(|g| {
        g.iter().map(|t| t.entries().iter().filter(|&&e| e == Entry::Omega).count()).max().unwrap_or(0)
    })
}

fn classify_chain(
    gamma: &[OrbitRelation],
    k: Option<usize>,
    cfg: &ClassifyConfig,
    evidence: &mut Vec<Evidence>,
) -> Result<String> {
    let max_arity = gamma.iter().map(|r| r.arity()).max().unwrap_or(1);
    let top_r = k.unwrap_or(max_arity);
    let mut witnesses: Vec<(String, PatternOperation)> = vec![("Q".into(), op("qxor"))];
    for r in 2..=top_r as u64 {
        witnesses.push((format!("K_{}", r + 1), BuiltinOperation::EssentialFinite(r).build()?));
    }
    let mut level = "unary".to_string();
    let mut failed = false;
    for (name, o) in witnesses {
        let (ok, witness) = all_preserve(&o, gamma, cfg.budget)?;
        evidence.push(Evidence {
            claim: format!("{name} contained"),
            relation: None,
            operation: Some(o.name.clone()),
            holds: ok,
            certificate: None,
            witness,
        });
        if ok && failed {
            return Err(Error::Internal(format!("{name} contained although a smaller level is not")));
        }
        if ok {
            level = name;
        } else {
            failed = true;
        }
    }
    if k.is_none() && !failed && max_arity >= 2 {
        // Operations of range at most the arity agree locally with every operation.
        level = "O".to_string();
    }
    if k.is_none() && max_arity < 2 {
        level = "O".to_string();
    }
    Ok(level)
}

fn position_label(monoid: &MonoidDescriptor, interval: &IntervalCase) -> String {
    match interval {
        IntervalCase::Singleton => "all operations with at most one value in their unary part".into(),
        IntervalCase::Chain { level, .. } => level.clone(),
        IntervalCase::Injective { flags } => {
            let plus = if monoid.is_injections_and_constants() { "+" } else { "" };
            if flags.above_r && flags.contains_s {
                format!("contains R{plus} and S{plus}")
            } else if flags.above_r {
                format!("contains R{plus}")
            } else if flags.contains_s {
                format!("S{plus}")
            } else if flags.above_b {
                match flags.rchain_level {
                    Some(k) => format!("contains B{plus} and f_{k}, not S{plus}"),
                    None => format!("contains B{plus}, not S{plus}"),
                }
            } else if flags.above_h {
                format!("H{plus}")
            } else {
                format!("does not contain H{plus}")
            }
        }
    }
}

pub fn classify_language(gamma: &[OrbitRelation], cfg: &ClassifyConfig) -> Result<ClonePosition> {
    let monoid = language_monoid(gamma)?;
    let mut evidence = Vec::new();
    let interval = if monoid.is_injections() || monoid.is_injections_and_constants() {
        IntervalCase::Injective { flags: classify_ii(gamma, cfg, &mut evidence)? }
    } else {
        let k = range_bound(&monoid);
        if k == Some(1) {
            IntervalCase::Singleton
        } else {
            let level = classify_chain(gamma, k, cfg, &mut evidence)?;
            IntervalCase::Chain { k, level }
        }
    };
    let position = position_label(&monoid, &interval);
    Ok(ClonePosition { position, monoid, interval, evidence })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RChainVerdict {
    Preserves,
    Violates,
    /// Sampled only; not conclusive.
    NoCounterexampleFound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RChainEntry {
    pub k: usize,
    pub verdict: RChainVerdict,
}

/// Sample count and seed used above the exact range.
pub const RCHAIN_SAMPLES: u64 = 10_000;
pub const RCHAIN_SEED: u64 = 42;

/// For k = 3..=max_k, whether `f_k` preserves every relation of Γ. Exact for
/// k ≤ 4, sampled above.
pub fn rchain_profile(gamma: &[OrbitRelation], max_k: usize, budget: u64) -> Result<Vec<RChainEntry>> {
    let mut out = Vec::new();
    for k in 3..=max_k {
        let f = BuiltinOperation::F(k).build()?;
        let verdict = if k <= 4 {
            if all_preserve(&f, gamma, budget)?.0 {
                RChainVerdict::Preserves
            } else {
                RChainVerdict::Violates
            }
        } else {
            let mut v = RChainVerdict::NoCounterexampleFound;
            for r in gamma {
                if preserves_sampled(&f, r, &SampleConfig::new(RCHAIN_SAMPLES, RCHAIN_SEED))?.is_violation() {
                    v = RChainVerdict::Violates;
                    break;
                }
            }
            v
        };
        out.push(RChainEntry { k, verdict });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TractableReason {
    Constant,
    BinaryInjection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum CspVerdict {
    PolynomialTime { reason: TractableReason },
    NpComplete,
}

/// A binary injection is reported in preference to a constant when both are polymorphisms.
pub fn csp_verdict(gamma: &[OrbitRelation], budget: u64) -> Result<CspVerdict> {
    if all_preserve(&op("inj(2)"), gamma, budget)?.0 {
        return Ok(CspVerdict::PolynomialTime { reason: TractableReason::BinaryInjection });
    }
    if gamma.iter().all(|r| r.has_constant_orbit()) {
        return Ok(CspVerdict::PolynomialTime { reason: TractableReason::Constant });
    }
    Ok(CspVerdict::NpComplete)
}
