//! Operations on ℕ presented as total decision lists.
//!
//! Each rule tests every argument against `any`, `in S` or `not in S` and
//! outputs either a constant or a value from a *fresh stream*: an injective
//! function of the arguments at the key positions whose range is disjoint
//! from every constant and every other stream. The first matching rule fires.

mod analysis;
mod builtins;
mod parse;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use smallvec::SmallVec;

use crate::eqcore::Partition;
use crate::error::{Error, Result};

pub use analysis::{binary_bar_membership, dependency_profile, directional_injectivity, is_quasilinear, DependencyProfile};
pub use builtins::{builtin_operation, BuiltinOperation};
pub(crate) use parse::parse_operation_statement;
pub use parse::parse_operation_literal;

/// A finite, sorted set of naturals.
pub type ValueSet = SmallVec<[u64; 2]>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ArgPattern {
    Any,
    In(ValueSet),
    NotIn(ValueSet),
}

impl ArgPattern {
    pub fn in_set(values: impl IntoIterator<Item = u64>) -> ArgPattern {
        let mut v: ValueSet = values.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        ArgPattern::In(v)
    }

    pub fn not_in(values: impl IntoIterator<Item = u64>) -> ArgPattern {
        let mut v: ValueSet = values.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        ArgPattern::NotIn(v)
    }

    pub fn matches<V: ValueLike + ?Sized>(&self, v: &V) -> bool {
        match self {
            ArgPattern::Any => true,
            ArgPattern::In(s) => v.in_set(s),
            ArgPattern::NotIn(s) => !v.in_set(s),
        }
    }

    pub(crate) fn values(&self) -> &[u64] {
        match self {
            ArgPattern::Any => &[],
            ArgPattern::In(s) | ArgPattern::NotIn(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OutputSpec {
    Const(u64),
    /// `key` holds sorted 0-based argument positions.
    Fresh { stream: u32, key: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub patterns: Vec<ArgPattern>,
    pub output: OutputSpec,
}

/// Values that can be tested against argument patterns.
pub trait ValueLike {
    fn in_set(&self, set: &[u64]) -> bool;
}

impl ValueLike for u64 {
    fn in_set(&self, set: &[u64]) -> bool {
        set.binary_search(self).is_ok()
    }
}

/// A named natural or a symbol standing for a value outside every pattern set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SymbolicValue {
    Named(u64),
    Fresh(u32),
}

impl ValueLike for SymbolicValue {
    fn in_set(&self, set: &[u64]) -> bool {
        match self {
            SymbolicValue::Named(v) => v.in_set(set),
            SymbolicValue::Fresh(_) => false,
        }
    }
}

impl fmt::Display for SymbolicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolicValue::Named(v) => write!(f, "{v}"),
            SymbolicValue::Fresh(i) => write!(f, "v{i}"),
        }
    }
}

/// Output of one application. Equal iff same constant, or same stream with equal key values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OutputTerm<V> {
    Const(u64),
    Fresh { stream: u32, key: Vec<V> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PatternOperation {
    pub name: String,
    arity: usize,
    rules: Vec<Rule>,
    /// A catch-all rule was appended by [`PatternOperation::build`].
    pub default_appended: bool,
    /// User-built: interpreted symbolically, realizability not checked.
    pub symbolic_only: bool,
}

impl PatternOperation {
    /// Validates rules. A missing all-`any` last rule is supplied as a fresh
    /// output keyed on every position, and `default_appended` is set.
    pub fn build(name: impl Into<String>, arity: usize, rules: Vec<Rule>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::Arity("operations need at least one argument".into()));
        }
        if rules.is_empty() {
            return Err(Error::invalid("operation without rules"));
        }
        let mut streams = BTreeSet::new();
        let mut rules = rules;
        for (k, r) in rules.iter_mut().enumerate() {
            if r.patterns.len() != arity {
                return Err(Error::Arity(format!(
                    "rule {} has {} patterns, expected {arity}",
                    k + 1,
                    r.patterns.len()
                )));
            }
            for p in r.patterns.iter_mut() {
                match p {
                    ArgPattern::In(s) if s.is_empty() => {
                        return Err(Error::invalid(format!("rule {} tests membership in an empty set", k + 1)))
                    }
                    ArgPattern::NotIn(s) if s.is_empty() => *p = ArgPattern::Any,
                    ArgPattern::In(s) | ArgPattern::NotIn(s) => {
                        s.sort_unstable();
                        s.dedup();
                    }
                    ArgPattern::Any => {}
                }
            }
            if let OutputSpec::Fresh { stream, key } = &mut r.output {
                key.sort_unstable();
                key.dedup();
                if key.is_empty() {
                    return Err(Error::invalid(format!("rule {} has an empty fresh key", k + 1)));
                }
                if key.iter().any(|&p| p >= arity) {
                    return Err(Error::invalid(format!("rule {} has a key position beyond arity {arity}", k + 1)));
                }
                if !streams.insert(*stream) {
                    return Err(Error::invalid(format!("fresh stream {stream} is used by two rules")));
                }
            }
        }
        let total = rules.last().is_some_and(|r| r.patterns.iter().all(|p| *p == ArgPattern::Any));
        let mut default_appended = false;
        if !total {
            let stream = streams.iter().next_back().map_or(0, |s| s + 1);
            rules.push(Rule {
                patterns: vec![ArgPattern::Any; arity],
                output: OutputSpec::Fresh { stream, key: (0..arity).collect() },
            });
            default_appended = true;
        }
        Ok(PatternOperation { name: name.into(), arity, rules, default_appended, symbolic_only: true })
    }

    pub(crate) fn builtin(name: String, arity: usize, rules: Vec<Rule>) -> Self {
        let mut op = PatternOperation::build(name, arity, rules).expect("builtin rules are valid");
        op.symbolic_only = false;
        op
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Values named in `in`/`not in` patterns, sorted.
    pub fn pattern_support(&self) -> Vec<u64> {
        let mut s: BTreeSet<u64> = BTreeSet::new();
        for r in &self.rules {
            for p in &r.patterns {
                s.extend(p.values().iter().copied());
            }
        }
        s.into_iter().collect()
    }

    /// Pattern values together with constant outputs.
    pub fn support(&self) -> Vec<u64> {
        let mut s: BTreeSet<u64> = self.pattern_support().into_iter().collect();
        for r in &self.rules {
            if let OutputSpec::Const(c) = r.output {
                s.insert(c);
            }
        }
        s.into_iter().collect()
    }

    /// Index of the first rule matched by the arguments `get(0..arity)`.
    pub fn first_match<V: ValueLike>(&self, get: impl Fn(usize) -> V) -> usize {
        self.rules
            .iter()
            .position(|r| r.patterns.iter().enumerate().all(|(j, p)| p.matches(&get(j))))
            .expect("the last rule matches everything")
    }

    pub fn eval_term<V: ValueLike + Clone>(&self, args: &[V]) -> OutputTerm<V> {
        let r = &self.rules[self.first_match(|j| args[j].clone())];
        match &r.output {
            OutputSpec::Const(c) => OutputTerm::Const(*c),
            OutputSpec::Fresh { stream, key } => {
                OutputTerm::Fresh { stream: *stream, key: key.iter().map(|&p| args[p].clone()).collect() }
            }
        }
    }
}

/// Applies `op` componentwise: `columns[j]` is the j-th argument tuple and
/// output `t` is computed from `(columns[0][t], …, columns[n-1][t])`.
pub fn apply_symbolic(
    op: &PatternOperation,
    columns: &[Vec<SymbolicValue>],
) -> Result<(Vec<OutputTerm<SymbolicValue>>, Partition)> {
    if columns.len() != op.arity() {
        return Err(Error::Arity(format!("{} argument tuples for an operation of arity {}", columns.len(), op.arity())));
    }
    let m = columns[0].len();
    if columns.iter().any(|c| c.len() != m) {
        return Err(Error::Arity("argument tuples of different lengths".into()));
    }
    let outs: Vec<OutputTerm<SymbolicValue>> = (0..m)
        .map(|t| {
            let row: Vec<SymbolicValue> = columns.iter().map(|c| c[t]).collect();
            op.eval_term(&row)
        })
        .collect();
    let pattern = Partition::of_slice(&outs)?;
    Ok((outs, pattern))
}

/// Evaluates an operation on naturals, realizing each fresh stream by an
/// injective table of unused naturals above every constant output.
pub struct ConcreteEvaluator<'a> {
    op: &'a PatternOperation,
    table: HashMap<(u32, Vec<u64>), u64>,
    next: u64,
}

impl<'a> ConcreteEvaluator<'a> {
    pub fn new(op: &'a PatternOperation) -> Self {
        let next = op.support().last().map_or(0, |m| m + 1);
        ConcreteEvaluator { op, table: HashMap::new(), next }
    }

    pub fn eval(&mut self, args: &[u64]) -> u64 {
        match self.op.eval_term(args) {
            OutputTerm::Const(c) => c,
            OutputTerm::Fresh { stream, key } => {
                let next = &mut self.next;
                *self.table.entry((stream, key)).or_insert_with(|| {
                    *next += 1;
                    *next - 1
                })
            }
        }
    }

    /// Componentwise application to argument tuples.
    pub fn apply(&mut self, columns: &[Vec<u64>]) -> Vec<u64> {
        let m = columns.first().map_or(0, |c| c.len());
        (0..m)
            .map(|t| {
                let row: Vec<u64> = columns.iter().map(|c| c[t]).collect();
                self.eval(&row)
            })
            .collect()
    }
}

impl fmt::Display for PatternOperation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ident: String = self
            .name
            .trim_end_matches(')')
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        let ident = if ident.starts_with(|c: char| c.is_ascii_alphabetic()) { ident } else { format!("op_{ident}") };
        write!(f, "op {ident}/{} := rules {{", self.arity)?;
        for r in &self.rules {
            let pats: Vec<String> = r
                .patterns
                .iter()
                .map(|p| match p {
                    ArgPattern::Any => "any".to_string(),
                    ArgPattern::In(s) if s.len() == 1 => format!("={}", s[0]),
                    ArgPattern::In(s) => format!("in{{{}}}", join(s)),
                    ArgPattern::NotIn(s) => format!("notin{{{}}}", join(s)),
                })
                .collect();
            let out = match &r.output {
                OutputSpec::Const(c) => format!("const {c}"),
                OutputSpec::Fresh { stream, key } => {
                    let k: Vec<String> = key.iter().map(|p| (p + 1).to_string()).collect();
                    format!("fresh s{stream} key({})", k.join(","))
                }
            };
            write!(f, " ({})->{};", pats.join(","), out)?;
        }
        f.write_str(" }")
    }
}

fn join(s: &[u64]) -> String {
    s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}
