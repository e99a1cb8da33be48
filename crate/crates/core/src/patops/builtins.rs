use std::fmt;
use std::str::FromStr;

use super::{ArgPattern, OutputSpec, PatternOperation, Rule};
use crate::eqformula::lexer::{Cursor, Tok};
use crate::error::{Error, Result};
use crate::unilattice::Entry;

/// The named operations used throughout the classification.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BuiltinOperation {
    /// `f_k(x,1,…,1)=1, …, f_k(k,…,k,x)=k`, fresh elsewhere.
    F(usize),
    /// `g_k(0,x̄)=f_k(x̄)`, fresh and injective elsewhere.
    G(usize),
    /// Copies a first argument below k, injective elsewhere.
    Bar(u64),
    Injection(usize),
    Constant(u64),
    /// `projection(n, i)` with 1-based i.
    Projection(usize, usize),
    Richard,
    QuasilinearXor { set: Vec<u64>, a: u64, b: u64 },
    EssentialFinite(u64),
    /// Unary operation whose kernel classes have the given sizes.
    UnaryFromKernel(Vec<Entry>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Param {
    Num(u64),
    Omega,
    Set(Vec<u64>),
}

impl BuiltinOperation {
    pub fn arity(&self) -> usize {
        match self {
            BuiltinOperation::F(k) => *k,
            BuiltinOperation::G(k) => k + 1,
            BuiltinOperation::Injection(n) | BuiltinOperation::Projection(n, _) => *n,
            BuiltinOperation::Constant(_) | BuiltinOperation::UnaryFromKernel(_) => 1,
            _ => 2,
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        match self {
            BuiltinOperation::F(k) | BuiltinOperation::G(k) if *k < 3 => bad(format!("{self} needs k ≥ 3")),
            BuiltinOperation::F(k) | BuiltinOperation::G(k) if *k > 64 => bad(format!("{self}: k above 64")),
            BuiltinOperation::Bar(0) => bad("bar(k) needs k ≥ 1".into()),
            BuiltinOperation::Bar(k) if *k > 1 << 16 => bad("bar(k): k above 65536".into()),
            BuiltinOperation::Injection(0) => bad("an injection needs at least one argument".into()),
            BuiltinOperation::Projection(n, i) if *i == 0 || i > n => bad(format!("{self}: position out of range")),
            BuiltinOperation::QuasilinearXor { set, .. } if set.is_empty() => bad("quasilinear_xor needs a nonempty set".into()),
            BuiltinOperation::EssentialFinite(r) if *r < 2 => bad("essential_finite(r) needs r ≥ 2".into()),
            BuiltinOperation::EssentialFinite(r) if *r > 1 << 16 => bad("essential_finite(r): r above 65536".into()),
            BuiltinOperation::UnaryFromKernel(k) => {
                if k.last() != Some(&Entry::Omega) {
                    return bad("a kernel tuple must end in w".into());
                }
                if k.contains(&Entry::Fin(0)) {
                    return bad("kernel classes are nonempty".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<PatternOperation> {
        self.check()?;
        let n = self.arity();
        let any = || vec![ArgPattern::Any; n];
        let fresh = |stream, key: Vec<usize>| OutputSpec::Fresh { stream, key };
        let rules = match self {
            BuiltinOperation::F(k) => {
                let mut rules = f_rules(*k, 0);
                rules.push(Rule { patterns: any(), output: fresh(0, (0..*k).collect()) });
                rules
            }
            BuiltinOperation::G(k) => {
                let mut rules = f_rules(*k, 1);
                for r in &mut rules {
                    r.patterns[0] = ArgPattern::in_set([0]);
                }
                let mut zero = any();
                zero[0] = ArgPattern::in_set([0]);
                rules.push(Rule { patterns: zero, output: fresh(0, (1..=*k).collect()) });
                rules.push(Rule { patterns: any(), output: fresh(1, (0..=*k).collect()) });
                rules
            }
            BuiltinOperation::Bar(k) => {
                let mut rules: Vec<Rule> = (0..*k)
                    .map(|j| Rule {
                        patterns: vec![ArgPattern::in_set([j]), ArgPattern::Any],
                        output: OutputSpec::Const(j),
                    })
                    .collect();
                rules.push(Rule { patterns: any(), output: fresh(0, vec![0, 1]) });
                rules
            }
            BuiltinOperation::Injection(n) => vec![Rule { patterns: any(), output: fresh(0, (0..*n).collect()) }],
            BuiltinOperation::Constant(c) => vec![Rule { patterns: any(), output: OutputSpec::Const(*c) }],
            BuiltinOperation::Projection(_, i) => vec![Rule { patterns: any(), output: fresh(0, vec![i - 1]) }],
            BuiltinOperation::Richard => vec![
                Rule { patterns: vec![ArgPattern::in_set([1, 2]), ArgPattern::Any], output: fresh(0, vec![1]) },
                Rule { patterns: any(), output: fresh(1, vec![0, 1]) },
            ],
            BuiltinOperation::QuasilinearXor { set, a, b } => vec![
                Rule {
                    patterns: vec![ArgPattern::in_set(set.iter().copied()), ArgPattern::in_set(set.iter().copied())],
                    output: OutputSpec::Const(*a),
                },
                Rule {
                    patterns: vec![ArgPattern::not_in(set.iter().copied()), ArgPattern::not_in(set.iter().copied())],
                    output: OutputSpec::Const(*a),
                },
                Rule { patterns: any(), output: OutputSpec::Const(*b) },
            ],
            BuiltinOperation::EssentialFinite(r) => {
                let mut rules = vec![Rule {
                    patterns: vec![ArgPattern::in_set([0]), ArgPattern::in_set([0])],
                    output: OutputSpec::Const(1),
                }];
                rules.extend((2..*r).map(|i| Rule {
                    patterns: vec![ArgPattern::in_set([i]), ArgPattern::Any],
                    output: OutputSpec::Const(i),
                }));
                rules.push(Rule { patterns: any(), output: OutputSpec::Const(0) });
                rules
            }
            BuiltinOperation::UnaryFromKernel(classes) => {
                let width = crate::caps::partition_cap() as u64;
                let mut next = 0u64;
                let mut rules = Vec::new();
                for (i, e) in classes[..classes.len() - 1].iter().enumerate() {
                    let size = match e {
                        Entry::Fin(s) => *s,
                        Entry::Omega => width,
                    };
                    rules.push(Rule {
                        patterns: vec![ArgPattern::in_set(next..next + size)],
                        output: OutputSpec::Const(i as u64 + 1),
                    });
                    next += size;
                }
                rules.push(Rule { patterns: any(), output: OutputSpec::Const(classes.len() as u64) });
                rules
            }
        };
        Ok(PatternOperation::builtin(self.to_string(), n, rules))
    }

    pub(crate) fn from_parts(name: &str, params: &[Param]) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        let (base, params): (&str, Vec<Param>) = match split_trailing_digits(&lower) {
            Some((b, d)) if params.is_empty() && !matches!(b, "" | "s") => (b, vec![Param::Num(d)]),
            _ => (lower.as_str(), params.to_vec()),
        };
        let num = |k: usize| -> Result<u64> {
            match params.get(k) {
                Some(Param::Num(v)) => Ok(*v),
                _ => Err(Error::invalid(format!("{name}: expected a number as parameter {}", k + 1))),
            }
        };
        let count = |want: usize| -> Result<()> {
            if params.len() == want {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name}: expected {want} parameters, got {}", params.len())))
            }
        };
        let op = match base {
            "f" => {
                count(1)?;
                BuiltinOperation::F(num(0)? as usize)
            }
            "g" => {
                count(1)?;
                BuiltinOperation::G(num(0)? as usize)
            }
            "bar" => {
                count(1)?;
                BuiltinOperation::Bar(num(0)?)
            }
            "inj" | "injection" | "generic_injection" => {
                if params.is_empty() {
                    BuiltinOperation::Injection(2)
                } else {
                    count(1)?;
                    BuiltinOperation::Injection(num(0)? as usize)
                }
            }
            "const" | "constant" => {
                count(1)?;
                BuiltinOperation::Constant(num(0)?)
            }
            "proj" | "projection" => {
                count(2)?;
                BuiltinOperation::Projection(num(0)? as usize, num(1)? as usize)
            }
            "richard" => {
                count(0)?;
                BuiltinOperation::Richard
            }
            "qxor" | "quasilinear_xor" => {
                if params.is_empty() {
                    BuiltinOperation::QuasilinearXor { set: vec![0], a: 0, b: 1 }
                } else {
                    count(3)?;
                    let set = match &params[0] {
                        Param::Set(s) => s.clone(),
                        Param::Num(v) => vec![*v],
                        Param::Omega => return Err(Error::invalid("quasilinear_xor: expected a set")),
                    };
                    BuiltinOperation::QuasilinearXor { set, a: num(1)?, b: num(2)? }
                }
            }
            "ess" | "essential_finite" => {
                count(1)?;
                BuiltinOperation::EssentialFinite(num(0)?)
            }
            "kernel" | "unary_from_kernel" => {
                let entries = params
                    .iter()
                    .map(|p| match p {
                        Param::Num(v) => Ok(Entry::Fin(*v)),
                        Param::Omega => Ok(Entry::Omega),
                        Param::Set(_) => Err(Error::invalid("kernel: unexpected set")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                BuiltinOperation::UnaryFromKernel(entries)
            }
            _ => return Err(Error::Unknown(format!("unknown builtin operation '{name}'"))),
        };
        op.check()?;
        Ok(op)
    }

    pub(crate) fn parse_cursor(c: &mut Cursor) -> Result<Self> {
        let off = c.offset();
        let name = c.ident("operation name")?;
        let mut params = Vec::new();
        if c.eat(&Tok::LParen) && !c.eat(&Tok::RParen) {
            loop {
                params.push(match c.next() {
                    Tok::Num(v) => Param::Num(v),
                    Tok::Ident(w) if w == "w" || w == "omega" => Param::Omega,
                    Tok::LBrace => {
                        let mut s = Vec::new();
                        if !c.eat(&Tok::RBrace) {
                            loop {
                                match c.next() {
                                    Tok::Num(v) => s.push(v),
                                    _ => return Err(Error::syntax(off, "expected a number in set")),
                                }
                                if c.eat(&Tok::RBrace) {
                                    break;
                                }
                                c.expect(&Tok::Comma, "',' or '}'")?;
                            }
                        }
                        Param::Set(s)
                    }
                    _ => return Err(Error::syntax(off, format!("bad parameter for {name}"))),
                });
                if c.eat(&Tok::RParen) {
                    break;
                }
                c.expect(&Tok::Comma, "',' or ')'")?;
            }
        }
        BuiltinOperation::from_parts(&name, &params)
    }
}

fn split_trailing_digits(s: &str) -> Option<(&str, u64)> {
    let idx = s.rfind(|c: char| !c.is_ascii_digit())? + 1;
    if idx == s.len() {
        return None;
    }
    Some((&s[..idx], s[idx..].parse().ok()?))
}

/// One rule per i in 1..=k, shifted right by `offset` positions.
fn f_rules(k: usize, offset: usize) -> Vec<Rule> {
    (1..=k)
        .map(|i| {
            let mut patterns = vec![ArgPattern::Any; k + offset];
            for (j, p) in patterns.iter_mut().enumerate().skip(offset) {
                if j - offset != i - 1 {
                    *p = ArgPattern::in_set([i as u64]);
                }
            }
            Rule { patterns, output: OutputSpec::Const(i as u64) }
        })
        .collect()
}

impl fmt::Display for BuiltinOperation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinOperation::F(k) => write!(f, "f({k})"),
            BuiltinOperation::G(k) => write!(f, "g({k})"),
            BuiltinOperation::Bar(k) => write!(f, "bar({k})"),
            BuiltinOperation::Injection(n) => write!(f, "inj({n})"),
            BuiltinOperation::Constant(c) => write!(f, "const({c})"),
            BuiltinOperation::Projection(n, i) => write!(f, "proj({n},{i})"),
            BuiltinOperation::Richard => f.write_str("richard"),
            BuiltinOperation::QuasilinearXor { set, a, b } => {
                let s: Vec<String> = set.iter().map(|v| v.to_string()).collect();
                write!(f, "qxor({{{}}},{a},{b})", s.join(","))
            }
            BuiltinOperation::EssentialFinite(r) => write!(f, "ess({r})"),
            BuiltinOperation::UnaryFromKernel(k) => {
                let s: Vec<String> = k.iter().map(|e| e.to_string()).collect();
                write!(f, "kernel({})", s.join(","))
            }
        }
    }
}

impl FromStr for BuiltinOperation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut c = Cursor::new(s)?;
        let op = BuiltinOperation::parse_cursor(&mut c)?;
        if !c.at_end() {
            return Err(c.error("expected end of operation name"));
        }
        Ok(op)
    }
}

/// Builds a builtin from its textual name, e.g. `f3`, `bar(1)`, `kernel(1,2,w)`.
pub fn builtin_operation(name: &str) -> Result<PatternOperation> {
    name.parse::<BuiltinOperation>()?.build()
}
