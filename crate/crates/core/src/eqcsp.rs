//! Solving CSP(Γ) for equality languages.
//!
//! Tractable languages are solved by the all-equal assignment (when every
//! relation contains the constant tuple) or by propagating Horn definitions
//! over a union-find structure. Every satisfying assignment is verified
//! before it is returned. `brute_solve` enumerates partitions of the
//! variables and serves as an oracle.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::classify::{CspVerdict, TractableReason};
use crate::eqcore::{contains, partitions, OrbitRelation};
use crate::eqformula::lexer::{Cursor, Tok};
use crate::eqformula::{is_horn, reduced_definition, resolve, Atom, RelationEnv};
use crate::error::{Error, Result};

/// Largest variable count accepted by [`brute_solve`].
pub const BRUTE_MAX_VARS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Constraint {
    pub relation: String,
    /// Indices into [`Instance::variables`].
    pub args: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Instance {
    /// Language file named after `over`, if any.
    pub over: Option<String>,
    pub variables: Vec<String>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Solution {
    Sat { assignment: BTreeMap<String, u64> },
    Unsat,
}

impl Solution {
    pub fn is_sat(&self) -> bool {
        matches!(self, Solution::Sat { .. })
    }
}

impl Instance {
    pub fn new(variables: Vec<String>, constraints: Vec<Constraint>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for v in &variables {
            if !seen.insert(v) {
                return Err(Error::invalid(format!("variable '{v}' declared twice")));
            }
        }
        for c in &constraints {
            if let Some(&a) = c.args.iter().find(|&&a| a >= variables.len()) {
                return Err(Error::invalid(format!("constraint {} refers to variable #{a}", c.relation)));
            }
        }
        Ok(Instance { over: None, variables, constraints })
    }

    /// Resolves every constraint and checks arities; returns relations in constraint order.
    pub fn resolve(&self, env: &RelationEnv) -> Result<Vec<OrbitRelation>> {
        self.constraints
            .iter()
            .map(|c| {
                let r = resolve(env, &c.relation)?;
                if r.arity() != c.args.len() {
                    return Err(Error::Arity(format!(
                        "{} has arity {} but is applied to {} variables",
                        c.relation,
                        r.arity(),
                        c.args.len()
                    )));
                }
                Ok(r)
            })
            .collect()
    }

    /// The distinct relations used, in order of first use.
    pub fn language(&self, env: &RelationEnv) -> Result<Vec<OrbitRelation>> {
        let mut out: Vec<OrbitRelation> = Vec::new();
        for r in self.resolve(env)? {
            if !out.contains(&r) {
                out.push(r);
            }
        }
        Ok(out)
    }

    fn satisfied_by(&self, rels: &[OrbitRelation], values: &[u64]) -> Result<bool> {
        for (c, r) in self.constraints.iter().zip(rels) {
            let t: Vec<u64> = c.args.iter().map(|&a| values[a]).collect();
            if !contains(r, &t)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn sat(&self, values: &[u64]) -> Solution {
        Solution::Sat { assignment: self.variables.iter().cloned().zip(values.iter().copied()).collect() }
    }

    /// Checks a solution against every constraint.
    pub fn verify(&self, env: &RelationEnv, sol: &Solution) -> Result<bool> {
        match sol {
            Solution::Unsat => Ok(true),
            Solution::Sat { assignment } => {
                let values: Option<Vec<u64>> = self.variables.iter().map(|v| assignment.get(v).copied()).collect();
                match values {
                    Some(v) => self.satisfied_by(&self.resolve(env)?, &v),
                    None => Ok(false),
                }
            }
        }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        self.0[a.max(b)] = a.min(b);
        true
    }
}

/// A Horn clause over instance variables: the body atoms imply the head.
struct HornClause {
    body: Vec<(usize, usize)>,
    head: Option<(usize, usize)>,
}

fn horn_clauses(inst: &Instance, rels: &[OrbitRelation]) -> Result<Vec<HornClause>> {
    let mut out = Vec::new();
    for (c, r) in inst.constraints.iter().zip(rels) {
        let def = reduced_definition(r)?;
        if !is_horn(&def) {
            return Err(Error::invalid(format!("{} has no Horn definition", c.relation)));
        }
        for cl in &def.clauses {
            let mut hc = HornClause { body: Vec::new(), head: None };
            for l in &cl.literals {
                match (l.positive, l.atom) {
                    (false, Atom::Eq(i, j)) => hc.body.push((c.args[i], c.args[j])),
                    (true, Atom::Eq(i, j)) => hc.head = Some((c.args[i], c.args[j])),
                    (_, Atom::False) => {}
                }
            }
            out.push(hc);
        }
    }
    Ok(out)
}

fn horn_solve(inst: &Instance, rels: &[OrbitRelation]) -> Result<Solution> {
    let clauses = horn_clauses(inst, rels)?;
    let n = inst.variables.len();
    let mut uf = UnionFind((0..n).collect());
    loop {
        let mut changed = false;
        for hc in &clauses {
            if !hc.body.iter().all(|&(a, b)| uf.find(a) == uf.find(b)) {
                continue;
            }
            match hc.head {
                None => return Ok(Solution::Unsat),
                Some((a, b)) => changed |= uf.union(a, b),
            }
        }
        if !changed {
            break;
        }
    }
    let mut ids: BTreeMap<usize, u64> = BTreeMap::new();
    let values: Vec<u64> = (0..n)
        .map(|v| {
            let r = uf.find(v);
            let next = ids.len() as u64;
            *ids.entry(r).or_insert(next)
        })
        .collect();
    if inst.satisfied_by(rels, &values)? {
        Ok(inst.sat(&values))
    } else {
        Ok(Solution::Unsat)
    }
}

/// Solves with the algorithm matching `verdict`, which must certify Γ.
pub fn solve(inst: &Instance, env: &RelationEnv, verdict: CspVerdict) -> Result<Solution> {
    let rels = inst.resolve(env)?;
    let sol = match verdict {
        CspVerdict::NpComplete => {
            return Err(Error::invalid("no polynomial algorithm for an NP-complete language"));
        }
        CspVerdict::PolynomialTime { reason: TractableReason::Constant } => {
            if let Some(r) = rels.iter().find(|r| !r.has_constant_orbit()) {
                return Err(Error::invalid(format!(
                    "certificate mismatch: {} lacks the all-equal tuple",
                    r.to_literal()
                )));
            }
            let values = vec![0; inst.variables.len()];
            if !inst.satisfied_by(&rels, &values)? {
                return Err(Error::Internal("all-equal assignment rejected".into()));
            }
            inst.sat(&values)
        }
        CspVerdict::PolynomialTime { reason: TractableReason::BinaryInjection } => horn_solve(inst, &rels)
            .map_err(|e| match e {
                Error::Invalid(m) => Error::invalid(format!("certificate mismatch: {m}")),
                e => e,
            })?,
    };
    Ok(sol)
}

/// Tries every partition of the variables, values being block indices.
pub fn brute_solve(inst: &Instance, env: &RelationEnv) -> Result<Solution> {
    let n = inst.variables.len();
    if n > BRUTE_MAX_VARS {
        return Err(Error::resource("variables for brute-force solving", BRUTE_MAX_VARS as u64));
    }
    let rels = inst.resolve(env)?;
    if n == 0 {
        return Ok(if inst.constraints.is_empty() { inst.sat(&[]) } else { Solution::Unsat });
    }
    for p in partitions(n)?.iter() {
        let values: Vec<u64> = p.labels().iter().map(|&l| l as u64).collect();
        if inst.satisfied_by(&rels, &values)? {
            return Ok(inst.sat(&values));
        }
    }
    Ok(Solution::Unsat)
}

/// Parses `instance [over PATH] { vars x, y; R(x, y); … }`.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let trimmed = text.trim_start();
    let base = text.len() - trimmed.len();
    let Some(rest) = trimmed.strip_prefix("instance") else {
        return Err(Error::syntax(base, "expected 'instance'"));
    };
    let mut body_start = base + "instance".len();
    let mut over = None;
    let after = rest.trim_start();
    if let Some(p) = after.strip_prefix("over") {
        let p = p.trim_start();
        let end = p.find(|c: char| c.is_whitespace() || c == '{').unwrap_or(p.len());
        if end == 0 {
            return Err(Error::syntax(text.len() - p.len(), "expected a path after 'over'"));
        }
        over = Some(p[..end].to_string());
        body_start = text.len() - p.len() + end;
    }
    let mut c = Cursor::new(&text[body_start..]).map_err(|e| shift(e, body_start))?;
    let inst = parse_body(&mut c, over).map_err(|e| shift(e, body_start))?;
    Ok(inst)
}

fn shift(e: Error, by: usize) -> Error {
    match e {
        Error::Syntax { offset, message } => Error::Syntax { offset: offset + by, message },
        e => e,
    }
}

fn parse_body(c: &mut Cursor, over: Option<String>) -> Result<Instance> {
    c.expect(&Tok::LBrace, "'{'")?;
    let mut variables = Vec::new();
    let mut constraints = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    while !c.eat(&Tok::RBrace) {
        if c.is_keyword("vars") && !matches!(c.peek_at(1), Tok::LParen) {
            c.next();
            for v in c.var_list()? {
                if index.insert(v.clone(), variables.len()).is_some() {
                    return Err(c.error(format!("variable '{v}' declared twice")));
                }
                variables.push(v);
            }
        } else {
            let relation = c.ident("relation name or 'vars'")?;
            c.expect(&Tok::LParen, "'('")?;
            let mut args = Vec::new();
            loop {
                let off = c.offset();
                let v = c.ident("variable")?;
                let i = *index.get(&v).ok_or_else(|| Error::syntax(off, format!("undeclared variable '{v}'")))?;
                args.push(i);
                if !c.eat(&Tok::Comma) {
                    break;
                }
            }
            c.expect(&Tok::RParen, "')'")?;
            constraints.push(Constraint { relation, args });
        }
        c.expect(&Tok::Semi, "';'")?;
    }
    if !c.at_end() {
        return Err(c.error("expected end of instance"));
    }
    Ok(Instance { over, variables, constraints })
}
