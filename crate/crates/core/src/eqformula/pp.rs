use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::lexer::{Cursor, Tok};
use crate::caps::partition_cap;
use crate::eqcore::{builtin_relation, OrbitRelation, Partition};
use crate::error::{Error, Result};

/// Named relations available to pp formulas. Names missing here fall back to builtins.
pub type RelationEnv = BTreeMap<String, OrbitRelation>;

/// Resolves a relation name in `env`, then among the builtins.
pub fn resolve(env: &RelationEnv, name: &str) -> Result<OrbitRelation> {
    if let Some(r) = env.get(name) {
        return Ok(r.clone());
    }
    builtin_relation(name).map_err(|_| Error::Unknown(format!("relation '{name}'")))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PpAtom {
    Eq(usize, usize),
    Neq(usize, usize),
    Rel { name: String, args: Vec<usize> },
}

/// `∃ bound. conjuncts`; variables `0..free.len()` are free, the rest bound.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PpFormula {
    pub free: Vec<String>,
    pub bound: Vec<String>,
    pub conjuncts: Vec<PpAtom>,
}

impl PpFormula {
    pub fn num_vars(&self) -> usize {
        self.free.len() + self.bound.len()
    }

    fn name(&self, i: usize) -> &str {
        if i < self.free.len() { &self.free[i] } else { &self.bound[i - self.free.len()] }
    }
}

impl fmt::Display for PpFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vars {}: ", self.free.join(","))?;
        if !self.bound.is_empty() {
            write!(f, "exists {}: ", self.bound.join(","))?;
        }
        if self.conjuncts.is_empty() {
            return f.write_str("true");
        }
        let parts: Vec<String> = self
            .conjuncts
            .iter()
            .map(|a| match a {
                PpAtom::Eq(i, j) => format!("{}={}", self.name(*i), self.name(*j)),
                PpAtom::Neq(i, j) => format!("{}!={}", self.name(*i), self.name(*j)),
                PpAtom::Rel { name, args } => {
                    let a: Vec<&str> = args.iter().map(|&i| self.name(i)).collect();
                    format!("{name}({})", a.join(","))
                }
            })
            .collect();
        f.write_str(&parts.join(" & "))
    }
}

/// Parses `[vars x,y:] [exists u,v:] atom & atom & …`, atoms being `x=y`,
/// `x!=y`, `true` or `Name(args)`. Without a header, free variables are
/// listed in order of first occurrence.
pub fn parse_pp(text: &str) -> Result<PpFormula> {
    let mut c = Cursor::new(text)?;
    let pp = parse_pp_cursor(&mut c)?;
    if !c.at_end() {
        return Err(c.error("expected end of pp formula"));
    }
    Ok(pp)
}

pub(crate) fn parse_pp_cursor(c: &mut Cursor) -> Result<PpFormula> {
    let mut declared: Option<Vec<String>> = None;
    if c.is_keyword("vars") && matches!(c.peek_at(1), Tok::Ident(_)) {
        c.next();
        declared = Some(c.var_list()?);
        c.expect(&Tok::Colon, "':' after the variable header")?;
    }
    let mut bound = Vec::new();
    if c.eat_keyword("exists") {
        bound = c.var_list()?;
        c.expect(&Tok::Colon, "':' after the quantified variables")?;
    }
    for (k, b) in bound.iter().enumerate() {
        if bound[..k].contains(b) || declared.as_ref().is_some_and(|d| d.contains(b)) {
            return Err(c.error(format!("variable '{b}' bound twice")));
        }
    }
    let closed = declared.is_some();
    let mut free = declared.unwrap_or_default();
    // Raw atoms over names; indices assigned after all free variables are known.
    let mut raw: Vec<(u8, String, Vec<(String, usize)>)> = Vec::new();
    loop {
        if c.eat_keyword("true") {
        } else {
            let off = c.offset();
            let name = c.ident("an atom")?;
            match c.peek().clone() {
                Tok::LParen => {
                    c.next();
                    let mut args = Vec::new();
                    if !c.eat(&Tok::RParen) {
                        loop {
                            let o = c.offset();
                            args.push((c.ident("an argument variable")?, o));
                            if c.eat(&Tok::RParen) {
                                break;
                            }
                            c.expect(&Tok::Comma, "',' or ')'")?;
                        }
                    }
                    raw.push((0, name, args));
                }
                Tok::Eq | Tok::Neq => {
                    let kind = if c.next() == Tok::Eq { 1 } else { 2 };
                    let o = c.offset();
                    let rhs = c.ident("a variable")?;
                    raw.push((kind, String::new(), vec![(name, off), (rhs, o)]));
                }
                _ => return Err(c.error("expected '(', '=' or '!=' after a name")),
            }
        }
        if !c.eat(&Tok::And) {
            break;
        }
    }
    for (_, _, args) in &raw {
        for (a, o) in args {
            if !bound.contains(a) && !free.contains(a) {
                if closed {
                    return Err(Error::syntax(*o, format!("undeclared variable '{a}'")));
                }
                free.push(a.clone());
            }
        }
    }
    let index = |a: &str| -> usize {
        free.iter()
            .position(|f| f == a)
            .unwrap_or_else(|| free.len() + bound.iter().position(|b| b == a).unwrap())
    };
    let conjuncts = raw
        .iter()
        .map(|(kind, name, args)| {
            let ix: Vec<usize> = args.iter().map(|(a, _)| index(a)).collect();
            match kind {
                1 => PpAtom::Eq(ix[0], ix[1]),
                2 => PpAtom::Neq(ix[0], ix[1]),
                _ => PpAtom::Rel { name: name.clone(), args: ix },
            }
        })
        .collect();
    Ok(PpFormula { free, bound, conjuncts })
}

enum Check {
    Eq(usize, usize),
    Neq(usize, usize),
    Rel(usize, Vec<usize>),
}

/// Resolved atoms, each checked once its largest variable is assigned.
struct Compiled {
    rels: Vec<OrbitRelation>,
    at: Vec<Vec<Check>>,
}

fn compile(pp: &PpFormula, env: &RelationEnv) -> Result<Compiled> {
    let n = pp.num_vars();
    let mut rels = Vec::new();
    let mut at: Vec<Vec<Check>> = (0..n).map(|_| Vec::new()).collect();
    for a in &pp.conjuncts {
        let (last, chk) = match a {
            PpAtom::Eq(i, j) => (*i.max(j), Check::Eq(*i, *j)),
            PpAtom::Neq(i, j) => (*i.max(j), Check::Neq(*i, *j)),
            PpAtom::Rel { name, args } => {
                let r = resolve(env, name)?;
                if r.arity() != args.len() {
                    return Err(Error::Arity(format!(
                        "{name} has arity {}, applied to {} arguments",
                        r.arity(),
                        args.len()
                    )));
                }
                rels.push(r);
                (*args.iter().max().unwrap(), Check::Rel(rels.len() - 1, args.clone()))
            }
        };
        if last >= n {
            return Err(Error::invalid("atom refers to an undeclared variable"));
        }
        at[last].push(chk);
    }
    Ok(Compiled { rels, at })
}

impl Compiled {
    fn ok_at(&self, k: usize, labels: &[u8]) -> bool {
        self.at[k].iter().all(|c| match c {
            Check::Eq(i, j) => labels[*i] == labels[*j],
            Check::Neq(i, j) => labels[*i] != labels[*j],
            Check::Rel(r, args) => {
                let sub: Vec<u8> = args.iter().map(|&a| labels[a]).collect();
                self.rels[*r].contains_pattern(&Partition::of_slice(&sub).unwrap())
            }
        })
    }
}

/// Relation defined by `pp` over its free variables. Bound variables range
/// over every pattern extension, which covers fresh values of the infinite domain.
pub fn pp_evaluate(pp: &PpFormula, env: &RelationEnv) -> Result<OrbitRelation> {
    let n = pp.num_vars();
    let cap = partition_cap();
    if n > cap {
        return Err(Error::resource(format!("pp formula over {n} variables"), cap as u64));
    }
    if pp.free.is_empty() {
        return Err(Error::Arity("pp formula without free variables".into()));
    }
    let comp = compile(pp, env)?;
    let f = pp.free.len();
    let mut out = BTreeSet::new();
    let mut labels = vec![0u8; n];
    search(&comp, &mut labels, 0, 0, f, &mut out);
    OrbitRelation::new(f, out)
}

/// Depth-first over restricted-growth labelings; returns true once a
/// satisfying completion exists below the free prefix.
fn search(
    comp: &Compiled,
    labels: &mut Vec<u8>,
    k: usize,
    blocks: u8,
    f: usize,
    out: &mut BTreeSet<Partition>,
) -> bool {
    if k == labels.len() {
        out.insert(Partition::of_slice(&labels[..f]).unwrap());
        return true;
    }
    let mut any = false;
    for l in 0..=blocks {
        labels[k] = l;
        if !comp.ok_at(k, labels) {
            continue;
        }
        let nb = if l == blocks { blocks + 1 } else { blocks };
        if search(comp, labels, k + 1, nb, f, out) {
            any = true;
            if k >= f {
                return true;
            }
        }
    }
    any
}

/// Limits for [`pp_search_bounded`].
#[derive(Debug, Clone, Copy)]
pub struct PpSearchLimits {
    pub max_bound_vars: usize,
    pub max_atoms: usize,
    /// Maximum number of candidate formulas evaluated.
    pub max_candidates: u64,
}

impl Default for PpSearchLimits {
    fn default() -> Self {
        PpSearchLimits { max_bound_vars: 2, max_atoms: 3, max_candidates: 2_000_000 }
    }
}

fn tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..n).map(move |v| {
                    let mut t2 = t.clone();
                    t2.push(v);
                    t2
                })
            })
            .collect();
    }
    out
}

fn first_occurrences_canonical(atoms: &[&PpAtom], free: usize, bound: usize) -> bool {
    let mut next = free;
    let mut seen = vec![false; free + bound];
    for a in atoms {
        let vs: Vec<usize> = match a {
            PpAtom::Eq(i, j) | PpAtom::Neq(i, j) => vec![*i, *j],
            PpAtom::Rel { args, .. } => args.clone(),
        };
        for v in vs {
            if v >= free && !seen[v] {
                if v != next {
                    return false;
                }
                next += 1;
            }
            seen[v] = true;
        }
    }
    next == free + bound
}

/// Bounded search for a pp definition of `target` over `base`. Candidates are
/// tried by increasing bound-variable and atom count; every returned formula
/// has been re-evaluated to equal `target`.
pub fn pp_search_bounded(
    target: &OrbitRelation,
    base: &RelationEnv,
    limits: PpSearchLimits,
) -> Result<Option<PpFormula>> {
    let f = target.arity();
    let cap = partition_cap();
    if f + limits.max_bound_vars > cap {
        return Err(Error::resource(
            format!("pp search over {} variables", f + limits.max_bound_vars),
            cap as u64,
        ));
    }
    let has_neq = base.values().any(|r| r.arity() == 2 && r.len() == 1 && !r.has_constant_orbit());
    let mut tried = 0u64;
    for b in 0..=limits.max_bound_vars {
        let n = f + b;
        let mut cands: Vec<PpAtom> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                cands.push(PpAtom::Eq(i, j));
                if has_neq {
                    cands.push(PpAtom::Neq(i, j));
                }
            }
        }
        for (name, rel) in base {
            for args in tuples(n, rel.arity()) {
                cands.push(PpAtom::Rel { name: name.clone(), args });
            }
        }
        let free: Vec<String> = (1..=f).map(|i| format!("x{i}")).collect();
        let bound: Vec<String> = (1..=b).map(|i| format!("u{i}")).collect();
        for k in 1..=limits.max_atoms {
            let mut idx: Vec<usize> = (0..k).collect();
            if k > cands.len() {
                break;
            }
            loop {
                let atoms: Vec<&PpAtom> = idx.iter().map(|&i| &cands[i]).collect();
                if first_occurrences_canonical(&atoms, f, b) {
                    tried += 1;
                    if tried > limits.max_candidates {
                        return Err(Error::resource("pp search candidates", limits.max_candidates));
                    }
                    let pp = PpFormula {
                        free: free.clone(),
                        bound: bound.clone(),
                        conjuncts: atoms.into_iter().cloned().collect(),
                    };
                    if &pp_evaluate(&pp, base)? == target {
                        return Ok(Some(pp));
                    }
                }
                // Next k-combination.
                let mut p = k;
                while p > 0 && idx[p - 1] == cands.len() - k + p - 1 {
                    p -= 1;
                }
                if p == 0 {
                    break;
                }
                idx[p - 1] += 1;
                for q in p..k {
                    idx[q] = idx[q - 1] + 1;
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(names: &[&str]) -> RelationEnv {
        names.iter().map(|n| (n.to_string(), builtin_relation(n).unwrap())).collect()
    }

    #[test]
    fn parse_and_display() {
        let pp = parse_pp("exists u,v: R(a,b,u,v) & u!=v").unwrap();
        assert_eq!(pp.free, vec!["a", "b"]);
        assert_eq!(pp.bound, vec!["u", "v"]);
        assert_eq!(pp.conjuncts[1], PpAtom::Neq(2, 3));
        assert_eq!(parse_pp(&pp.to_string()).unwrap(), pp);
        assert!(parse_pp("exists u: R(a,").is_err());
        assert!(parse_pp("vars a: a=b").is_err());
    }

    #[test]
    fn neq_from_n_projection() {
        let pp = parse_pp("vars x,y: N(x,x,y,y)").unwrap();
        assert_eq!(pp_evaluate(&pp, &env(&[])).unwrap(), builtin_relation("neq").unwrap());
    }

    #[test]
    fn search_examples() {
        let lim = PpSearchLimits { max_bound_vars: 0, max_atoms: 1, ..Default::default() };
        let found = pp_search_bounded(&builtin_relation("neq").unwrap(), &env(&["N"]), lim).unwrap().unwrap();
        assert_eq!(pp_evaluate(&found, &env(&["N"])).unwrap(), builtin_relation("neq").unwrap());
        let none = pp_search_bounded(
            &builtin_relation("odd3").unwrap(),
            &env(&["Runder2"]),
            PpSearchLimits { max_bound_vars: 0, max_atoms: 1, ..Default::default() },
        )
        .unwrap();
        assert!(none.is_none());
    }

    #[test]
    fn r2_from_r3_search() {
        let lim = PpSearchLimits { max_bound_vars: 2, max_atoms: 1, ..Default::default() };
        let base = env(&["R3"]);
        let found = pp_search_bounded(&builtin_relation("R(2)").unwrap(), &base, lim).unwrap().unwrap();
        assert_eq!(pp_evaluate(&found, &base).unwrap(), builtin_relation("R(2)").unwrap());
    }

    #[test]
    fn unknown_relation() {
        let pp = parse_pp("Foo(x,y)").unwrap();
        assert!(matches!(pp_evaluate(&pp, &env(&[])), Err(Error::Unknown(_))));
        let pp = parse_pp("N(x,y)").unwrap();
        assert!(matches!(pp_evaluate(&pp, &env(&[])), Err(Error::Arity(_))));
    }
}
