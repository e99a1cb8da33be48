use std::fmt;

use super::lexer::{Cursor, Tok};
use crate::eqcore::Partition;
use crate::error::{Error, Result};

/// Quantifier-free formula body over variable indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    True,
    False,
    Eq(usize, usize),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Implies(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn neq(i: usize, j: usize) -> Expr {
        Expr::Not(Box::new(Expr::Eq(i, j)))
    }

    /// Truth value when position `i` holds a value equal to position `j` iff `p.same(i, j)`.
    pub fn eval(&self, p: &Partition) -> bool {
        self.eval_with(&|i, j| p.same(i, j))
    }

    pub(crate) fn eval_with(&self, same: &dyn Fn(usize, usize) -> bool) -> bool {
        match self {
            Expr::True => true,
            Expr::False => false,
            Expr::Eq(i, j) => same(*i, *j),
            Expr::Not(e) => !e.eval_with(same),
            Expr::And(es) => es.iter().all(|e| e.eval_with(same)),
            Expr::Or(es) => es.iter().any(|e| e.eval_with(same)),
            Expr::Implies(a, b) => !a.eval_with(same) || b.eval_with(same),
        }
    }

    pub(crate) fn max_var(&self) -> Option<usize> {
        match self {
            Expr::True | Expr::False => None,
            Expr::Eq(i, j) => Some(*i.max(j)),
            Expr::Not(e) => e.max_var(),
            Expr::And(es) | Expr::Or(es) => es.iter().filter_map(|e| e.max_var()).max(),
            Expr::Implies(a, b) => a.max_var().max(b.max_var()),
        }
    }

    fn fmt_with(&self, names: &[String], f: &mut fmt::Formatter<'_>, top: bool) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, es: &[Expr], sep: &str| -> fmt::Result {
            if !top {
                f.write_str("(")?;
            }
            for (k, e) in es.iter().enumerate() {
                if k > 0 {
                    f.write_str(sep)?;
                }
                e.fmt_with(names, f, false)?;
            }
            if !top {
                f.write_str(")")?;
            }
            Ok(())
        };
        match self {
            Expr::True => f.write_str("true"),
            Expr::False => f.write_str("false"),
            Expr::Eq(i, j) => write!(f, "{}={}", names[*i], names[*j]),
            Expr::Not(e) => match e.as_ref() {
                Expr::Eq(i, j) => write!(f, "{}!={}", names[*i], names[*j]),
                other => {
                    f.write_str("!")?;
                    other.fmt_with(names, f, false)
                }
            },
            Expr::And(es) if es.is_empty() => f.write_str("true"),
            Expr::Or(es) if es.is_empty() => f.write_str("false"),
            Expr::And(es) => join(f, es, " & "),
            Expr::Or(es) => join(f, es, " | "),
            Expr::Implies(a, b) => {
                if !top {
                    f.write_str("(")?;
                }
                a.fmt_with(names, f, false)?;
                f.write_str(" -> ")?;
                b.fmt_with(names, f, false)?;
                if !top {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

/// A quantifier-free equality formula with an ordered variable list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EqFormula {
    pub variables: Vec<String>,
    pub body: Expr,
}

impl EqFormula {
    pub fn new(variables: Vec<String>, body: Expr) -> Result<Self> {
        if let Some(m) = body.max_var() {
            if m >= variables.len() {
                return Err(Error::invalid(format!("variable index {m} is not declared")));
            }
        }
        Ok(EqFormula { variables, body })
    }

    /// Default variable names `x1..xn`.
    pub fn default_names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("x{i}")).collect()
    }

    pub fn eval(&self, p: &Partition) -> bool {
        self.body.eval(p)
    }
}

impl fmt::Display for EqFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.body.fmt_with(&self.variables, f, true)
    }
}

/// Variable table for parsers: declared (closed) or first-occurrence (open).
pub(crate) struct VarTable {
    pub names: Vec<String>,
    pub closed: bool,
}

impl VarTable {
    pub fn open() -> Self {
        VarTable { names: Vec::new(), closed: false }
    }

    pub fn lookup(&mut self, name: &str, offset: usize) -> Result<usize> {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Ok(i);
        }
        if self.closed {
            return Err(Error::syntax(offset, format!("undeclared variable '{name}'")));
        }
        self.names.push(name.to_string());
        Ok(self.names.len() - 1)
    }
}

/// Parses the optional `vars …:` header.
pub(crate) fn parse_header(c: &mut Cursor) -> Result<VarTable> {
    if c.is_keyword("vars") && matches!(c.peek_at(1), Tok::Ident(_)) {
        c.next();
        let off = c.offset();
        let names = c.var_list()?;
        for (k, n) in names.iter().enumerate() {
            if names[..k].contains(n) {
                return Err(Error::syntax(off, format!("variable '{n}' declared twice")));
            }
        }
        c.expect(&Tok::Colon, "':' after the variable header")?;
        return Ok(VarTable { names, closed: true });
    }
    Ok(VarTable::open())
}

pub(crate) fn parse_expr(c: &mut Cursor, vars: &mut VarTable) -> Result<Expr> {
    let lhs = parse_or(c, vars)?;
    if c.eat(&Tok::Arrow) {
        let rhs = parse_expr(c, vars)?;
        return Ok(Expr::Implies(Box::new(lhs), Box::new(rhs)));
    }
    Ok(lhs)
}

fn parse_or(c: &mut Cursor, vars: &mut VarTable) -> Result<Expr> {
    let mut items = vec![parse_and(c, vars)?];
    while c.eat(&Tok::Or) {
        items.push(parse_and(c, vars)?);
    }
    Ok(if items.len() == 1 { items.pop().unwrap() } else { Expr::Or(items) })
}

fn parse_and(c: &mut Cursor, vars: &mut VarTable) -> Result<Expr> {
    let mut items = vec![parse_unary(c, vars)?];
    while c.eat(&Tok::And) {
        items.push(parse_unary(c, vars)?);
    }
    Ok(if items.len() == 1 { items.pop().unwrap() } else { Expr::And(items) })
}

fn parse_unary(c: &mut Cursor, vars: &mut VarTable) -> Result<Expr> {
    if c.eat(&Tok::Not) {
        return Ok(Expr::Not(Box::new(parse_unary(c, vars)?)));
    }
    if c.eat(&Tok::LParen) {
        let e = parse_expr(c, vars)?;
        c.expect(&Tok::RParen, "')'")?;
        return Ok(e);
    }
    if c.eat_keyword("true") {
        return Ok(Expr::True);
    }
    if c.eat_keyword("false") {
        return Ok(Expr::False);
    }
    let off = c.offset();
    let a = c.ident("a variable, 'true', 'false', '!' or '('")?;
    let positive = match c.next() {
        Tok::Eq => true,
        Tok::Neq => false,
        _ => return Err(Error::syntax(off + a.len(), "expected '=' or '!=' after a variable")),
    };
    let off_b = c.offset();
    let b = c.ident("a variable")?;
    let i = vars.lookup(&a, off)?;
    let j = vars.lookup(&b, off_b)?;
    let atom = Expr::Eq(i, j);
    Ok(if positive { atom } else { Expr::Not(Box::new(atom)) })
}

/// Parses a quantifier-free formula, e.g. `vars x1..x4: x1=x2 | x3!=x4`.
pub fn parse_formula(text: &str) -> Result<EqFormula> {
    let mut c = Cursor::new(text)?;
    let mut vars = parse_header(&mut c)?;
    let body = parse_expr(&mut c, &mut vars)?;
    if !c.at_end() {
        return Err(c.error("expected end of formula"));
    }
    EqFormula::new(vars.names, body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_examples() {
        let f = parse_formula("x1=x2 | x3!=x4").unwrap();
        assert_eq!(f.variables, vec!["x1", "x2", "x3", "x4"]);
        assert_eq!(f.body, Expr::Or(vec![Expr::Eq(0, 1), Expr::neq(2, 3)]));
        let g = parse_formula("x!=y & y!=z & x!=z").unwrap();
        assert_eq!(g.body, Expr::And(vec![Expr::neq(0, 1), Expr::neq(1, 2), Expr::neq(0, 2)]));
    }

    #[test]
    fn error_offsets() {
        assert_eq!(parse_formula("x1=").unwrap_err(), Error::syntax(3, "expected a variable, found end of input"));
        assert!(matches!(parse_formula("vars x,y: x=z"), Err(Error::Syntax { offset: 12, .. })));
        assert!(matches!(parse_formula("x=y)"), Err(Error::Syntax { offset: 3, .. })));
    }

    #[test]
    fn header_fixes_order() {
        let f = parse_formula("vars x1..x4: x3=x4 -> x1=x2").unwrap();
        assert_eq!(f.variables.len(), 4);
        assert_eq!(f.body, Expr::Implies(Box::new(Expr::Eq(2, 3)), Box::new(Expr::Eq(0, 1))));
    }

    #[test]
    fn display_reparses() {
        for s in ["x1=x2 | x3!=x4", "!(a=b & c=d) -> (a!=c | true)", "vars p,q,r: false | (p=q & q=r)"] {
            let f = parse_formula(s).unwrap();
            let shown = format!("vars {}: {}", f.variables.join(","), f);
            assert_eq!(parse_formula(&shown).unwrap(), f, "{s} vs {shown}");
        }
    }
}
