use std::collections::BTreeMap;

use super::{ArgPattern, BuiltinOperation, OutputSpec, PatternOperation, Rule};
use crate::eqformula::lexer::{Cursor, Tok};
use crate::error::{Error, Result};

/// Parses `{ (any,=1,in{2,3},notin{0},!=4)->const 1; (...)->fresh s key(1,2); }`.
/// Stream names are numbered in order of first appearance.
pub(crate) fn parse_rules_block(c: &mut Cursor) -> Result<Vec<Rule>> {
    c.expect(&Tok::LBrace, "'{' opening the rule list")?;
    let mut streams: BTreeMap<String, u32> = BTreeMap::new();
    let mut rules = Vec::new();
    while !c.eat(&Tok::RBrace) {
        c.expect(&Tok::LParen, "'(' opening a rule")?;
        let mut patterns = Vec::new();
        loop {
            patterns.push(parse_pattern(c)?);
            if c.eat(&Tok::RParen) {
                break;
            }
            c.expect(&Tok::Comma, "',' or ')' in a rule")?;
        }
        c.expect(&Tok::Arrow, "'->' after the patterns")?;
        let output = if c.eat_keyword("const") {
            OutputSpec::Const(number(c)?)
        } else if c.eat_keyword("fresh") {
            let off = c.offset();
            let name = c.ident("stream name")?;
            let next = streams.len() as u32;
            if streams.contains_key(&name) {
                return Err(Error::syntax(off, format!("stream '{name}' used by two rules")));
            }
            let stream = *streams.entry(name).or_insert(next);
            if !c.eat_keyword("key") {
                return Err(c.error("expected 'key'"));
            }
            c.expect(&Tok::LParen, "'(' after key")?;
            let mut key = Vec::new();
            loop {
                let off = c.offset();
                let p = number(c)?;
                if p == 0 {
                    return Err(Error::syntax(off, "key positions start at 1"));
                }
                key.push(p as usize - 1);
                if c.eat(&Tok::RParen) {
                    break;
                }
                c.expect(&Tok::Comma, "',' or ')' in a key")?;
            }
            OutputSpec::Fresh { stream, key }
        } else {
            return Err(c.error("expected 'const' or 'fresh'"));
        };
        rules.push(Rule { patterns, output });
        if !c.eat(&Tok::Semi) && *c.peek() != Tok::RBrace {
            return Err(c.error("expected ';' after a rule"));
        }
    }
    Ok(rules)
}

fn number(c: &mut Cursor) -> Result<u64> {
    c.number("a natural number")
}

fn value_set(c: &mut Cursor) -> Result<Vec<u64>> {
    c.expect(&Tok::LBrace, "'{'")?;
    let mut out = Vec::new();
    if c.eat(&Tok::RBrace) {
        return Ok(out);
    }
    loop {
        let a = number(c)?;
        if c.eat(&Tok::DotDot) {
            let off = c.offset();
            let b = number(c)?;
            if b < a || b - a > 1 << 16 {
                return Err(Error::syntax(off, "invalid value range"));
            }
            out.extend(a..=b);
        } else {
            out.push(a);
        }
        if c.eat(&Tok::RBrace) {
            return Ok(out);
        }
        c.expect(&Tok::Comma, "',' or '}'")?;
    }
}

fn parse_pattern(c: &mut Cursor) -> Result<ArgPattern> {
    if c.eat(&Tok::Eq) {
        return Ok(ArgPattern::in_set([number(c)?]));
    }
    if c.eat(&Tok::Neq) {
        return Ok(ArgPattern::not_in([number(c)?]));
    }
    if c.eat_keyword("any") || c.eat_keyword("_") {
        return Ok(ArgPattern::Any);
    }
    if c.eat_keyword("in") {
        return Ok(ArgPattern::in_set(value_set(c)?));
    }
    if c.eat_keyword("notin") {
        return Ok(ArgPattern::not_in(value_set(c)?));
    }
    Err(c.error("expected a pattern (any, =v, !=v, in{..}, notin{..})"))
}

/// Parses the body after `op NAME[/n] :=`, i.e. `rules {…}` or `builtin X`.
pub(crate) fn parse_operation_body(c: &mut Cursor, name: &str, arity: Option<usize>) -> Result<PatternOperation> {
    let off = c.offset();
    let mut op = if c.eat_keyword("builtin") {
        let mut op = BuiltinOperation::parse_cursor(c)?.build()?;
        op.name = name.to_string();
        op
    } else if c.eat_keyword("rules") {
        let rules = parse_rules_block(c)?;
        let n = match (arity, rules.first()) {
            (Some(n), _) => n,
            (None, Some(r)) => r.patterns.len(),
            (None, None) => return Err(Error::syntax(off, "empty rule list")),
        };
        PatternOperation::build(name, n, rules).map_err(|e| match e {
            Error::Invalid(m) | Error::Arity(m) => Error::syntax(off, m),
            e => e,
        })?
    } else {
        return Err(c.error("expected 'rules' or 'builtin'"));
    };
    if let Some(n) = arity {
        if n != op.arity() {
            return Err(Error::syntax(off, format!("declared arity {n} but the operation has arity {}", op.arity())));
        }
    }
    op.name = name.to_string();
    Ok(op)
}

/// Parses `NAME[/n] := …` after the `op` keyword.
pub(crate) fn parse_operation_statement(c: &mut Cursor) -> Result<PatternOperation> {
    let name = c.ident("operation name")?;
    let arity = if c.eat(&Tok::Slash) { Some(number(c)? as usize) } else { None };
    c.expect(&Tok::Assign, "':='")?;
    parse_operation_body(c, &name, arity)
}

/// Parses one `op NAME[/n] := rules {…}` or `op NAME := builtin X` statement.
pub fn parse_operation_literal(text: &str) -> Result<PatternOperation> {
    let mut c = Cursor::new(text)?;
    if !c.eat_keyword("op") {
        return Err(c.error("expected 'op'"));
    }
    let op = parse_operation_statement(&mut c)?;
    c.eat(&Tok::Semi);
    if !c.at_end() {
        return Err(c.error("expected end of input"));
    }
    Ok(op)
}
