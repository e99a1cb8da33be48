//! Language files: named relations and operations.
//!
//! ```text
//! # comments run to the end of the line
//! rel N   := orbits { [1,1,1,1], [1,2,3,4] };
//! rel E   := orbits/2 { };
//! rel D   := formula vars x,y,z: x=y | y=z;
//! rel S   := builtin Runder(2);
//! rel P   := pp vars x,y: exists u: D(x,u,y) & u!=x;
//! op  inj := builtin inj(2);
//! op  c/1 := rules { (=0)->const 1; (any)->const 0; };
//! language N, D;
//! ```
//!
//! Relations are resolved in file order, so a `pp` body may use earlier
//! names and builtins. Without a `language` statement the language is every
//! declared relation in file order.

use crate::eqcore::{builtin_relation, OrbitRelation};
use crate::eqformula::lexer::{Cursor, Tok};
use crate::eqformula::{formula_to_relation, parse_expr, parse_header, parse_pp_cursor, pp_evaluate, EqFormula, RelationEnv};
use crate::error::{Error, Result};
use crate::patops::{builtin_operation, parse_operation_statement, PatternOperation};

#[derive(Debug, Clone, Default)]
pub struct LanguageFile {
    /// Relations in declaration order.
    pub relations: Vec<(String, OrbitRelation)>,
    pub operations: Vec<(String, PatternOperation)>,
    /// Names listed by a `language` statement, if present.
    pub language: Option<Vec<String>>,
}

impl LanguageFile {
    pub fn env(&self) -> RelationEnv {
        self.relations.iter().cloned().collect()
    }

    /// Names and relations of the language, in order.
    pub fn gamma(&self) -> Result<Vec<(String, OrbitRelation)>> {
        match &self.language {
            None => Ok(self.relations.clone()),
            Some(names) => names.iter().map(|n| Ok((n.clone(), self.relation(n)?))).collect(),
        }
    }

    /// A declared relation, else a builtin.
    pub fn relation(&self, name: &str) -> Result<OrbitRelation> {
        if let Some((_, r)) = self.relations.iter().find(|(n, _)| n == name) {
            return Ok(r.clone());
        }
        builtin_relation(name).map_err(|_| Error::Unknown(format!("relation '{name}'")))
    }

    /// A declared operation, else a builtin.
    pub fn operation(&self, name: &str) -> Result<PatternOperation> {
        if let Some((_, o)) = self.operations.iter().find(|(n, _)| n == name) {
            return Ok(o.clone());
        }
        builtin_operation(name).map_err(|_| Error::Unknown(format!("operation '{name}'")))
    }
}

/// Byte ranges of `;`-terminated statements, ignoring comments and nested braces.
fn statements(text: &str) -> Result<Vec<(usize, usize)>> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    let mut depth: i64 = 0;
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'#' => {
                while i < b.len() && b[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b'/' if b.get(i + 1) == Some(&b'/') => {
                while i < b.len() && b[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b'{' | b'(' | b'[' => depth += 1,
            b'}' | b')' | b']' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::syntax(i, "unbalanced closing bracket"));
                }
            }
            b';' if depth == 0 => {
                out.push((start, i));
                start = i + 1;
            }
            _ => {}
        }
        i += 1;
    }
    if depth != 0 {
        return Err(Error::syntax(b.len(), "unclosed bracket"));
    }
    if Cursor::new(&text[start..]).map_err(|e| shift(e, start))?.at_end() {
        Ok(out)
    } else {
        Err(Error::syntax(b.len(), "missing ';' after the last statement"))
    }
}

fn shift(e: Error, by: usize) -> Error {
    match e {
        Error::Syntax { offset, message } => Error::Syntax { offset: offset + by, message },
        e => e,
    }
}

pub fn parse_language(text: &str) -> Result<LanguageFile> {
    let mut file = LanguageFile::default();
    for (s, e) in statements(text)? {
        let stmt = &text[s..e];
        let mut c = Cursor::new(stmt).map_err(|err| shift(err, s))?;
        if c.at_end() {
            continue;
        }
        statement(&mut c, stmt, &mut file).map_err(|err| shift(err, s))?;
    }
    if let Some(names) = &file.language {
        for n in names {
            file.relation(n)?;
        }
    }
    Ok(file)
}

fn statement(c: &mut Cursor, stmt: &str, file: &mut LanguageFile) -> Result<()> {
    let off = c.offset();
    if c.eat_keyword("rel") {
        let name_off = c.offset();
        let name = c.ident("relation name")?;
        if file.relations.iter().any(|(n, _)| *n == name) {
            return Err(Error::syntax(name_off, format!("relation '{name}' declared twice")));
        }
        c.expect(&Tok::Assign, "':='")?;
        let rel = relation_body(c, stmt, file)?;
        file.relations.push((name, rel));
    } else if c.eat_keyword("op") {
        let name_off = c.offset();
        let op = parse_operation_statement(c)?;
        if file.operations.iter().any(|(n, _)| *n == op.name) {
            return Err(Error::syntax(name_off, format!("operation '{}' declared twice", op.name)));
        }
        expect_end(c)?;
        file.operations.push((op.name.clone(), op));
    } else if c.eat_keyword("language") {
        if file.language.is_some() {
            return Err(Error::syntax(off, "second 'language' statement"));
        }
        let mut names = Vec::new();
        loop {
            names.push(c.ident("relation name")?);
            if !c.eat(&Tok::Comma) {
                break;
            }
        }
        expect_end(c)?;
        file.language = Some(names);
    } else {
        return Err(c.error("expected 'rel', 'op' or 'language'"));
    }
    Ok(())
}

fn expect_end(c: &Cursor) -> Result<()> {
    if c.at_end() {
        Ok(())
    } else {
        Err(c.error("expected ';'"))
    }
}

fn relation_body(c: &mut Cursor, stmt: &str, file: &LanguageFile) -> Result<OrbitRelation> {
    let off = c.offset();
    let kind = c.ident("'orbits', 'formula', 'builtin' or 'pp'")?;
    match kind.as_str() {
        "orbits" => OrbitRelation::parse_literal(&stmt[off..]).map_err(|e| shift(e, off)),
        "builtin" => {
            let raw = stmt[c.offset()..].trim();
            builtin_relation(raw).map_err(|e| match e {
                Error::Syntax { offset, message } => Error::Syntax { offset: offset + c.offset(), message },
                e => e,
            })
        }
        "formula" => {
            let mut vars = parse_header(c)?;
            let body = parse_expr(c, &mut vars)?;
            expect_end(c)?;
            let n = vars.names.len();
            formula_to_relation(&EqFormula::new(vars.names, body)?, n)
        }
        "pp" => {
            let pp = parse_pp_cursor(c)?;
            expect_end(c)?;
            pp_evaluate(&pp, &file.env())
        }
        _ => Err(Error::syntax(off, format!("unknown relation form '{kind}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
        # sample
        rel N := orbits { [1,1,1,1], [1,2,3,4] };
        rel E := orbits/2 { };
        rel D := formula vars x,y,z: x=y | y=z;
        rel S := builtin Runder(2);
        rel P := pp vars x,y: exists u: D(x,u,y) & u!=x;  // trailing comment
        op inj2 := builtin inj(2);
        op c/1 := rules { (=0)->const 1; (any)->const 0; };
        language N, D, neq;
    ";

    #[test]
    fn parses_every_form() {
        let f = parse_language(SAMPLE).unwrap();
        assert_eq!(f.relations.len(), 5);
        assert_eq!(f.operations.len(), 2);
        assert_eq!(f.relation("S").unwrap(), builtin_relation("Runder2").unwrap());
        assert_eq!(f.relation("E").unwrap().arity(), 2);
        assert_eq!(f.relation("D").unwrap().len(), 3);
        assert_eq!(f.relation("P").unwrap().arity(), 2);
        let g = f.gamma().unwrap();
        assert_eq!(g.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(), ["N", "D", "neq"]);
        assert_eq!(f.operation("c").unwrap().arity(), 1);
        assert_eq!(f.operation("f3").unwrap().arity(), 3);
    }

    #[test]
    fn errors_carry_file_offsets() {
        let text = "rel A := orbits { [1,1] };\nrel B := formula x = ;";
        match parse_language(text).unwrap_err() {
            Error::Syntax { offset, .. } => assert_eq!(offset, text.len() - 1),
            e => panic!("{e}"),
        }
        assert!(parse_language("rel A := orbits { [1,1] }").is_err());
        assert!(parse_language("rel A := orbits { [1,1] }; rel A := builtin neq;").is_err());
        assert!(parse_language("language Missing;").is_err());
        assert!(parse_language("rel A := magic;").is_err());
    }
}
