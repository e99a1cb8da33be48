//! Quantifier-free equality formulas, their normal forms and syntactic
//! classes, and primitive positive formulas.
//!
//! All semantic questions (equivalence, implication, the relation defined)
//! are answered by enumerating the equality patterns of the variables.

mod bits;
mod cnf;
pub mod constructions;
mod expr;
mod horn;
pub(crate) mod lexer;
mod pp;

pub use cnf::{
    cnf_to_relation, equivalent, formula_to_relation, reduce, relation_to_cnf, relation_to_formula,
    to_cnf, Atom, Clause, CnfFormula, Literal,
};
pub use expr::{parse_formula, EqFormula, Expr};
pub use horn::{
    classify_cnf, classify_extended, connected_horn_closure, expand_horn, is_connected_extended_horn,
    is_connected_horn, is_horn, is_negative, ExtClause, ExtendedHornFormula, FormulaClassFlags,
};
pub use pp::{parse_pp, pp_evaluate, pp_search_bounded, resolve, PpAtom, PpFormula, PpSearchLimits, RelationEnv};

pub(crate) use expr::{parse_expr, parse_header};
pub(crate) use pp::parse_pp_cursor;

/// Reduced CNF definition of a relation.
pub fn reduced_definition(rel: &crate::eqcore::OrbitRelation) -> crate::Result<CnfFormula> {
    reduce(&relation_to_cnf(rel)?)
}
