#![no_main]

use eqclone::eqformula::{formula_to_relation, parse_formula, reduce, to_cnf};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(f) = parse_formula(text) {
        // Small formulas are cheap enough to push through the whole pipeline.
        if f.variables.len() <= 5 {
            let cnf = to_cnf(&f);
            let _ = reduce(&cnf);
            let _ = formula_to_relation(&f, f.variables.len());
        }
    }
});
