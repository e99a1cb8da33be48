#![no_main]

use eqclone::eqformula::{parse_pp, pp_evaluate, RelationEnv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(pp) = parse_pp(text) {
        if pp.free.len() + pp.bound.len() <= 6 {
            let _ = pp_evaluate(&pp, &RelationEnv::new());
        }
    }
});
