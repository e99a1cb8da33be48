#![no_main]

use eqclone::eqcore::OrbitRelation;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = OrbitRelation::parse_literal(text);
});
