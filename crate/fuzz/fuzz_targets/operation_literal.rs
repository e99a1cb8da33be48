#![no_main]

use eqclone::patops::parse_operation_literal;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_operation_literal(text);
});
