#![no_main]

use eqclone::eqcore::BuiltinRelation;
use eqclone::patops::BuiltinOperation;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if text.len() > 32 {
        return;
    }
    let _ = text.parse::<BuiltinRelation>();
    let _ = text.parse::<BuiltinOperation>();
});
