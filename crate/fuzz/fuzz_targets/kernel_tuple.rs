#![no_main]

use eqclone::unilattice::KernelTuple;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(k) = KernelTuple::parse(text) {
        let again = KernelTuple::parse(&k.to_string()).expect("display output parses");
        assert_eq!(k, again);
    }
});
