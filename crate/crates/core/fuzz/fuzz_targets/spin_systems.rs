#![no_main]

use libfuzzer_sys::fuzz_target;
use resassign::domain::io::{parse_spin_systems, write_spin_systems};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spins) = parse_spin_systems(text) else { return };
    let mut out = Vec::new();
    write_spin_systems(&mut out, &spins).unwrap();
    let again = parse_spin_systems(std::str::from_utf8(&out).unwrap()).unwrap();
    assert_eq!(spins, again);
});
