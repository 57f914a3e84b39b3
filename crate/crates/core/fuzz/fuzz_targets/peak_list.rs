#![no_main]

use libfuzzer_sys::fuzz_target;
use resassign::domain::io::{parse_peak_list, write_peak_list};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(peaks) = parse_peak_list(text) else { return };
    // accepted input must survive a write/read cycle unchanged
    let mut out = Vec::new();
    write_peak_list(&mut out, &peaks).unwrap();
    let again = parse_peak_list(std::str::from_utf8(&out).unwrap()).unwrap();
    assert_eq!(peaks, again);
});
