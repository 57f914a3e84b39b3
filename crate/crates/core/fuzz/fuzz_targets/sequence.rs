#![no_main]

use libfuzzer_sys::fuzz_target;
use resassign::ProteinSequence;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(seq) = ProteinSequence::parse(text) {
        assert!(!seq.is_empty());
        assert_eq!(ProteinSequence::parse(&seq.to_string()).unwrap(), seq);
    }
});
