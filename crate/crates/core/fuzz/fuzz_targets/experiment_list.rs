#![no_main]

use libfuzzer_sys::fuzz_target;
use resassign::domain::ExperimentSet;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(set) = ExperimentSet::parse_list(text) {
        let names: Vec<String> = set.experiments().iter().map(|e| e.to_string()).collect();
        assert_eq!(ExperimentSet::parse_list(&names.join(",")).unwrap(), set);
    }
});
