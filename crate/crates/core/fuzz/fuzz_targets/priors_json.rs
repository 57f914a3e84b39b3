#![no_main]

use libfuzzer_sys::fuzz_target;
use resassign::PriorTable;

fuzz_target!(|data: &[u8]| {
    let Ok(table) = serde_json::from_slice::<PriorTable>(data) else { return };
    let _ = table.check();
});
