#![no_main]

use libfuzzer_sys::fuzz_target;
use resassign::Tolerances;

fuzz_target!(|data: &[u8]| {
    let Ok(tol) = serde_json::from_slice::<Tolerances>(data) else { return };
    let _ = tol.check();
});
