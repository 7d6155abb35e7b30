#![no_main]

use entryshift::biasaudit::TagShiftMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(data) {
        let _ = TagShiftMatrix::from_value(&v);
    }
});
