#![no_main]

use std::sync::Arc;

use entryshift::corpus::{default_taxonomy, parse_dataset};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(ds) = parse_dataset(data, Arc::new(default_taxonomy()), "fuzz") {
        let again = parse_dataset(&ds.to_jsonl(), ds.shared_taxonomy(), "fuzz").expect("normalized output reparses");
        assert_eq!(again.entries(), ds.entries());
    }
});
