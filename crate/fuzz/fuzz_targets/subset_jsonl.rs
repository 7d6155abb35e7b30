#![no_main]

use std::sync::{Arc, OnceLock};

use entryshift::corpus::{default_taxonomy, parse_dataset, Dataset};
use entryshift::counterfactual::BiasSubset;
use libfuzzer_sys::fuzz_target;

fn dataset() -> &'static Dataset {
    static DS: OnceLock<Dataset> = OnceLock::new();
    DS.get_or_init(|| {
        parse_dataset(include_str!("../../fixtures/mini.jsonl"), Arc::new(default_taxonomy()), "mini").expect("fixture")
    })
}

fuzz_target!(|data: &str| {
    let _ = BiasSubset::parse_jsonl(data, dataset());
});
