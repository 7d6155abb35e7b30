#![no_main]

use entryshift::corpus::default_taxonomy;
use entryshift::evaluation::ThresholdTable;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let tax = default_taxonomy();
    if let Ok(table) = ThresholdTable::parse_csv(data, tax.tags()) {
        assert!(table.thresholds.iter().all(|t| (0.0..=1.0).contains(t)));
    }
});
