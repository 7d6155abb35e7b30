#![no_main]

use entryshift::corpus::TagTaxonomy;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(tax) = TagTaxonomy::from_json(data) {
        assert_eq!(TagTaxonomy::from_json(&tax.to_json()).expect("round trip"), tax);
    }
});
