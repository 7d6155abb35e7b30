#![no_main]

use entryshift::corpus::default_taxonomy;
use entryshift::zeroshot::Verbalizer;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = Verbalizer::parse_csv(data, &default_taxonomy());
});
