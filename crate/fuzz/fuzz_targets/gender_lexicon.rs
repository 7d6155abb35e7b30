#![no_main]

use entryshift::counterfactual::parse_gender_lexicon;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = parse_gender_lexicon(data);
});
