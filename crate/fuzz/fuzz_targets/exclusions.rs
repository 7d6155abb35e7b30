#![no_main]

use entryshift::corpus::{Entry, Split};
use entryshift::counterfactual::{detect_bias_label, ExclusionRules, SwapLexicon};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(rules) = ExclusionRules::parse(data) {
        // Parsed rules must be usable by the detector.
        let e = Entry::new("e", "Women and girls in the camp", Split::Test);
        let _ = detect_bias_label(&e, &SwapLexicon::default_gender(), &rules);
    }
});
