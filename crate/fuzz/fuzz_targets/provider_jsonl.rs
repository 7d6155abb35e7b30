#![no_main]

use entryshift::zeroshot::FileProvider;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = FileProvider::parse_jsonl(data);
});
