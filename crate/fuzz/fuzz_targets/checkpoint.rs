#![no_main]

use entryshift::classifier::{read_checkpoint, write_checkpoint};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = read_checkpoint(data) {
        assert_eq!(write_checkpoint(&model), data);
    }
});
