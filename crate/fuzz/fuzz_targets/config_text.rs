#![no_main]

use entryshift::classifier::{apply_config_text, ArchitectureConfig, TrainConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let (mut arch, mut train) = (ArchitectureConfig::default(), TrainConfig::desk());
    let _ = apply_config_text(data, &mut arch, &mut train);
});
