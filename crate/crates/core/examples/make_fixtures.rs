//! Regenerates the synthetic fixtures under `fixtures/`.
//!
//! cargo run -p entryshift-core --example make_fixtures

use std::path::PathBuf;

use entryshift::synth::{planted_corpus, planted_taxonomy, PlantedSpec};

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("planted.jsonl"), planted_corpus(&PlantedSpec::default()).to_jsonl())?;
    std::fs::write(dir.join("planted_taxonomy.json"), planted_taxonomy().to_json() + "\n")?;
    println!("wrote fixtures to {}", dir.display());
    Ok(())
}
