use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use entryshift::corpus::{default_taxonomy, load_dataset, Dataset, TagTaxonomy};

/// Writes through a temp file in the destination directory and renames it
/// into place, so a crash never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write to {}", dir.display()))?;
    tmp.write_all(bytes).with_context(|| format!("cannot write {}", path.display()))?;
    tmp.as_file().sync_all().with_context(|| format!("cannot write {}", path.display()))?;
    tmp.persist(path).with_context(|| format!("cannot replace {}", path.display()))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// `model.bin` -> `model.bin.config`
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// `data/foo.jsonl` -> `data/foo_taxonomy.json`
fn taxonomy_beside(data: &Path) -> Option<PathBuf> {
    let stem = data.file_stem()?.to_str()?;
    let p = data.with_file_name(format!("{stem}_taxonomy.json"));
    p.is_file().then_some(p)
}

/// An explicit taxonomy file, else `<stem>_taxonomy.json` next to the data,
/// else the built-in framework.
pub fn resolve_taxonomy(explicit: Option<&Path>, data: &Path) -> Result<Arc<TagTaxonomy>> {
    let path = match explicit {
        Some(p) => Some(p.to_path_buf()),
        None => taxonomy_beside(data),
    };
    match path {
        Some(p) => {
            if explicit.is_none() {
                eprintln!("using taxonomy {}", p.display());
            }
            let tax = TagTaxonomy::from_json(&read_text(&p)?).with_context(|| format!("in {}", p.display()))?;
            Ok(Arc::new(tax))
        }
        None => Ok(Arc::new(default_taxonomy())),
    }
}

pub fn load(data: &Path, taxonomy: Arc<TagTaxonomy>) -> Result<Dataset> {
    Ok(load_dataset(data, taxonomy)?)
}

pub fn print_json(value: &serde_json::Value) {
    println!("{value}");
}
