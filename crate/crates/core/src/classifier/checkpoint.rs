//! Binary model format:
//!
//! ```text
//! magic "ESHIFTM\0" | version u32 | config len u32 | config text
//! | taxonomy len u32 | taxonomy json | param count u64 | f64 params
//! | sha-256 of everything before it
//! ```
//! All integers and floats are little-endian.

use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::config::{apply_config_text, arch_echo};
use super::{ArchitectureConfig, ModelError, ModelParameters, TrainConfig};
use crate::corpus::TagTaxonomy;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ESHIFTM\0";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint(model: &ModelParameters) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + model.values().len() * 8);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend(CHECKPOINT_VERSION.to_le_bytes());
    for block in [arch_echo(model.arch()), model.taxonomy().to_json()] {
        out.extend((block.len() as u32).to_le_bytes());
        out.extend(block.as_bytes());
    }
    out.extend((model.values().len() as u64).to_le_bytes());
    for v in model.values() {
        out.extend(v.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ModelError> {
        if self.bytes.len() - self.at < n {
            return Err(ModelError::Checkpoint(format!("truncated while reading {what}")));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn text(&mut self, what: &str) -> Result<&'a str, ModelError> {
        let n = self.u32(what)? as usize;
        std::str::from_utf8(self.take(n, what)?).map_err(|_| ModelError::Checkpoint(format!("{what} is not UTF-8")))
    }
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<ModelParameters, ModelError> {
    let bad = |m: &str| ModelError::Checkpoint(m.to_string());
    if bytes.len() < CHECKPOINT_MAGIC.len() + 32 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("not a model checkpoint"));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 32);
    let mut r = Reader { bytes: body, at: 8 };
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(ModelError::Checkpoint(format!("unsupported version {version}")));
    }
    if Sha256::digest(body).as_slice() != trailer {
        return Err(bad("checksum mismatch"));
    }
    let config = r.text("config")?;
    let mut arch = ArchitectureConfig::default();
    apply_config_text(config, &mut arch, &mut TrainConfig::default())?;
    let taxonomy = TagTaxonomy::from_json(r.text("taxonomy")?).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    let n = r.u64("parameter count")?;
    let remaining = (body.len() - r.at) as u64;
    if n.checked_mul(8) != Some(remaining) {
        return Err(bad("parameter count does not match payload size"));
    }
    let values: Vec<f64> = r
        .take(remaining as usize, "parameters")?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad("non-finite parameter"));
    }
    ModelParameters::from_parts(arch, Arc::new(taxonomy), values)
}
