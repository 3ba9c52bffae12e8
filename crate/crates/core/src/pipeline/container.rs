//! Single-file model container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "HANFORGE"            8 bytes
//! format version        u32
//! manifest length       u64
//! manifest              JSON: config, vocabulary, schemes, tensor table
//! tensor data           f32, row-major, at the offsets in the table
//! SHA-256               32 bytes over everything above
//! ```
//!
//! Parameters are kept at single precision during training, so a
//! save/load round trip reproduces them exactly.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::vocab::Vocabulary;

use super::{Model, ModelConfig, Schemes};

pub const MAGIC: &[u8; 8] = b"HANFORGE";
pub const FORMAT_VERSION: u32 = 1;
const HEADER: usize = 8 + 4 + 8;
const DIGEST: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset from the start of the tensor data.
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub config: ModelConfig,
    pub vocabulary: Vocabulary,
    pub schemes: Schemes,
    pub tensors: Vec<TensorInfo>,
}

pub fn to_bytes(model: &Model) -> Result<Vec<u8>> {
    let mut tensors = Vec::new();
    let mut data = Vec::new();
    for e in model.params.entries() {
        tensors.push(TensorInfo {
            name: e.name.clone(),
            shape: e.shape.clone(),
            offset: data.len(),
        });
        for &v in e.data {
            data.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        config: model.config.clone(),
        vocabulary: model.vocab.clone(),
        schemes: model.schemes.clone(),
        tensors,
    };
    let json = serde_json::to_vec(&manifest).map_err(|e| Error::Config(format!("manifest: {e}")))?;
    let mut out = Vec::with_capacity(HEADER + json.len() + data.len() + DIGEST);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&data);
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptContainer(msg.into())
}

/// Reads the header and manifest without materializing parameters.
pub fn read_manifest(bytes: &[u8]) -> Result<(Manifest, &[u8])> {
    if bytes.len() < HEADER || &bytes[..8] != MAGIC {
        return Err(corrupt("not a model container"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::FormatVersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    if bytes.len() < HEADER + DIGEST {
        return Err(corrupt("truncated container"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST);
    if Sha256::digest(body).as_slice() != digest {
        return Err(corrupt("checksum mismatch"));
    }
    let len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let len = usize::try_from(len).map_err(|_| corrupt("manifest length overflow"))?;
    let end = HEADER.checked_add(len).filter(|&e| e <= body.len()).ok_or_else(|| corrupt("manifest overruns file"))?;
    let manifest: Manifest =
        serde_json::from_slice(&body[HEADER..end]).map_err(|e| corrupt(format!("manifest: {e}")))?;
    if manifest.format_version != version {
        return Err(corrupt("manifest version disagrees with header"));
    }
    Ok((manifest, &body[end..]))
}

pub fn from_bytes(bytes: &[u8]) -> Result<Model> {
    let (manifest, data) = read_manifest(bytes)?;
    // Parameter values are overwritten below; the seed only fixes the layout.
    let mut model = Model::new(
        manifest.config,
        manifest.vocabulary,
        manifest.schemes,
        &mut ChaCha8Rng::seed_from_u64(0),
    )
    .map_err(|e| corrupt(format!("inconsistent manifest: {e}")))?;
    let entries = model.params.entries_mut();
    if entries.len() != manifest.tensors.len() {
        return Err(corrupt(format!(
            "{} tensors stored, model needs {}",
            manifest.tensors.len(),
            entries.len()
        )));
    }
    let mut covered = 0usize;
    for (entry, info) in entries.into_iter().zip(&manifest.tensors) {
        if entry.name != info.name || entry.shape != info.shape {
            return Err(corrupt(format!("unexpected tensor `{}` {:?}", info.name, info.shape)));
        }
        let n = entry.data.len();
        let slice = info
            .offset
            .checked_add(4 * n)
            .and_then(|end| data.get(info.offset..end))
            .ok_or_else(|| corrupt(format!("tensor `{}` overruns data", info.name)))?;
        for (dst, chunk) in entry.data.iter_mut().zip(slice.chunks_exact(4)) {
            *dst = f32::from_le_bytes(chunk.try_into().expect("4 bytes")) as f64;
        }
        covered += 4 * n;
    }
    if covered != data.len() {
        return Err(corrupt("trailing tensor data"));
    }
    Ok(model)
}

pub fn save(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(model)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Model> {
    from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::tests::tiny_model;

    #[test]
    fn round_trip_is_exact() {
        let m = tiny_model();
        let back = from_bytes(&to_bytes(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn version_checked_before_checksum() {
        let mut bytes = to_bytes(&tiny_model()).unwrap();
        bytes[8..12].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(
            from_bytes(&bytes),
            Err(Error::FormatVersionMismatch { found: 7, expected: 1 })
        ));
    }

    #[test]
    fn damage_detected() {
        let bytes = to_bytes(&tiny_model()).unwrap();
        let mut flipped = bytes.clone();
        let mid = flipped.len() - 100;
        flipped[mid] ^= 1;
        assert!(matches!(from_bytes(&flipped), Err(Error::CorruptContainer(_))));
        assert!(matches!(from_bytes(&bytes[..bytes.len() - 1]), Err(Error::CorruptContainer(_))));
        assert!(matches!(from_bytes(&bytes[..10]), Err(Error::CorruptContainer(_))));
        assert!(matches!(from_bytes(b"not a model at all"), Err(Error::CorruptContainer(_))));
    }
}
