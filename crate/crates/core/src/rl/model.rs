//! Versioned weight container.
//!
//! Layout: the bytes `MNQN`, a little-endian `u32` format version, a `u32`
//! header length, a JSON header (layer sizes, activations, training seed,
//! parameter count), the parameters as little-endian `f32`, and finally the
//! SHA-256 of everything before it.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::mlp::{param_count, Mlp};
use crate::error::{Error, Result};

pub const MODEL_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"MNQN";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    version: u32,
    layers: Vec<usize>,
    activations: Vec<String>,
    seed: u64,
    params: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    steps: Option<u64>,
}

/// A network together with the metadata stored next to it.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub net: Mlp<f32>,
    pub seed: u64,
    /// Environment steps the weights were trained for.
    pub steps: Option<u64>,
}

fn activations(layers: usize) -> Vec<String> {
    (0..layers - 1).map(|l| if l + 2 < layers { "relu" } else { "identity" }.to_string()).collect()
}

pub fn encode_model(model: &SavedModel) -> Vec<u8> {
    let sizes = model.net.sizes();
    let header = Header {
        version: MODEL_VERSION,
        layers: sizes.to_vec(),
        activations: activations(sizes.len()),
        seed: model.seed,
        params: model.net.params().len(),
        steps: model.steps,
    };
    let h = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(12 + h.len() + 4 * header.params + 32);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(h.len() as u32).to_le_bytes());
    out.extend_from_slice(&h);
    for p in model.net.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<SavedModel> {
    let bad = |m: String| Error::ModelFormat(m);
    if bytes.len() < 12 {
        return Err(bad(format!("truncated file ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("missing MNQN signature".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version == 0 {
        return Err(bad("format version 0 is not supported (expected 1)".into()));
    }
    if version != MODEL_VERSION {
        return Err(bad(format!("format version {version} is not supported (expected {MODEL_VERSION})")));
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if bytes.len() < 12 + hlen {
        return Err(bad("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&bytes[12..12 + hlen]).map_err(|e| bad(format!("header: {e}")))?;
    if header.version != version {
        return Err(bad(format!("header version {} disagrees with container version {version}", header.version)));
    }
    if header.layers.len() < 2 || header.layers.contains(&0) || param_count(&header.layers) != header.params {
        return Err(bad(format!("layer shapes {:?} do not match {} parameters", header.layers, header.params)));
    }
    if header.activations != activations(header.layers.len()) {
        return Err(bad(format!("unsupported activations {:?}", header.activations)));
    }
    let body = 12 + hlen + 4 * header.params;
    if bytes.len() < body + 32 {
        return Err(bad(format!("truncated file: {} bytes, expected {}", bytes.len(), body + 32)));
    }
    if bytes.len() > body + 32 {
        return Err(bad(format!("{} trailing bytes", bytes.len() - body - 32)));
    }
    if Sha256::digest(&bytes[..body]).as_slice() != &bytes[body..] {
        return Err(bad("checksum mismatch".into()));
    }
    let params = bytes[12 + hlen..body].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    let net = Mlp::from_params(&header.layers, params).ok_or_else(|| bad("parameter count mismatch".into()))?;
    if net.params().iter().any(|p| !p.is_finite()) {
        return Err(bad("non-finite parameter".into()));
    }
    Ok(SavedModel { net, seed: header.seed, steps: header.steps })
}

pub fn save_model(path: impl AsRef<Path>, model: &SavedModel) -> Result<()> {
    std::fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    decode_model(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Prng;

    fn sample() -> SavedModel {
        SavedModel { net: Mlp::new(&[16, 8, 9], &mut Prng::new(1)), seed: 42, steps: Some(10) }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = sample();
        let back = decode_model(&encode_model(&m)).unwrap();
        assert_eq!(back, m);
        let x = [0.25f32; 16];
        assert_eq!(back.net.forward(&x, 1), m.net.forward(&x, 1));
    }

    #[test]
    fn damaged_files_rejected() {
        let bytes = encode_model(&sample());
        assert!(matches!(decode_model(&bytes[..bytes.len() - 5]), Err(Error::ModelFormat(_))));
        let mut flipped = bytes.clone();
        flipped[40] ^= 1;
        assert!(decode_model(&flipped).is_err());
        let mut v0 = bytes.clone();
        v0[4..8].copy_from_slice(&0u32.to_le_bytes());
        let err = decode_model(&v0).unwrap_err().to_string();
        assert!(err.contains("version 0"), "{err}");
    }
}
