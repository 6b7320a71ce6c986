//! Binary model container: `SWK1`, a little-endian `u32` header length, a
//! JSON header (format version, model type, config, vocabulary and the
//! parameter manifest), then every parameter as little-endian `f32` in
//! manifest order.

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::nn::Scalar;

use super::{Architecture, MelodyModel, ModelConfig, ModelError};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SWK1";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    shape: Vec<usize>,
    /// Byte offset from the start of the data section.
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    model_type: Architecture,
    config: ModelConfig,
    vocab: serde_json::Value,
    params: Vec<ManifestEntry>,
}

fn err(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

pub fn save_checkpoint<T: Scalar>(model: &MelodyModel<T>) -> Vec<u8> {
    let mut offset = 0;
    let params = model
        .params
        .iter()
        .map(|p| {
            let entry = ManifestEntry {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                offset,
            };
            offset += 4 * p.value.len();
            entry
        })
        .collect();
    let header = Header {
        format_version: FORMAT_VERSION,
        model_type: model.arch,
        config: model.config.clone(),
        vocab: model.vocab.to_json_value(),
        params,
    };
    let header = serde_json::to_vec(&header).expect("header serialization is infallible");
    let mut out = Vec::with_capacity(8 + header.len() + offset);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for p in model.params.iter() {
        for x in p.value.data() {
            out.extend_from_slice(&(x.f64() as f32).to_le_bytes());
        }
    }
    out
}

pub fn load_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<MelodyModel<T>, ModelError> {
    if bytes.len() < 8 {
        return Err(err("file is shorter than the fixed preamble"));
    }
    if &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(err("bad magic bytes"));
    }
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().expect("slice of four bytes")) as usize;
    let data_start = 8usize
        .checked_add(header_len)
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| err("truncated header"))?;
    let header: Header = serde_json::from_slice(&bytes[8..data_start]).map_err(|e| err(format!("header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(err(format!("unsupported format version {}", header.format_version)));
    }
    let vocab = Vocabulary::from_json_value(header.vocab)?;
    let mut model = MelodyModel::<T>::uninitialized(header.config, header.model_type, vocab)?;
    if header.params.len() != model.params.len() {
        return Err(err(format!(
            "manifest lists {} parameters, model has {}",
            header.params.len(),
            model.params.len()
        )));
    }
    let data = &bytes[data_start..];
    let mut expected_offset = 0;
    for (entry, param) in header.params.iter().zip(model.params.iter_mut()) {
        if entry.name != param.name || entry.shape != param.value.shape() {
            return Err(err(format!(
                "manifest entry {} {:?} does not match parameter {} {:?}",
                entry.name,
                entry.shape,
                param.name,
                param.value.shape()
            )));
        }
        if entry.offset != expected_offset {
            return Err(err(format!(
                "parameter {} has offset {}, expected {expected_offset}",
                entry.name, entry.offset
            )));
        }
        let len = 4 * param.value.len();
        let chunk = data
            .get(entry.offset..entry.offset + len)
            .ok_or_else(|| err(format!("truncated data for parameter {}", entry.name)))?;
        for (x, b) in param.value.data_mut().iter_mut().zip(chunk.chunks_exact(4)) {
            *x = T::of(f32::from_le_bytes(b.try_into().expect("chunk of four bytes")) as f64);
        }
        expected_offset += len;
    }
    if data.len() != expected_offset {
        return Err(err(format!(
            "data section holds {} bytes, manifest describes {expected_offset}",
            data.len()
        )));
    }
    Ok(model)
}
