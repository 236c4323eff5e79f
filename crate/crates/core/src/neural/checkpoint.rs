//! Checkpoint container.
//!
//! Layout: 8-byte magic, u32 format version, u64 header length, JSON header,
//! then for every store and every tensor in header order the values, first
//! moments and second moments as row-major little-endian f32.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::params::{Matrix, ParamStore};

pub const MAGIC: &[u8; 8] = b"MOLGANCK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("truncated checkpoint")]
    Truncated,
    #[error("malformed checkpoint header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("checkpoint has no store named {0}")]
    MissingStore(String),
    #[error("tensor {name}: checkpoint shape {found:?}, model shape {expected:?}")]
    Shape { name: String, expected: Vec<usize>, found: Vec<usize> },
    #[error("tensor {0} is not two-dimensional")]
    NotMatrix(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub name: String,
    pub adam_step: u64,
    pub tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub code_version: String,
    /// Caller-defined run state (training step, baseline, ...).
    pub state: serde_json::Value,
    pub stores: Vec<StoreEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: Header,
    pub stores: Vec<ParamStore>,
}

impl Checkpoint {
    pub fn new(seed: u64, config_hash: &str, state: serde_json::Value, stores: Vec<(&str, &ParamStore)>) -> Checkpoint {
        let header = Header {
            format_version: FORMAT_VERSION,
            seed,
            config_hash: config_hash.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            state,
            stores: stores
                .iter()
                .map(|(name, s)| StoreEntry {
                    name: name.to_string(),
                    adam_step: s.step,
                    tensors: s
                        .params()
                        .iter()
                        .map(|p| TensorEntry { name: p.name.clone(), shape: p.value.shape().to_vec() })
                        .collect(),
                })
                .collect(),
        };
        Checkpoint { header, stores: stores.into_iter().map(|(_, s)| s.clone()).collect() }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header).expect("header serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for store in &self.stores {
            for p in store.params() {
                for m in [&p.value, &p.m, &p.v] {
                    for &x in m.iter() {
                        out.extend_from_slice(&(x as f32).to_le_bytes());
                    }
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(CheckpointError::Version(version));
        }
        let len = u64::from_le_bytes(r.take(8)?.try_into().unwrap()) as usize;
        let header: Header = serde_json::from_slice(r.take(len)?)?;
        let mut stores = Vec::new();
        for entry in &header.stores {
            let mut store = ParamStore::new();
            for t in &entry.tensors {
                let shape = match t.shape[..] {
                    [r, c] => (r, c),
                    _ => return Err(CheckpointError::NotMatrix(t.name.clone())),
                };
                let value = r.matrix(shape)?;
                let id = store.add(t.name.clone(), value);
                let m = r.matrix(shape)?;
                let v = r.matrix(shape)?;
                let p = &mut store.params_mut()[id.0];
                p.m = m;
                p.v = v;
            }
            store.step = entry.adam_step;
            stores.push(store);
        }
        if r.pos != bytes.len() {
            return Err(CheckpointError::Truncated);
        }
        Ok(Checkpoint { header, stores })
    }

    pub fn store(&self, name: &str) -> Result<&ParamStore, CheckpointError> {
        self.header
            .stores
            .iter()
            .position(|s| s.name == name)
            .map(|i| &self.stores[i])
            .ok_or_else(|| CheckpointError::MissingStore(name.to_string()))
    }

    /// Writes through a temporary file and renames it into place, so an
    /// existing checkpoint is never left half-written.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
        Checkpoint::from_bytes(&std::fs::read(path)?)
    }
}

/// Copies values and optimizer state from `src` into `dst`, matching by
/// name and checking shapes.
pub fn restore_into(dst: &mut ParamStore, src: &ParamStore) -> Result<(), CheckpointError> {
    for id in dst.ids().collect::<Vec<_>>() {
        let name = dst.param(id).name.clone();
        let sid = src.id(&name).ok_or_else(|| CheckpointError::MissingStore(name.clone()))?;
        let from = src.param(sid);
        if from.value.shape() != dst.value(id).shape() {
            return Err(CheckpointError::Shape {
                name,
                expected: dst.value(id).shape().to_vec(),
                found: from.value.shape().to_vec(),
            });
        }
        let p = &mut dst.params_mut()[id.0];
        p.value = from.value.clone();
        p.m = from.m.clone();
        p.v = from.v.clone();
        p.grad.fill(0.0);
    }
    dst.step = src.step;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(CheckpointError::Truncated)?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn matrix(&mut self, shape: (usize, usize)) -> Result<Matrix, CheckpointError> {
        let raw = self.take(shape.0 * shape.1 * 4)?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
        Ok(Matrix::from_shape_vec(shape, data).expect("length matches shape"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::params::Adam;
    use crate::neural::rng::stream;

    fn sample_store() -> ParamStore {
        let mut s = ParamStore::new();
        let mut rng = stream(5, "ck", &[]);
        let a = s.add_uniform("a", 2, 3, 1.0, &mut rng);
        s.add_uniform("b", 1, 4, 1.0, &mut rng);
        s.grad_mut(a).fill(0.01);
        s.adam_update(&Adam::new(1e-3));
        s
    }

    #[test]
    fn round_trip_after_rounding() {
        let mut s = sample_store();
        s.round_to_f32();
        let ck = Checkpoint::new(9, "abc", serde_json::json!({"step": 3}), vec![("gen", &s)]);
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.header, ck.header);
        let restored = back.store("gen").unwrap();
        assert_eq!(restored.step, 1);
        for (p, q) in s.params().iter().zip(restored.params()) {
            assert_eq!(p.value, q.value);
            assert_eq!(p.m, q.m);
            assert_eq!(p.v, q.v);
        }
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(Checkpoint::from_bytes(b"nope"), Err(CheckpointError::Truncated)));
        assert!(matches!(Checkpoint::from_bytes(b"NOTACKPTxxxxxxxxxxxx"), Err(CheckpointError::BadMagic)));
        let ck = Checkpoint::new(1, "h", serde_json::Value::Null, vec![("gen", &sample_store())]);
        let bytes = ck.to_bytes();
        assert!(matches!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]), Err(CheckpointError::Truncated)));
    }
}
