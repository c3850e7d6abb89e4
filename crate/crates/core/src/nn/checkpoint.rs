//! Model checkpoints: a JSON manifest plus a little-endian binary blob.
//!
//! `<stem>.json` lists every tensor (name, kind, shape, dtype) in blob
//! order; `<stem>.bin` holds the row-major tensors back to back. The
//! manifest also carries the format version, model tags, the producing
//! run's seed and free-form metadata (configs, references to other
//! checkpoints).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Real, RealArray};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub kind: String,
    pub shape: Vec<usize>,
    pub dtype: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub tags: Vec<String>,
    pub seed: u64,
    pub tensors: Vec<TensorEntry>,
    #[serde(default)]
    pub meta: serde_json::Map<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub manifest: Manifest,
    blob: Vec<u8>,
    offsets: Vec<usize>,
}

fn dtype_bytes(dtype: &str) -> Result<usize> {
    match dtype {
        "f64" => Ok(8),
        "f32" => Ok(4),
        other => Err(Error::Checkpoint(format!("unsupported dtype {other}"))),
    }
}

impl Checkpoint {
    pub fn new(tags: &[&str], seed: u64) -> Self {
        Self {
            manifest: Manifest {
                format_version: FORMAT_VERSION,
                tags: tags.iter().map(|s| s.to_string()).collect(),
                seed,
                tensors: Vec::new(),
                meta: serde_json::Map::new(),
            },
            blob: Vec::new(),
            offsets: Vec::new(),
        }
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.manifest.tags.iter().any(|t| t == tag)
    }

    pub fn set_meta(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.manifest.meta.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn meta<V: serde::de::DeserializeOwned>(&self, key: &str) -> Result<V> {
        let v = self
            .manifest
            .meta
            .get(key)
            .ok_or_else(|| Error::Checkpoint(format!("missing metadata key {key}")))?;
        Ok(serde_json::from_value(v.clone())?)
    }

    pub fn push<T: Real>(&mut self, name: &str, kind: &str, value: &RealArray<T>) {
        self.offsets.push(self.blob.len());
        for &v in value.data() {
            v.write_le(&mut self.blob);
        }
        self.manifest.tensors.push(TensorEntry {
            name: name.to_string(),
            kind: kind.to_string(),
            shape: value.shape().to_vec(),
            dtype: T::DTYPE.to_string(),
        });
    }

    pub fn tensor<T: Real>(&self, name: &str) -> Result<RealArray<T>> {
        let (i, entry) = self
            .manifest
            .tensors
            .iter()
            .enumerate()
            .find(|(_, e)| e.name == name)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))?;
        if entry.dtype != T::DTYPE {
            return Err(Error::Checkpoint(format!(
                "{name} stored as {}, requested {}",
                entry.dtype,
                T::DTYPE
            )));
        }
        let len: usize = entry.shape.iter().product();
        let start = self.offsets[i];
        let bytes = &self.blob[start..start + len * T::BYTES];
        let data = bytes.chunks_exact(T::BYTES).map(T::read_le).collect();
        RealArray::new(&entry.shape, data)
    }

    pub fn paths(stem: &Path) -> (PathBuf, PathBuf) {
        (stem.with_extension("json"), stem.with_extension("bin"))
    }

    pub fn save(&self, stem: &Path) -> Result<()> {
        let (json, bin) = Self::paths(stem);
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&json, text + "\n").map_err(|e| Error::io(&json, e))?;
        fs::write(&bin, &self.blob).map_err(|e| Error::io(&bin, e))?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let (json, bin) = Self::paths(stem);
        let text = fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "format version {} (supported: {FORMAT_VERSION})",
                manifest.format_version
            )));
        }
        let blob = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
        let mut offsets = Vec::with_capacity(manifest.tensors.len());
        let mut pos = 0;
        for e in &manifest.tensors {
            offsets.push(pos);
            pos += e.shape.iter().product::<usize>() * dtype_bytes(&e.dtype)?;
        }
        if pos != blob.len() {
            return Err(Error::Checkpoint(format!(
                "blob has {} bytes, manifest describes {pos}",
                blob.len()
            )));
        }
        Ok(Self {
            manifest,
            blob,
            offsets,
        })
    }
}
