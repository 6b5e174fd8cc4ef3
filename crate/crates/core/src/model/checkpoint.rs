//! Checkpoint file layout:
//!
//! ```text
//! b"GIATCKPT"                  8 bytes magic
//! header_len: u64 LE           8 bytes
//! header: UTF-8 JSON           header_len bytes
//! params: f64 LE × n_values    in `Parameters::tensors` order
//! ```
//!
//! The header records the model config, class names, curve names, the
//! normalization fitted on the training wells, the selected epoch and its
//! blind loss, and the name and length of every tensor in the blob.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::csc::CscFilterBank;
use crate::error::{GiatError, Result};
use crate::model::params::Parameters;
use crate::model::ModelConfig;
use crate::welllog::{LithologyCatalog, NormalizationStats};

const MAGIC: &[u8; 8] = b"GIATCKPT";
const FORMAT: &str = "giat-checkpoint-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub config: ModelConfig,
    pub class_names: Vec<String>,
    pub curve_names: Vec<String>,
    pub normalization: Option<NormalizationStats>,
    pub epoch: usize,
    pub blind_loss: f64,
    pub tensors: Vec<TensorEntry>,
    pub n_values: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: Parameters,
    pub catalog: LithologyCatalog,
    pub curve_names: Vec<String>,
    pub normalization: Option<NormalizationStats>,
    pub epoch: usize,
    pub blind_loss: f64,
}

impl Checkpoint {
    pub fn header(&self) -> CheckpointHeader {
        let tensors: Vec<TensorEntry> = self
            .params
            .tensors()
            .into_iter()
            .map(|(name, t)| TensorEntry { name, len: t.len() })
            .collect();
        CheckpointHeader {
            format: FORMAT.into(),
            config: self.params.config().clone(),
            class_names: self.catalog.names().to_vec(),
            curve_names: self.curve_names.clone(),
            normalization: self.normalization.clone(),
            epoch: self.epoch,
            blind_loss: self.blind_loss,
            n_values: tensors.iter().map(|t| t.len).sum(),
            tensors,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header())?;
        let flat = self.params.to_flat();
        let mut out = Vec::with_capacity(16 + header.len() + 8 * flat.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for x in flat {
            out.extend_from_slice(&x.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fmt = |m: String| GiatError::Format(m);
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(fmt("not a checkpoint (bad magic)".into()));
        }
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = bytes
            .get(16..16usize.saturating_add(header_len))
            .ok_or_else(|| fmt("truncated header".into()))?;
        let header: CheckpointHeader = serde_json::from_slice(body)?;
        if header.format != FORMAT {
            return Err(fmt(format!("unsupported format {:?}", header.format)));
        }
        let expected = Parameters::count_for(&header.config);
        let listed: usize = header.tensors.iter().map(|t| t.len).sum();
        if header.n_values != expected || listed != expected {
            return Err(fmt(format!(
                "header lists {} values ({listed} in tensors), config requires {expected}",
                header.n_values
            )));
        }
        let blob = &bytes[16 + header_len..];
        if blob.len() != 8 * expected {
            return Err(fmt(format!(
                "parameter blob holds {} bytes, expected {}",
                blob.len(),
                8 * expected
            )));
        }
        let flat: Vec<f64> = blob
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let params = Parameters::from_flat(&header.config, &flat)?;
        let layout: Vec<TensorEntry> = params
            .tensors()
            .into_iter()
            .map(|(name, t)| TensorEntry { name, len: t.len() })
            .collect();
        if layout != header.tensors {
            return Err(fmt("tensor table does not match the config layout".into()));
        }
        let catalog = LithologyCatalog::new(header.class_names)?;
        if catalog.num_classes() != header.config.n_classes
            || header.curve_names.len() != header.config.n_curves
        {
            return Err(GiatError::CatalogMismatch(
                "class or curve names disagree with the model config".into(),
            ));
        }
        Ok(Checkpoint {
            params,
            catalog,
            curve_names: header.curve_names,
            normalization: header.normalization,
            epoch: header.epoch,
            blind_loss: header.blind_loss,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()?).map_err(|e| GiatError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| GiatError::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Fails unless `bank` has this model's classes and curves, in order.
    pub fn check_bank(&self, bank: &CscFilterBank) -> Result<()> {
        if bank.catalog() != &self.catalog {
            return Err(GiatError::CatalogMismatch(format!(
                "filter bank classes {:?}, checkpoint classes {:?}",
                bank.catalog().names(),
                self.catalog.names()
            )));
        }
        if bank.curve_names() != self.curve_names {
            return Err(GiatError::CurveMismatch {
                expected: self.curve_names.clone(),
                found: bank.curve_names().to_vec(),
            });
        }
        Ok(())
    }
}
