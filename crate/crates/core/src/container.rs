//! Single-file model container.
//!
//! ```text
//! "LINRZMDL"            8 bytes
//! format version        u32, little endian
//! header length         u64, little endian
//! header                UTF-8 JSON
//! tensor payloads       f64, little endian, in header order
//! ```
//!
//! The header records the component tag, symbol tables, variant, training
//! configuration, feature slot layout and the name and shape of every
//! tensor. Serialization is deterministic, so saving a loaded model
//! reproduces the original bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::corpus::Indexers;
use crate::error::{Error, Result};
use crate::features::{slot_layout, LABEL_SLOTS, POS_SLOTS, WORD_SLOTS};
use crate::ffnn::{ActionInventory, LinearizerParams, TrainConfig};
use crate::lstm_lm::{LanguageModel, LmConfig, LmParams, LstmLayer};
use crate::model::Linearizer;
use crate::optim::{TensorRef, Tensors};
use crate::transition::Variant;

pub const MAGIC: &[u8; 8] = b"LINRZMDL";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Linearizer,
    Lm,
    /// A linearizer with LM features, bundled with its language model.
    Combined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LinearizerHeader {
    variant: Variant,
    config: TrainConfig,
    feature_layout: Vec<String>,
    lm_dim: Option<usize>,
    indexers: Indexers,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LmHeader {
    config: LmConfig,
    indexers: Indexers,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    component: Component,
    linearizer: Option<LinearizerHeader>,
    lm: Option<LmHeader>,
    tensors: Vec<TensorEntry>,
}

/// The contents of a model file.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub linearizer: Option<Linearizer>,
    pub lm: Option<LanguageModel>,
}

impl ModelFile {
    pub fn linearizer(model: Linearizer) -> ModelFile {
        ModelFile {
            linearizer: Some(model),
            lm: None,
        }
    }

    pub fn lm(model: LanguageModel) -> ModelFile {
        ModelFile {
            linearizer: None,
            lm: Some(model),
        }
    }

    pub fn component(&self) -> Result<Component> {
        match (&self.linearizer, &self.lm) {
            (Some(l), None) if !l.uses_lm() => Ok(Component::Linearizer),
            (Some(l), Some(_)) if l.uses_lm() => Ok(Component::Combined),
            (None, Some(_)) => Ok(Component::Lm),
            (Some(_), None) => Err(Error::Format(
                "a linearizer with LM features must be stored with its language model".into(),
            )),
            (Some(_), Some(_)) => Err(Error::Format(
                "only a linearizer with LM features is stored with a language model".into(),
            )),
            (None, None) => Err(Error::Format("nothing to store".into())),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let component = self.component()?;
        let mut tensors: Vec<TensorRef<'_>> = Vec::new();
        if let Some(l) = &self.linearizer {
            tensors.extend(l.params.tensors());
        }
        if let Some(lm) = &self.lm {
            tensors.extend(lm.params.tensors());
        }
        let header = Header {
            format_version: FORMAT_VERSION,
            component,
            linearizer: self.linearizer.as_ref().map(|l| LinearizerHeader {
                variant: l.variant,
                config: l.config.clone(),
                feature_layout: slot_layout(l.variant),
                lm_dim: l.params.lm_dim(),
                indexers: l.indexers.clone(),
            }),
            lm: self.lm.as_ref().map(|lm| LmHeader {
                config: lm.config.clone(),
                indexers: lm.indexers.clone(),
            }),
            tensors: tensors
                .iter()
                .map(|t| TensorEntry {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header)?;
        let payload: usize = tensors.iter().map(|t| t.data.len()).sum();
        let mut out = Vec::with_capacity(20 + json.len() + 8 * payload);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for t in &tensors {
            for x in t.data {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ModelFile> {
        let bad = |m: &str| Error::Format(m.to_string());
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a model file (bad magic)"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "format version {version}, this build reads version {FORMAT_VERSION}"
            )));
        }
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let header_end = 20usize
            .checked_add(header_len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(&bytes[20..header_end])?;
        if header.format_version != FORMAT_VERSION {
            return Err(bad("header and preamble disagree on the format version"));
        }

        let payload = &bytes[header_end..];
        let expected: usize = header
            .tensors
            .iter()
            .map(|t| t.shape.iter().product::<usize>())
            .sum();
        if payload.len() != 8 * expected {
            return Err(Error::Format(format!(
                "shape table describes {expected} values but the payload holds {} bytes",
                payload.len()
            )));
        }
        let mut tensors: BTreeMap<String, (Vec<usize>, Vec<f64>)> = BTreeMap::new();
        let mut offset = 0;
        for t in &header.tensors {
            let len: usize = t.shape.iter().product();
            let data = payload[offset..offset + 8 * len]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            offset += 8 * len;
            if tensors.insert(t.name.clone(), (t.shape.clone(), data)).is_some() {
                return Err(Error::Format(format!("tensor {} stored twice", t.name)));
            }
        }
        let mut table = TensorTable(tensors);

        let linearizer = match header.linearizer {
            Some(h) => Some(read_linearizer(h, &mut table)?),
            None => None,
        };
        let lm = match header.lm {
            Some(h) => Some(read_lm(h, &mut table)?),
            None => None,
        };
        if let Some(name) = table.0.keys().next() {
            return Err(Error::Format(format!("unexpected tensor {name}")));
        }
        let file = ModelFile { linearizer, lm };
        if file.component()? != header.component {
            return Err(bad("component tag does not match the stored models"));
        }
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()?).map_err(|e| Error::from(e).in_file(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ModelFile> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
        ModelFile::from_bytes(&bytes).map_err(|e| e.in_file(path))
    }
}

struct TensorTable(BTreeMap<String, (Vec<usize>, Vec<f64>)>);

impl TensorTable {
    fn take(&mut self, name: &str, shape: &[usize]) -> Result<Vec<f64>> {
        let (stored, data) = self
            .0
            .remove(name)
            .ok_or_else(|| Error::Format(format!("missing tensor {name}")))?;
        if stored != shape {
            return Err(Error::Format(format!(
                "tensor {name} has shape {stored:?}, expected {shape:?}"
            )));
        }
        Ok(data)
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let data = self.take(name, &[rows, cols])?;
        Ok(Array2::from_shape_vec((rows, cols), data).expect("shape checked"))
    }

    fn vector(&mut self, name: &str, len: usize) -> Result<Array1<f64>> {
        Ok(Array1::from(self.take(name, &[len])?))
    }

    fn cols(&self, name: &str) -> Result<usize> {
        match self.0.get(name) {
            Some((shape, _)) if shape.len() == 2 => Ok(shape[1]),
            _ => Err(Error::Format(format!("missing or malformed tensor {name}"))),
        }
    }
}

fn read_linearizer(h: LinearizerHeader, t: &mut TensorTable) -> Result<Linearizer> {
    if h.feature_layout != slot_layout(h.variant) {
        return Err(Error::Format("feature slot layout differs from this build".into()));
    }
    let d = t.cols("E_w")?;
    let hidden = t.cols("W2")?;
    let full = h.variant == Variant::Full;
    let ix = &h.indexers;
    let word_emb = t.matrix("E_w", ix.n_words(), d)?;
    let pos_emb = full.then(|| t.matrix("E_t", ix.n_pos(), d)).transpose()?;
    let label_emb = full.then(|| t.matrix("E_l", ix.n_labels(), d)).transpose()?;
    let w1_word = t.matrix("W1_w", hidden, WORD_SLOTS * d)?;
    let w1_pos = full.then(|| t.matrix("W1_t", hidden, POS_SLOTS * d)).transpose()?;
    let w1_label = full.then(|| t.matrix("W1_l", hidden, LABEL_SLOTS * d)).transpose()?;
    let w1_lm = h.lm_dim.map(|l| t.matrix("W1_lm", hidden, l)).transpose()?;
    let b1 = t.vector("b1", hidden)?;
    let w2 = t.matrix("W2", ActionInventory::new(h.variant, ix).len(), hidden)?;
    Ok(Linearizer {
        variant: h.variant,
        config: h.config,
        params: LinearizerParams {
            variant: h.variant,
            word_emb,
            pos_emb,
            label_emb,
            w1_word,
            w1_pos,
            w1_label,
            w1_lm,
            b1,
            w2,
        },
        indexers: h.indexers,
    })
}

fn read_lm(h: LmHeader, t: &mut TensorTable) -> Result<LanguageModel> {
    let v = h.indexers.n_words() + 2;
    let n = h.config.n_units;
    let embed = t.matrix("lm.embed", v, n)?;
    let layers = (0..h.config.layers)
        .map(|l| {
            Ok(LstmLayer {
                w: t.matrix(&format!("lm.layer{l}.W"), 4 * n, 2 * n)?,
                b: h
                    .config
                    .bias
                    .then(|| t.vector(&format!("lm.layer{l}.b"), 4 * n))
                    .transpose()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let out = t.matrix("lm.out", v, n)?;
    Ok(LanguageModel {
        config: h.config,
        indexers: h.indexers,
        params: LmParams { embed, layers, out },
    })
}
