//! Versioned model files: magic, format version, JSON header, then every
//! network's weights and biases as little-endian f64 with a checksum.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::loss::pair_score;
use super::mlp::{Mlp, NetworkSpec};
use super::train::TrainConfig;
use super::NeuralError;
use crate::featurize::{fnv1a, SparseVec};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"RMMODEL\0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub kind: String,
    /// Feature representation the model consumes.
    pub feature: String,
    pub seed: u64,
    pub dataset_hash: String,
    pub config: TrainConfig,
    #[serde(default)]
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    meta: ModelMeta,
    nets: Vec<(String, NetworkSpec)>,
    payload_len: u64,
    checksum: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub meta: ModelMeta,
    pub nets: Vec<(String, Mlp)>,
}

impl ModelFile {
    pub fn net(&self, name: &str) -> Result<&Mlp, NeuralError> {
        self.nets
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| NeuralError::Corrupt(format!("missing network `{name}`")))
    }
}

pub fn write_model<W: Write>(mut out: W, model: &ModelFile) -> Result<(), NeuralError> {
    let mut payload = Vec::new();
    for (_, net) in &model.nets {
        for x in net.params() {
            payload.extend_from_slice(&x.to_le_bytes());
        }
    }
    let header = Header {
        format_version: FORMAT_VERSION,
        meta: model.meta.clone(),
        nets: model.nets.iter().map(|(n, m)| (n.clone(), m.spec.clone())).collect(),
        payload_len: payload.len() as u64,
        checksum: fnv1a(0, &payload),
    };
    let json = serde_json::to_vec(&header)?;
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(json.len() as u32).to_le_bytes())?;
    out.write_all(&json)?;
    out.write_all(&payload)?;
    out.flush()?;
    Ok(())
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8], what: &str) -> Result<(), NeuralError> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => NeuralError::Corrupt(format!("truncated {what}")),
        _ => NeuralError::Io(e),
    })
}

pub fn read_model<R: Read>(mut input: R) -> Result<ModelFile, NeuralError> {
    let mut magic = [0u8; 8];
    read_exact(&mut input, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(NeuralError::Corrupt("not a model file".into()));
    }
    let mut word = [0u8; 4];
    read_exact(&mut input, &mut word, "version")?;
    let version = u32::from_le_bytes(word);
    if version != FORMAT_VERSION {
        return Err(NeuralError::Version { found: version, supported: FORMAT_VERSION });
    }
    read_exact(&mut input, &mut word, "header length")?;
    let mut json = vec![0u8; u32::from_le_bytes(word) as usize];
    read_exact(&mut input, &mut json, "header")?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| NeuralError::Corrupt(format!("header: {e}")))?;
    let mut payload = vec![0u8; header.payload_len as usize];
    read_exact(&mut input, &mut payload, "weights")?;
    if fnv1a(0, &payload) != header.checksum {
        return Err(NeuralError::Corrupt("checksum mismatch".into()));
    }
    let mut values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut nets = Vec::new();
    for (name, spec) in header.nets {
        let mut net = Mlp::zeros(spec)?;
        for p in net.params_mut() {
            *p = values.next().ok_or_else(|| NeuralError::Corrupt("weights shorter than specs".into()))?;
        }
        nets.push((name, net));
    }
    if values.next().is_some() {
        return Err(NeuralError::Corrupt("weights longer than specs".into()));
    }
    Ok(ModelFile { meta: header.meta, nets })
}

pub fn save_model(path: &Path, model: &ModelFile) -> Result<(), NeuralError> {
    write_model(BufWriter::new(File::create(path)?), model)
}

pub fn load_model(path: &Path) -> Result<ModelFile, NeuralError> {
    read_model(BufReader::new(File::open(path)?))
}

/// A single scoring network with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub net: Mlp,
    pub meta: ModelMeta,
}

impl TrainedModel {
    pub fn score(&self, x: &SparseVec) -> Result<f64, NeuralError> {
        self.net.forward(x)
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile { meta: self.meta.clone(), nets: vec![("net".into(), self.net.clone())] }
    }

    pub fn from_file(file: ModelFile) -> Result<Self, NeuralError> {
        let net = file.net("net")?.clone();
        Ok(TrainedModel { net, meta: file.meta })
    }
}

/// Pair scorer: first atoms through `f`, second atoms through `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastiveModel {
    pub f: Mlp,
    pub g: Mlp,
    pub meta: ModelMeta,
}

impl ContrastiveModel {
    /// `f(a1) · g(a2)`, the pre-sigmoid pair score.
    pub fn logit(&self, a1: &SparseVec, a2: &SparseVec) -> Result<f64, NeuralError> {
        Ok(self.f.forward(a1)? * self.g.forward(a2)?)
    }

    pub fn score(&self, a1: &SparseVec, a2: &SparseVec) -> Result<f64, NeuralError> {
        Ok(pair_score(self.f.forward(a1)?, self.g.forward(a2)?))
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile { meta: self.meta.clone(), nets: vec![("f".into(), self.f.clone()), ("g".into(), self.g.clone())] }
    }

    pub fn from_file(file: ModelFile) -> Result<Self, NeuralError> {
        let f = file.net("f")?.clone();
        let g = file.net("g")?.clone();
        Ok(ContrastiveModel { f, g, meta: file.meta })
    }
}
