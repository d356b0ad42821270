//! Atom descriptors, reaction vectors and reaction fingerprints.

pub mod descriptor;
pub mod drfp;
pub mod export;
pub mod reaction;
pub mod sparse;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

pub use descriptor::{atom_descriptor, AtomDescriptor, DescriptorVariant, ATOMIC_LEN};
pub use drfp::{Drfp, ReactantIndex};
pub use export::{read_binary, write_binary, write_csv, ExportFormat, ExportHeader};
pub use reaction::{reaction_vector, REACTION_VECTOR_LEN};
pub use sparse::SparseVec;

use crate::orbchain::MechanisticStep;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("no atom with map number {0}")]
    UnknownAtom(u32),
    #[error("descriptors need explicit hydrogens")]
    ImplicitHydrogens,
    #[error("unknown descriptor variant `{0}`")]
    UnknownVariant(String),
    #[error("unknown reaction encoder `{0}`")]
    UnknownEncoder(String),
    #[error("unknown export format `{0}`")]
    UnknownFormat(String),
    #[error("row `{id}` has length {found}, expected {expected}")]
    DimensionMismatch { id: String, expected: usize, found: usize },
    #[error("not a feature file")]
    BadMagic,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Seeded 64-bit FNV-1a: the seed's little-endian bytes are hashed first.
pub fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for &b in seed.to_le_bytes().iter().chain(bytes) {
        h ^= b as u64;
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// Turns candidate steps into fixed-length vectors for the ranker.
pub trait ReactionEncoder: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn encode_batch(&self, steps: &[MechanisticStep]) -> Result<Vec<SparseVec>, FeatureError>;
}

pub struct DrfpEncoder(pub Drfp);

impl ReactionEncoder for DrfpEncoder {
    fn name(&self) -> &str {
        "drfp"
    }

    fn dim(&self) -> usize {
        self.0.bits
    }

    fn encode_batch(&self, steps: &[MechanisticStep]) -> Result<Vec<SparseVec>, FeatureError> {
        Ok(self.0.encode_all(steps))
    }
}

pub struct PredefinedEncoder;

impl ReactionEncoder for PredefinedEncoder {
    fn name(&self) -> &str {
        "predefined"
    }

    fn dim(&self) -> usize {
        REACTION_VECTOR_LEN
    }

    fn encode_batch(&self, steps: &[MechanisticStep]) -> Result<Vec<SparseVec>, FeatureError> {
        steps.iter().map(reaction_vector).collect()
    }
}

/// Reaction encoders selectable by name.
#[derive(Clone)]
pub struct EncoderRegistry {
    encoders: BTreeMap<String, Arc<dyn ReactionEncoder>>,
}

impl Default for EncoderRegistry {
    fn default() -> Self {
        let mut r = EncoderRegistry { encoders: BTreeMap::new() };
        r.register(Arc::new(DrfpEncoder(Drfp::default())));
        r.register(Arc::new(PredefinedEncoder));
        r
    }
}

impl EncoderRegistry {
    pub fn register(&mut self, enc: Arc<dyn ReactionEncoder>) {
        self.encoders.insert(enc.name().to_string(), enc);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ReactionEncoder>, FeatureError> {
        self.encoders.get(name).cloned().ok_or_else(|| FeatureError::UnknownEncoder(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.encoders.keys().map(String::as_str).collect()
    }
}
