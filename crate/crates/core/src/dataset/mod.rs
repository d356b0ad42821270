//! Reaction corpora: loading through named adapters, split bookkeeping,
//! supervised labels and negative sampling for the learned models.

pub mod adapter;
pub mod export;
pub mod labels;
pub mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adapter::{AdapterRegistry, CorpusAdapter, CsvAdapter, FileDefaults, LineAdapter};
pub use export::{write_pair_labels, write_ranker_labels, write_site_labels, LABELS_VERSION};
pub use labels::{
    derive_pair_labels, derive_site_labels, prepare, sample_contrastive_negatives, sample_ranker_negatives,
    write_quarantine, Corruption, LabeledRecord, PairLabel, Prepared, Quarantined, SiteLabel,
};
pub use synth::{generate, split_for, teacher_choice, teacher_score, write_corpus_dir, SynthConfig};

use crate::chemgraph::{write_smiles, Category, ReactionRecord, Split};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset path {0} does not exist")]
    Missing(PathBuf),
    #[error("no file under {0} matches adapter `{1}`")]
    NoFiles(PathBuf, String),
    #[error("all {failed} records failed to load; first: {first}")]
    AllFailed { failed: usize, first: String },
    #[error("unknown corpus adapter `{0}`")]
    UnknownAdapter(String),
    #[error("unknown split selection `{0}`")]
    UnknownSelection(String),
    #[error("train and test share {count} reactions, e.g. {example}")]
    SplitOverlap { count: usize, example: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One parsed record with its provenance in the input files.
#[derive(Debug, Clone)]
pub struct CorpusRecord {
    pub id: String,
    pub source: String,
    pub line: usize,
    pub raw: String,
    pub record: ReactionRecord,
}

impl CorpusRecord {
    /// Unmapped canonical `reactants>>products`, used for split integrity.
    pub fn canonical_reaction(&self) -> String {
        canonical_reaction(&self.record)
    }
}

pub fn canonical_reaction(rec: &ReactionRecord) -> String {
    format!("{}>>{}", write_smiles(&rec.reactants, true, false), write_smiles(&rec.products, true, false))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadFailure {
    pub source: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LoadFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.source, self.line, self.message)
    }
}

/// Record counts per category and split.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub core_train: usize,
    pub core_test: usize,
    pub specific_train: usize,
    pub specific_test: usize,
}

impl SplitStats {
    pub fn combined_train(&self) -> usize {
        self.core_train + self.specific_train
    }

    pub fn combined_test(&self) -> usize {
        self.core_test + self.specific_test
    }

    fn add(&mut self, category: Category, split: Split) {
        match (category, split) {
            (Category::Core, Split::Train) => self.core_train += 1,
            (Category::Core, Split::Test) => self.core_test += 1,
            (Category::Specific, Split::Train) => self.specific_train += 1,
            (Category::Specific, Split::Test) => self.specific_test += 1,
        }
    }
}

/// Which records a run uses: a split, optionally narrowed to a category.
/// Written `core-test`, `specific-train`, `combined-test`, `test`, `all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub category: Option<Category>,
    pub split: Option<Split>,
}

impl Selection {
    pub const ALL: Selection = Selection { category: None, split: None };

    pub fn new(category: Option<Category>, split: Option<Split>) -> Self {
        Selection { category, split }
    }

    pub fn matches(&self, category: Category, split: Split) -> bool {
        self.category.is_none_or(|c| c == category) && self.split.is_none_or(|s| s == split)
    }
}

impl FromStr for Selection {
    type Err = DatasetError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "all" {
            return Ok(Selection::ALL);
        }
        let (cat, split) = match lower.split_once('-') {
            Some((c, s)) => (Some(c), s),
            None => (None, lower.as_str()),
        };
        let category = match cat {
            None | Some("combined") => None,
            Some("core") => Some(Category::Core),
            Some("specific") => Some(Category::Specific),
            Some(_) => return Err(DatasetError::UnknownSelection(s.into())),
        };
        let split = match split {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            "all" => None,
            _ => return Err(DatasetError::UnknownSelection(s.into())),
        };
        Ok(Selection { category, split })
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.category.map_or("combined".to_string(), |c| c.to_string());
        let s = match self.split {
            Some(Split::Train) => "train",
            Some(Split::Test) => "test",
            None => "all",
        };
        write!(f, "{c}-{s}")
    }
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub records: Vec<CorpusRecord>,
    pub failures: Vec<LoadFailure>,
}

impl Corpus {
    pub fn from_records(records: Vec<CorpusRecord>) -> Self {
        Corpus { records, failures: Vec::new() }
    }

    pub fn stats(&self) -> SplitStats {
        let mut s = SplitStats::default();
        for r in &self.records {
            s.add(r.record.category, r.record.split);
        }
        s
    }

    pub fn select(&self, sel: Selection) -> Corpus {
        Corpus {
            records: self
                .records
                .iter()
                .filter(|r| sel.matches(r.record.category, r.record.split))
                .cloned()
                .collect(),
            failures: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Train and test must not contain the same reaction.
    pub fn check_split_integrity(&self) -> Result<(), DatasetError> {
        let mut train = BTreeSet::new();
        let mut test = BTreeSet::new();
        for r in &self.records {
            let key = r.canonical_reaction();
            match r.record.split {
                Split::Train => train.insert(key),
                Split::Test => test.insert(key),
            };
        }
        let shared: Vec<&String> = train.intersection(&test).collect();
        match shared.first() {
            None => Ok(()),
            Some(example) => Err(DatasetError::SplitOverlap { count: shared.len(), example: (*example).clone() }),
        }
    }

    /// Content hash over the records' canonical lines, in order.
    pub fn content_hash(&self) -> String {
        let mut h = 0u64;
        for r in &self.records {
            let line = format!("{}|{}", r.record.to_line(), split_name(r.record.split));
            h = crate::featurize::fnv1a(h, line.as_bytes());
        }
        format!("{h:016x}")
    }
}

pub fn split_name(split: Split) -> &'static str {
    match split {
        Split::Train => "train",
        Split::Test => "test",
    }
}

/// Loads a file, or every file under a directory whose extension the
/// adapter claims. Bad records are logged with their line and skipped.
pub fn load_corpus(path: &Path, adapter: &dyn CorpusAdapter) -> Result<Corpus, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::Missing(path.to_path_buf()));
    }
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| adapter.extensions().contains(&e))
            })
            .collect();
        v.sort();
        if v.is_empty() {
            return Err(DatasetError::NoFiles(path.to_path_buf(), adapter.name().into()));
        }
        v
    } else {
        vec![path.to_path_buf()]
    };

    let mut corpus = Corpus::default();
    for file in &files {
        let text = std::fs::read_to_string(file)?;
        let source = file.file_name().and_then(|n| n.to_str()).unwrap_or("?").to_string();
        let defaults = FileDefaults::from_file_name(&source);
        for item in adapter.parse(&source, &text, defaults) {
            match item {
                Ok(r) => corpus.records.push(r),
                Err(f) => {
                    tracing::warn!(source = %f.source, line = f.line, "skipping record: {}", f.message);
                    corpus.failures.push(f);
                }
            }
        }
    }
    if corpus.records.is_empty() {
        if let Some(first) = corpus.failures.first() {
            return Err(DatasetError::AllFailed { failed: corpus.failures.len(), first: first.to_string() });
        }
        tracing::warn!(path = %path.display(), "corpus is empty");
    }
    let s = corpus.stats();
    tracing::info!(
        core_train = s.core_train,
        core_test = s.core_test,
        specific_train = s.specific_train,
        specific_test = s.specific_test,
        failures = corpus.failures.len(),
        "loaded corpus"
    );
    Ok(corpus)
}

/// Per-bucket counts of reactant heavy atoms, with the bucket edges the
/// size analysis uses.
pub const SIZE_BUCKETS: [(usize, usize); 4] = [(0, 10), (11, 20), (21, 30), (31, usize::MAX)];

pub fn size_bucket(heavy_atoms: usize) -> usize {
    SIZE_BUCKETS.iter().position(|&(lo, hi)| heavy_atoms >= lo && heavy_atoms <= hi).unwrap_or(SIZE_BUCKETS.len() - 1)
}

pub fn bucket_label(i: usize) -> String {
    match SIZE_BUCKETS[i] {
        (0, hi) => format!("<={hi}"),
        (lo, usize::MAX) => format!(">{}", lo - 1),
        (lo, hi) => format!("{lo}-{hi}"),
    }
}

pub fn size_histogram(corpus: &Corpus) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for r in &corpus.records {
        *h.entry(bucket_label(size_bucket(r.record.reactants.heavy_atom_count()))).or_insert(0) += 1;
    }
    h
}
