//! Loading a library, optionally extended with appended `.mm` fragments,
//! and selecting benchmark problems from its dataset split.

use std::fs;
use std::path::{Path, PathBuf};

use mmprove_core::database::Database;
use mmprove_core::proofdata::{extract_proof_steps, split_dataset, DatasetSplit, ProofStepRecord, SplitError};
use mmprove_core::{ParseError, VerifyError};
use mmprove_prover::Problem;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{count} theorems failed extraction, first: {first}")]
    Extract { count: usize, first: VerifyError },
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error("unknown split `{0}` (expected train, valid or test)")]
    UnknownSplit(String),
}

/// A parsed library with the source text it was parsed from.
pub struct Library {
    pub db: Database,
    pub source: String,
}

impl Library {
    /// Parses `path` followed by each of `append`, in order.
    pub fn load(path: &Path, append: &[PathBuf]) -> Result<Library, LibraryError> {
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|source| LibraryError::Read {
                path: p.to_path_buf(),
                source,
            })
        };
        let mut source = read(path)?;
        for extra in append {
            if !source.ends_with('\n') {
                source.push('\n');
            }
            source.push_str(&read(extra)?);
        }
        Library::from_source(source)
    }

    pub fn from_source(source: String) -> Result<Library, LibraryError> {
        let db = Database::parse(&source)?;
        Ok(Library { db, source })
    }
}

/// Proof-step records of every theorem; any extraction failure is an error.
pub fn extract_all(db: &Database, threads: usize) -> Result<Vec<ProofStepRecord>, LibraryError> {
    let (records, errors) = extract_proof_steps(db, threads);
    let count = errors.len();
    match errors.into_iter().next() {
        None => Ok(records),
        Some(first) => Err(LibraryError::Extract { count, first }),
    }
}

/// Extracted records with their label split.
pub struct Dataset {
    pub records: Vec<ProofStepRecord>,
    pub split: DatasetSplit,
}

impl Dataset {
    pub fn build(db: &Database, seed: u64, valid: usize, test: usize, threads: usize) -> Result<Dataset, LibraryError> {
        let records = extract_all(db, threads)?;
        let split = split_dataset(&records, seed, valid, test)?;
        Ok(Dataset { records, split })
    }

    /// Records whose label is in `split`.
    pub fn records_of(&self, split: &str) -> Result<Vec<ProofStepRecord>, LibraryError> {
        let labels = self.split.labels(split).ok_or_else(|| LibraryError::UnknownSplit(split.into()))?;
        let keep: std::collections::HashSet<&str> = labels.iter().map(String::as_str).collect();
        Ok(self
            .records
            .iter()
            .filter(|r| keep.contains(r.proof_label.as_str()))
            .cloned()
            .collect())
    }

    /// Benchmark problems for the labels of `split`; with `limit`, a seeded
    /// sample of that many labels.
    pub fn problems(&self, db: &Database, split: &str, limit: Option<usize>, sample_seed: u64) -> Result<Vec<Problem>, LibraryError> {
        let mut labels: Vec<&String> = self
            .split
            .labels(split)
            .ok_or_else(|| LibraryError::UnknownSplit(split.into()))?
            .iter()
            .collect();
        if let Some(n) = limit {
            if n < labels.len() {
                labels.shuffle(&mut ChaCha8Rng::seed_from_u64(sample_seed));
                labels.truncate(n);
                labels.sort();
            }
        }
        Ok(labels
            .into_iter()
            .filter_map(|l| db.assertion_by_label(l))
            .map(|a| Problem::from_assertion(a, db))
            .collect())
    }
}
