//! Expert-iteration data generation: annotate searched goals, merge found
//! proofs and outcomes into the next iteration's datasets.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use mmprove_core::database::Database;
use mmprove_core::proof::ProofTree;
use mmprove_core::proofdata::{format_outcome, format_proofstep, tree_records, ProofStepRecord};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::policy::{Scorer, Suggester};
use crate::search::{evaluate, Problem, ResultRow, SearchError, SearchParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    P,
    N,
}

/// One goal annotated with whether search resolved it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub goal: String,
    pub outcome: Outcome,
    pub iteration: usize,
    pub root: String,
}

/// A proof found by search, with the statement it proves.
#[derive(Clone, Debug)]
pub struct FoundProof {
    pub problem: Problem,
    pub tree: ProofTree,
}

#[derive(Debug, Error)]
pub enum LoopError {
    #[error("proof of `{label}` does not verify: {source}")]
    Unverified { label: String, source: SearchError },
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("{path}: {msg}")]
    Io { path: PathBuf, msg: String },
}

#[derive(Clone, Debug)]
pub struct Annotations {
    pub outcomes: Vec<OutcomeRecord>,
    pub proofs: Vec<FoundProof>,
    pub results: Vec<ResultRow>,
}

/// Searches every problem and labels each visited goal P when it was
/// proved in any attempt, N otherwise. One record per (root, goal text).
pub fn generate_annotations(
    db: &Database,
    problems: &[Problem],
    suggester: &dyn Suggester,
    scorer: Option<&dyn Scorer>,
    params: &SearchParams,
    iteration: usize,
    threads: usize,
) -> Result<Annotations, LoopError> {
    let eval = evaluate(db, problems, suggester, scorer, params, threads)?;
    let mut outcomes = Vec::new();
    let mut proofs = Vec::new();
    for (problem, attempts) in problems.iter().zip(&eval.attempts) {
        let mut seen: BTreeMap<&str, bool> = BTreeMap::new();
        for run in &attempts.runs {
            for g in &run.goals {
                *seen.entry(g.text.as_str()).or_insert(false) |= g.proved;
            }
        }
        outcomes.extend(seen.into_iter().map(|(goal, proved)| OutcomeRecord {
            goal: goal.to_string(),
            outcome: if proved { Outcome::P } else { Outcome::N },
            iteration,
            root: problem.label.clone(),
        }));
        if let Some(tree) = &attempts.best().proof {
            proofs.push(FoundProof {
                problem: problem.clone(),
                tree: tree.clone(),
            });
        }
    }
    Ok(Annotations {
        outcomes,
        proofs,
        results: eval.rows,
    })
}

/// Adds the steps of every found proof to `original`. Steps repeated within
/// one proof collapse; a proof whose steps are already all present under
/// its label adds nothing; otherwise all its steps are appended.
pub fn merge_proofstep_data(db: &Database, original: &[ProofStepRecord], found: &[FoundProof]) -> Result<Vec<ProofStepRecord>, LoopError> {
    let mut out = original.to_vec();
    let mut present: HashMap<String, HashSet<String>> = HashMap::new();
    for r in original {
        present.entry(r.proof_label.clone()).or_default().insert(r.proof_step_hash.clone());
    }
    for f in found {
        f.problem.check(db, &f.tree).map_err(|source| LoopError::Unverified {
            label: f.problem.label.clone(),
            source,
        })?;
        let mut hashes = HashSet::new();
        let records: Vec<ProofStepRecord> = tree_records(db, &f.problem.label, &f.problem.goal.hyps, &f.tree)
            .into_iter()
            .filter(|r| hashes.insert(r.proof_step_hash.clone()))
            .collect();
        let known = present.entry(f.problem.label.clone()).or_default();
        if records.iter().all(|r| known.contains(&r.proof_step_hash)) {
            continue;
        }
        known.extend(hashes);
        out.extend(records);
    }
    Ok(out)
}

/// Every goal of a proof-step dataset, annotated P.
pub fn positives(records: &[ProofStepRecord], iteration: usize) -> Vec<OutcomeRecord> {
    records
        .iter()
        .map(|r| OutcomeRecord {
            goal: r.goal.clone(),
            outcome: Outcome::P,
            iteration,
            root: r.proof_label.clone(),
        })
        .collect()
}

/// One record per goal text, P winning conflicts; sorted by goal text.
pub fn merge_outcome_data(original: &[OutcomeRecord], annotations: &[OutcomeRecord]) -> Vec<OutcomeRecord> {
    let mut by_goal: BTreeMap<&str, &OutcomeRecord> = BTreeMap::new();
    for r in original.iter().chain(annotations) {
        match by_goal.get(r.goal.as_str()) {
            Some(prev) if prev.outcome == Outcome::P || r.outcome == Outcome::N => {}
            _ => {
                by_goal.insert(&r.goal, r);
            }
        }
    }
    by_goal.into_values().cloned().collect()
}

/// The training sentences of both objectives, one per line.
pub fn objective_lines(proofsteps: &[ProofStepRecord], outcomes: &[OutcomeRecord], eot: &str) -> String {
    let mut out = String::new();
    for r in proofsteps {
        out.push_str(&format_proofstep(&r.goal, &r.proof_step, eot));
        out.push('\n');
    }
    for r in outcomes {
        out.push_str(&format_outcome(&r.goal, r.outcome == Outcome::P, eot));
        out.push('\n');
    }
    out
}

pub fn to_jsonl<T: Serialize>(rows: &[T]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("rows serialize"));
        out.push('\n');
    }
    out
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, LoopError> {
    let io = |msg: String| LoopError::Io {
        path: path.to_path_buf(),
        msg,
    };
    let file = fs::File::open(path).map_err(|e| io(e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| io(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

/// Hex SHA-256 of a serialized dataset.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetHashes {
    pub proofsteps: String,
    pub outcomes: String,
}

impl DatasetHashes {
    pub fn of(proofsteps: &[ProofStepRecord], outcomes: &[OutcomeRecord]) -> DatasetHashes {
        DatasetHashes {
            proofsteps: sha256_hex(to_jsonl(proofsteps).as_bytes()),
            outcomes: sha256_hex(to_jsonl(outcomes).as_bytes()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IterationStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationManifest {
    pub iteration: usize,
    pub status: IterationStatus,
    pub error: Option<String>,
    pub policy: String,
    pub params: SearchParams,
    pub statements: Vec<String>,
    pub inputs: DatasetHashes,
    pub outputs: Option<DatasetHashes>,
    pub new_proofs: usize,
    pub results: Vec<ResultRow>,
}

pub struct IterationInput {
    pub iteration: usize,
    pub policy: String,
    pub params: SearchParams,
    pub problems: Vec<Problem>,
    pub proofsteps: Vec<ProofStepRecord>,
    pub outcomes: Vec<OutcomeRecord>,
}

#[derive(Clone, Debug)]
pub struct IterationOutput {
    pub manifest: IterationManifest,
    pub proofsteps: Vec<ProofStepRecord>,
    pub outcomes: Vec<OutcomeRecord>,
}

/// Search, annotate and merge. A failing stage yields a manifest marked
/// failed and empty datasets.
pub fn run_iteration(
    db: &Database,
    input: &IterationInput,
    suggester: &dyn Suggester,
    scorer: Option<&dyn Scorer>,
    threads: usize,
) -> IterationOutput {
    let mut manifest = IterationManifest {
        iteration: input.iteration,
        status: IterationStatus::Failed,
        error: None,
        policy: input.policy.clone(),
        params: input.params.clone(),
        statements: input.problems.iter().map(|p| p.label.clone()).collect(),
        inputs: DatasetHashes::of(&input.proofsteps, &input.outcomes),
        outputs: None,
        new_proofs: 0,
        results: Vec::new(),
    };
    let staged = generate_annotations(db, &input.problems, suggester, scorer, &input.params, input.iteration, threads)
        .and_then(|ann| {
            let proofsteps = merge_proofstep_data(db, &input.proofsteps, &ann.proofs)?;
            Ok((ann, proofsteps))
        });
    match staged {
        Ok((ann, proofsteps)) => {
            let outcomes = merge_outcome_data(&input.outcomes, &ann.outcomes);
            manifest.status = IterationStatus::Ok;
            manifest.outputs = Some(DatasetHashes::of(&proofsteps, &outcomes));
            manifest.new_proofs = ann.proofs.len();
            manifest.results = ann.results;
            IterationOutput {
                manifest,
                proofsteps,
                outcomes,
            }
        }
        Err(e) => {
            manifest.error = Some(e.to_string());
            IterationOutput {
                manifest,
                proofsteps: Vec::new(),
                outcomes: Vec::new(),
            }
        }
    }
}

/// `<root>/iterations/<k>`.
pub fn iteration_dir(root: &Path, k: usize) -> PathBuf {
    root.join("iterations").join(k.to_string())
}

/// Writes `manifest.json`, `proofsteps.jsonl`, `outcomes.jsonl` and
/// `objectives.txt` under the iteration's directory.
pub fn write_iteration(root: &Path, out: &IterationOutput, eot: &str) -> Result<PathBuf, LoopError> {
    let dir = iteration_dir(root, out.manifest.iteration);
    let io = |path: &Path, e: std::io::Error| LoopError::Io {
        path: path.to_path_buf(),
        msg: e.to_string(),
    };
    fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    let files = [
        ("manifest.json", serde_json::to_string_pretty(&out.manifest).expect("manifest serializes") + "\n"),
        ("proofsteps.jsonl", to_jsonl(&out.proofsteps)),
        ("outcomes.jsonl", to_jsonl(&out.outcomes)),
        ("objectives.txt", objective_lines(&out.proofsteps, &out.outcomes, eot)),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        let mut f = fs::File::create(&path).map_err(|e| io(&path, e))?;
        f.write_all(body.as_bytes()).map_err(|e| io(&path, e))?;
    }
    Ok(dir)
}

/// Datasets written by iteration `k`.
pub fn read_iteration(root: &Path, k: usize) -> Result<(Vec<ProofStepRecord>, Vec<OutcomeRecord>), LoopError> {
    let dir = iteration_dir(root, k);
    Ok((read_jsonl(&dir.join("proofsteps.jsonl"))?, read_jsonl(&dir.join("outcomes.jsonl"))?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(goal: &str, outcome: Outcome) -> OutcomeRecord {
        OutcomeRecord {
            goal: goal.into(),
            outcome,
            iteration: 1,
            root: "r".into(),
        }
    }

    #[test]
    fn positive_annotations_win_conflicts() {
        let merged = merge_outcome_data(&[rec("a", Outcome::N), rec("b", Outcome::P)], &[rec("a", Outcome::P), rec("b", Outcome::N), rec("c", Outcome::N)]);
        let got: Vec<(&str, Outcome)> = merged.iter().map(|r| (r.goal.as_str(), r.outcome)).collect();
        assert_eq!(got, vec![("a", Outcome::P), ("b", Outcome::P), ("c", Outcome::N)]);
    }

    #[test]
    fn disjoint_and_empty_merges() {
        let base = vec![rec("x", Outcome::P)];
        assert_eq!(merge_outcome_data(&base, &[]), base);
        assert_eq!(merge_outcome_data(&base, &[rec("y", Outcome::N)]).len(), 2);
    }

    #[test]
    fn hashes_are_hex_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
