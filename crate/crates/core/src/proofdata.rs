//! Proof-step records, objective strings and dataset splits.

use std::collections::{BTreeSet, HashMap, HashSet};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::database::{Assertion, Database, Expr};
use crate::error::VerifyError;
use crate::proof::{ProofTree, TreeStep};
use crate::tactic::{apply_tactic, parse_tactic, Goal, Tactic, TacticError};
use crate::text::goal_text;
use crate::verify::{verify_proof, ProofContext};

pub const DEFAULT_EOT: &str = "<|endoftext|>";

/// One JSON row of the proof-step dataset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProofStepRecord {
    pub proof_label: String,
    pub goal: String,
    pub proof_step: String,
    pub proof_step_hash: String,
    pub parent_hash: Vec<String>,
}

/// First 8 bytes of SHA-256 over `GOAL <goal> PROOFSTEP <step>`, base64.
pub fn hash_goal_step(goal: &str, step: &str) -> String {
    let mut h = Sha256::new();
    h.update(b"GOAL ");
    h.update(goal.as_bytes());
    h.update(b" PROOFSTEP ");
    h.update(step.as_bytes());
    let digest = h.finalize();
    STANDARD.encode(&digest[..8])
}

impl ProofStepRecord {
    pub fn new(proof_label: &str, goal: String, proof_step: String, parent: Option<&str>) -> Self {
        let proof_step_hash = hash_goal_step(&goal, &proof_step);
        ProofStepRecord {
            proof_label: proof_label.to_string(),
            goal,
            proof_step,
            proof_step_hash,
            parent_hash: parent.map(|p| vec![p.to_string()]).unwrap_or_default(),
        }
    }
}

/// The tactic a tree step applies.
pub fn step_tactic(s: &TreeStep) -> Tactic {
    Tactic {
        assertion: s.assertion,
        subst: s.subst.clone(),
    }
}

/// One record per edge of the proof DAG; the root record has no parent.
pub fn tree_records(db: &Database, label: &str, root_hyps: &[Expr], tree: &ProofTree) -> Vec<ProofStepRecord> {
    let hyps: Vec<String> = root_hyps.iter().map(|h| db.render_expr(h)).collect();
    let mut out = Vec::new();
    let mut visited: HashSet<*const TreeStep> = HashSet::new();
    let mut texts: HashMap<*const TreeStep, (String, String)> = HashMap::new();
    let mut stack: Vec<(&ProofTree, Option<String>)> = vec![(tree, None)];
    while let Some((node, parent)) = stack.pop() {
        let ProofTree::Step(s) = node else { continue };
        let key = std::sync::Arc::as_ptr(s);
        let (goal, step) = texts
            .entry(key)
            .or_insert_with(|| (goal_text(&hyps, &db.render_expr(&s.expr)), step_tactic(s).text(db)))
            .clone();
        let rec = ProofStepRecord::new(label, goal, step, parent.as_deref());
        let hash = rec.proof_step_hash.clone();
        out.push(rec);
        if visited.insert(key) {
            for c in s.children.iter().rev() {
                stack.push((c, Some(hash.clone())));
            }
        }
    }
    out
}

/// Verifies `a` and returns its proof-step records.
pub fn extract_theorem(db: &Database, a: &Assertion) -> Result<Vec<ProofStepRecord>, VerifyError> {
    let replay = verify_proof(db, a)?;
    let ctx = ProofContext::for_assertion(db, a);
    let tree = ProofTree::from_replay(db, &ctx, &replay);
    let hyps: Vec<Expr> = db.essential_hyps(a).map(|h| h.expr.clone()).collect();
    Ok(tree_records(db, &a.label, &hyps, &tree))
}

/// Records for every logical `$p`, in library order. Failures are returned
/// alongside.
pub fn extract_proof_steps(db: &Database, threads: usize) -> (Vec<ProofStepRecord>, Vec<VerifyError>) {
    let theorems: Vec<&Assertion> = db.theorems().filter(|a| db.is_logical(a)).collect();
    let run = |chunk: &[&Assertion]| -> Vec<Result<Vec<ProofStepRecord>, VerifyError>> {
        chunk.iter().map(|a| extract_theorem(db, a)).collect()
    };
    let results: Vec<Result<Vec<ProofStepRecord>, VerifyError>> = if threads <= 1 {
        run(&theorems)
    } else {
        let size = theorems.len().div_ceil(threads).max(1);
        std::thread::scope(|s| {
            let hs: Vec<_> = theorems.chunks(size).map(|c| s.spawn(move || run(c))).collect();
            hs.into_iter().flat_map(|h| h.join().expect("extraction thread panicked")).collect()
        })
    };
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(v) => records.extend(v),
            Err(e) => errors.push(e),
        }
    }
    (records, errors)
}

/// Number of distinct (goal, proof_step) pairs per proof, summed.
pub fn proofstep_count(records: &[ProofStepRecord]) -> usize {
    records
        .iter()
        .map(|r| (&r.proof_label, &r.goal, &r.proof_step))
        .collect::<HashSet<_>>()
        .len()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("goal does not parse: {0}")]
    Goal(TacticError),
    #[error("tactic rejected: {0}")]
    Tactic(TacticError),
    #[error("children differ: expected {expected:?}, got {found:?}")]
    Children { expected: Vec<String>, found: Vec<String> },
}

/// Applies a record's tactic to its goal and returns the child goal texts.
/// Disjoint-variable conditions come from the record's source theorem.
pub fn replay_record(db: &Database, r: &ProofStepRecord) -> Result<Vec<String>, ReplayError> {
    let mut goal = Goal::parse(db, &r.goal).map_err(ReplayError::Goal)?;
    if let Some(a) = db.assertion_by_label(&r.proof_label) {
        goal.dv = a.frame.scope_dv.as_ref().clone();
    }
    let t = parse_tactic(db, &r.proof_step, None).map_err(ReplayError::Tactic)?;
    let kids = apply_tactic(db, &goal, &t).map_err(ReplayError::Tactic)?;
    Ok(kids.into_iter().map(|k| goal.with_conclusion(k).text(db)).collect())
}

/// Checks that each record's tactic reproduces exactly the goals of its
/// child records (children that are root hypotheses have no record).
pub fn check_replay(db: &Database, records: &[ProofStepRecord], sample: &[usize]) -> Result<usize, String> {
    let mut children: HashMap<(&str, &str), Vec<&ProofStepRecord>> = HashMap::new();
    for r in records {
        for p in &r.parent_hash {
            children.entry((r.proof_label.as_str(), p.as_str())).or_default().push(r);
        }
    }
    let mut checked = 0;
    for &i in sample {
        let r = &records[i];
        let produced = replay_record(db, r).map_err(|e| format!("{} `{}`: {e}", r.proof_label, r.goal))?;
        let goal = Goal::parse(db, &r.goal).map_err(|e| e.to_string())?;
        let hyp_goals: BTreeSet<String> = goal.hyps.iter().map(|h| goal.with_conclusion(h.clone()).text(db)).collect();
        let mut linked: Vec<String> = children
            .get(&(r.proof_label.as_str(), r.proof_step_hash.as_str()))
            .map(|v| v.iter().map(|c| c.goal.clone()).collect())
            .unwrap_or_default();
        let mut expected: Vec<String> = produced
            .into_iter()
            .filter(|g| !hyp_goals.contains(g) || linked.contains(g))
            .collect();
        expected.sort();
        expected.dedup();
        linked.sort();
        linked.dedup();
        if expected != linked {
            return Err(format!(
                "{}: step `{}` produces {:?} but links {:?}",
                r.proof_label, r.proof_step, expected, linked
            ));
        }
        checked += 1;
    }
    Ok(checked)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    ProofStep { goal: String, proof_step: String },
    Outcome { goal: String, positive: bool },
}

pub fn format_proofstep(goal: &str, step: &str, eot: &str) -> String {
    format!("GOAL {goal} PROOFSTEP {step}{eot}")
}

pub fn format_outcome(goal: &str, positive: bool, eot: &str) -> String {
    format!("GOAL {goal} OUTCOME {}{eot}", if positive { "P" } else { "N" })
}

impl Objective {
    pub fn format(&self, eot: &str) -> String {
        match self {
            Objective::ProofStep { goal, proof_step } => format_proofstep(goal, proof_step, eot),
            Objective::Outcome { goal, positive } => format_outcome(goal, *positive, eot),
        }
    }

    pub fn parse(s: &str, eot: &str) -> Option<Objective> {
        let body = s.strip_suffix(eot)?.strip_prefix("GOAL ")?;
        if let Some((goal, rest)) = body.rsplit_once(" OUTCOME ") {
            return match rest {
                "P" => Some(Objective::Outcome { goal: goal.into(), positive: true }),
                "N" => Some(Objective::Outcome { goal: goal.into(), positive: false }),
                _ => None,
            };
        }
        let (goal, step) = body.split_once(" PROOFSTEP ")?;
        Some(Objective::ProofStep {
            goal: goal.into(),
            proof_step: step.into(),
        })
    }
}

impl From<&ProofStepRecord> for Objective {
    fn from(r: &ProofStepRecord) -> Self {
        Objective::ProofStep {
            goal: r.goal.clone(),
            proof_step: r.proof_step.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SplitError {
    #[error("no records to split")]
    Empty,
    #[error("{have} labels cannot fill valid {valid} + test {test}")]
    TooFew { have: usize, valid: usize, test: usize },
}

impl DatasetSplit {
    pub fn split_of(&self, label: &str) -> Option<&'static str> {
        if self.valid.iter().any(|l| l == label) {
            Some("valid")
        } else if self.test.iter().any(|l| l == label) {
            Some("test")
        } else if self.train.iter().any(|l| l == label) {
            Some("train")
        } else {
            None
        }
    }

    pub fn labels(&self, split: &str) -> Option<&[String]> {
        match split {
            "train" => Some(&self.train),
            "valid" => Some(&self.valid),
            "test" => Some(&self.test),
            _ => None,
        }
    }
}

/// Splits by proof label: labels are sorted, shuffled with `seed`, and the
/// first `valid` then `test` labels are held out.
pub fn split_dataset(records: &[ProofStepRecord], seed: u64, valid: usize, test: usize) -> Result<DatasetSplit, SplitError> {
    if records.is_empty() {
        return Err(SplitError::Empty);
    }
    let labels: BTreeSet<&str> = records.iter().map(|r| r.proof_label.as_str()).collect();
    split_labels(labels.into_iter().map(String::from).collect(), seed, valid, test)
}

pub fn split_labels(mut labels: Vec<String>, seed: u64, valid: usize, test: usize) -> Result<DatasetSplit, SplitError> {
    labels.sort();
    labels.dedup();
    if labels.len() < valid + test {
        return Err(SplitError::TooFew {
            have: labels.len(),
            valid,
            test,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    labels.shuffle(&mut rng);
    let rest = labels.split_off(valid + test);
    let t = labels.split_off(valid);
    let mut v = labels;
    let mut t = t;
    let mut train = rest;
    v.sort();
    t.sort();
    train.sort();
    Ok(DatasetSplit {
        seed,
        train,
        valid: v,
        test: t,
    })
}
