//! Searching for shorter proofs of library theorems. A found proof is
//! accepted only when it is strictly shorter and rests on no axiom the
//! original proof does not already use.

use std::collections::{BTreeSet, HashMap};

use mmprove_core::database::{AssertionId, AssertionKind, Database};
use mmprove_core::proof::{proof_text, splice_proof};
use mmprove_core::verify::{proof_steps, verify_proof, ProofStep};
use mmprove_core::{ExportError, ProofFormat, ProofTree, VerifyError};
use mmprove_prover::search::SearchError;
use mmprove_prover::{run_attempts, Problem, Scorer, SearchParams, Suggester};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ShortenError {
    #[error("unknown theorem `{0}`")]
    Unknown(String),
    #[error("`{0}` has no proof")]
    NoProof(String),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Export(#[from] ExportError),
}

/// Logical axioms each assertion depends on, memoized.
pub struct AxiomClosure<'db> {
    db: &'db Database,
    memo: HashMap<AssertionId, BTreeSet<String>>,
}

impl<'db> AxiomClosure<'db> {
    pub fn new(db: &'db Database) -> AxiomClosure<'db> {
        AxiomClosure { db, memo: HashMap::new() }
    }

    fn cited(&self, id: AssertionId) -> Result<Vec<AssertionId>, VerifyError> {
        let a = self.db.assertion(id);
        Ok(proof_steps(self.db, a)?
            .into_iter()
            .filter_map(|s| match s {
                ProofStep::Assert(c) => Some(c),
                _ => None,
            })
            .collect())
    }

    /// Axioms behind `id`: itself when it is a logical axiom, the union over
    /// its proof's citations when it is a theorem. Syntax axioms are skipped.
    pub fn of_assertion(&mut self, id: AssertionId) -> Result<BTreeSet<String>, VerifyError> {
        let mut stack = vec![(id, false)];
        while let Some((cur, ready)) = stack.pop() {
            if self.memo.contains_key(&cur) {
                continue;
            }
            let a = self.db.assertion(cur);
            if a.kind == AssertionKind::Axiom {
                let set = if self.db.is_logical(a) { BTreeSet::from([a.label.clone()]) } else { BTreeSet::new() };
                self.memo.insert(cur, set);
                continue;
            }
            let cited = self.cited(cur)?;
            if ready {
                let mut set = BTreeSet::new();
                for c in cited {
                    set.extend(self.memo[&c].iter().cloned());
                }
                self.memo.insert(cur, set);
            } else {
                stack.push((cur, true));
                stack.extend(cited.into_iter().filter(|c| !self.memo.contains_key(c)).map(|c| (c, false)));
            }
        }
        Ok(self.memo[&id].clone())
    }

    /// Axioms behind every step of `tree`.
    pub fn of_tree(&mut self, tree: &ProofTree) -> Result<BTreeSet<String>, VerifyError> {
        let mut used = BTreeSet::new();
        tree.for_each_step(&mut |s| {
            used.insert(s.assertion);
        });
        let mut out = BTreeSet::new();
        for id in used {
            out.extend(self.of_assertion(id)?);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortenReport {
    pub label: String,
    pub original_steps: usize,
    pub found_steps: Option<usize>,
    pub original_axioms: BTreeSet<String>,
    pub found_axioms: Option<BTreeSet<String>>,
    pub accepted: bool,
    /// Compressed proof text of an accepted proof.
    pub proof: Option<String>,
}

impl ShortenReport {
    /// Strictly shorter with an axiom closure inside the original's.
    pub fn acceptable(original_steps: usize, original: &BTreeSet<String>, found_steps: usize, found: &BTreeSet<String>) -> bool {
        found_steps < original_steps && found.is_subset(original)
    }
}

/// Searches each theorem under its library ceiling and reports the outcome.
pub fn shorten(
    db: &Database,
    labels: &[String],
    suggester: &dyn Suggester,
    scorer: Option<&dyn Scorer>,
    params: &SearchParams,
) -> Result<Vec<ShortenReport>, ShortenError> {
    let mut closure = AxiomClosure::new(db);
    let mut out = Vec::with_capacity(labels.len());
    for label in labels {
        let a = db.assertion_by_label(label).ok_or_else(|| ShortenError::Unknown(label.clone()))?;
        if a.proof.is_none() {
            return Err(ShortenError::NoProof(label.clone()));
        }
        let replayed = verify_proof(db, a)?;
        let ctx = mmprove_core::ProofContext::for_assertion(db, a);
        let original_steps = ProofTree::from_replay(db, &ctx, &replayed).step_count();
        let original_axioms = closure.of_assertion(AssertionId(a.index as u32))?;
        let problem = Problem::from_assertion(a, db);
        let attempts = run_attempts(db, &problem, suggester, scorer, params)?;
        let mut report = ShortenReport {
            label: label.clone(),
            original_steps,
            found_steps: None,
            original_axioms,
            found_axioms: None,
            accepted: false,
            proof: None,
        };
        if let Some(tree) = &attempts.best().proof {
            let steps = tree.step_count();
            let axioms = closure.of_tree(tree)?;
            report.accepted = ShortenReport::acceptable(report.original_steps, &report.original_axioms, steps, &axioms);
            if report.accepted {
                report.proof = Some(proof_text(db, &ctx, tree, ProofFormat::Compressed)?);
            }
            report.found_steps = Some(steps);
            report.found_axioms = Some(axioms);
        }
        out.push(report);
    }
    Ok(out)
}

/// `source` with every accepted proof spliced in place of the original.
pub fn splice_accepted(source: &str, reports: &[ShortenReport]) -> Result<String, ExportError> {
    let mut out = source.to_string();
    for r in reports {
        if let (true, Some(p)) = (r.accepted, &r.proof) {
            out = splice_proof(&out, &r.label, p)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acceptance_needs_both_shorter_and_no_new_axioms() {
        let orig: BTreeSet<String> = ["ax-1", "ax-mp"].map(String::from).into();
        let sub: BTreeSet<String> = ["ax-mp"].map(String::from).into();
        let extra: BTreeSet<String> = ["ax-mp", "ax-3"].map(String::from).into();
        assert!(ShortenReport::acceptable(5, &orig, 3, &sub));
        assert!(!ShortenReport::acceptable(5, &orig, 5, &sub));
        assert!(!ShortenReport::acceptable(5, &orig, 2, &extra));
    }
}
