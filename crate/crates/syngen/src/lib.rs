//! Synthetic proof generators: decimal arithmetic and ring equalities over
//! the bundled library, plus the augmented-dataset assembler.

pub mod arith;
pub mod augmented;
pub mod builder;
pub mod decimal;
pub mod ring;

use mmprove_core::database::Database;
use mmprove_core::proofdata::{proofstep_count, tree_records, ProofStepRecord};
use mmprove_core::verify::{replay, ProofContext};
use mmprove_core::{proof, ExportError, Expr, ProofFormat, ProofTree, VerifyError};
use thiserror::Error;

pub use arith::{gen_arith, ArithKind};
pub use augmented::{build_augmented, gen_test_statements, Augmented, Category};
pub use ring::{gen_ring, RingTask, TheoremSampler};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("`{label}`: {msg}")]
    Step { label: String, msg: String },
    #[error("no valid instance after {0} draws")]
    Exhausted(usize),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

/// A synthesized theorem with its proof tree.
#[derive(Clone, Debug)]
pub struct GeneratedProof {
    pub label: String,
    pub hyps: Vec<Expr>,
    pub statement: Expr,
    pub tree: ProofTree,
    /// Distinct (goal, proof step) pairs of the proof.
    pub proofsteps: usize,
    /// True when a ring walk stopped before its requested depth.
    pub short: bool,
}

impl GeneratedProof {
    pub fn new(db: &Database, label: &str, hyps: Vec<Expr>, tree: ProofTree) -> GeneratedProof {
        let statement = match &tree {
            ProofTree::Step(s) => s.expr.clone(),
            ProofTree::Hyp(k) => hyps[*k].clone(),
        };
        let proofsteps = proofstep_count(&tree_records(db, label, &hyps, &tree));
        GeneratedProof {
            label: label.to_string(),
            hyps,
            statement,
            tree,
            proofsteps,
            short: false,
        }
    }

    pub fn context(&self, db: &Database) -> Result<ProofContext, ExportError> {
        ProofContext::fresh(db, &self.label, &self.hyps, &self.statement, &[])
    }

    /// Exports the proof to kernel steps and replays them.
    pub fn verify(&self, db: &Database) -> Result<(), GenError> {
        let ctx = self.context(db)?;
        let steps = proof::tree_to_steps(db, &ctx, &self.tree, true)?;
        replay(db, &ctx, &steps)?;
        Ok(())
    }

    pub fn records(&self, db: &Database) -> Vec<ProofStepRecord> {
        tree_records(db, &self.label, &self.hyps, &self.tree)
    }

    /// The statement as `[[ hyps ]] |- concl` text.
    pub fn goal_text(&self, db: &Database) -> String {
        let hyps: Vec<String> = self.hyps.iter().map(|h| db.render_expr(h)).collect();
        mmprove_core::text::goal_text(&hyps, &db.render_expr(&self.statement))
    }

    /// A `${ ... $}` block appendable to the library.
    pub fn to_mm(&self, db: &Database, format: ProofFormat) -> Result<String, GenError> {
        Ok(proof::theorem_block(db, &self.context(db)?, &self.tree, format)?)
    }
}
