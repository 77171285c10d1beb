//! Builds the configured suggester and scorer.

use mmprove_core::database::Database;
use mmprove_core::proofdata::ProofStepRecord;
use mmprove_prover::policy::PolicyError;
use mmprove_prover::{LmClient, PerfectOutcomeOracle, ReplayOracle, Scorer, Suggester, UnificationBaseline, UsageStats};

use crate::config::{PolicyConfig, PolicyKind};

pub struct Backend<'db> {
    pub name: &'static str,
    pub suggester: Box<dyn Suggester + 'db>,
    /// Present when the backend can score goals for value-mode search.
    pub scorer: Option<Box<dyn Scorer + 'db>>,
}

impl<'db> Backend<'db> {
    /// `training` feeds usage statistics (baseline) or the recorded steps
    /// (replay, which also scores goals on recorded proofs as positive).
    pub fn build(db: &'db Database, config: &PolicyConfig, training: &[ProofStepRecord]) -> Result<Backend<'db>, PolicyError> {
        Ok(match config.kind {
            PolicyKind::Baseline => Backend {
                name: "baseline",
                suggester: Box::new(UnificationBaseline::new(
                    db,
                    &UsageStats::from_records(db, training),
                    config.baseline.clone(),
                )),
                scorer: None,
            },
            PolicyKind::Replay => Backend {
                name: "replay",
                suggester: Box::new(ReplayOracle::new(training)),
                scorer: Some(Box::new(PerfectOutcomeOracle::new(training))),
            },
            PolicyKind::Lm => Backend {
                name: "lm",
                suggester: Box::new(LmClient::new(config.lm.clone())?),
                scorer: Some(Box::new(LmClient::new(config.lm.clone())?)),
            },
        })
    }

    pub fn scorer(&self) -> Option<&dyn Scorer> {
        self.scorer.as_deref().map(|s| s as &dyn Scorer)
    }
}
