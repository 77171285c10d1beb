//! Proof search over the kernel: tactic suggesters and scorers, best-first
//! search, and expert-iteration data generation.

pub mod iteration;
pub mod policy;
pub mod search;

pub use policy::{
    LmClient, LmConfig, NeutralScorer, NoisySuggester, PerfectOutcomeOracle, ReplayOracle, ScoredTactic, Scorer, StochasticStub,
    Suggester, UnificationBaseline, UsageStats,
};
pub use search::{evaluate, run_attempts, run_search, Attempts, Evaluation, PriorityMode, Problem, SearchParams, SearchResult};
