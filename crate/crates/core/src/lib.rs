//! Metamath kernel: database parsing, term grammar, proof verification and
//! export, plus the proof-step dataset format built on top of it.

pub mod compressed;
pub mod database;
pub mod error;
pub mod fixture;
pub mod grammar;
pub mod lexer;
pub mod proof;
pub mod proofdata;
pub mod tactic;
pub mod term;
pub mod text;
pub mod verify;

pub use database::{Assertion, AssertionId, AssertionKind, Database, Expr, HypId, Sym};
pub use error::{ExportError, GrammarError, Location, ParseError, SubstError, VerifyError};
pub use proof::{ProofFormat, ProofTree};
pub use proofdata::ProofStepRecord;
pub use tactic::{Goal, Tactic, TacticError};
pub use verify::{verify_database, verify_proof, ProofContext};
