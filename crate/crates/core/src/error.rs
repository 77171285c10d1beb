use std::fmt;

use thiserror::Error;

/// A position in a database source: 1-based line and column, plus the label
/// of the enclosing statement when there is one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
    pub label: Option<String>,
}

impl Location {
    pub fn new(line: usize, column: usize) -> Self {
        Location {
            line,
            column,
            label: None,
        }
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)?;
        if let Some(label) = &self.label {
            write!(f, " ({label})")?;
        }
        Ok(())
    }
}

/// Errors raised while reading a database.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{loc}: lexical error: {msg}")]
    Lexical { loc: Location, msg: String },
    #[error("{loc}: scope error: {msg}")]
    Scope { loc: Location, msg: String },
    #[error("{loc}: duplicate label `{label}`")]
    DuplicateLabel { loc: Location, label: String },
    #[error("{loc}: undeclared symbol `{symbol}`")]
    UndeclaredSymbol { loc: Location, symbol: String },
    #[error("{loc}: malformed statement: {msg}")]
    Malformed { loc: Location, msg: String },
    #[error("include error: {0}")]
    Include(String),
}

impl ParseError {
    pub fn location(&self) -> Option<&Location> {
        match self {
            ParseError::Lexical { loc, .. }
            | ParseError::Scope { loc, .. }
            | ParseError::DuplicateLabel { loc, .. }
            | ParseError::UndeclaredSymbol { loc, .. }
            | ParseError::Malformed { loc, .. } => Some(loc),
            ParseError::Include(_) => None,
        }
    }
}

/// Term parsing failures.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("`{tokens}` does not parse as `{typecode}`")]
    NoParse { typecode: String, tokens: String },
    #[error("`{tokens}` has more than one parse as `{typecode}`")]
    Ambiguous { typecode: String, tokens: String },
    #[error("typecode `{0}` has no grammar")]
    UnknownTypecode(String),
    #[error("grammar is left-recursive through `{0}`")]
    LeftRecursive(String),
}

/// Substitution failures.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubstError {
    #[error("variable `{var}` has typecode `{expected}` but was mapped to a `{found}` term")]
    TypeMismatch {
        var: String,
        expected: String,
        found: String,
    },
    #[error("variable `{0}` is not bound by the substitution")]
    Unbound(String),
}

/// Why a proof was rejected. `step` is the 0-based index into the proof's
/// step stream.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("{label}: step {step}: stack underflow")]
    StackUnderflow { label: String, step: usize },
    #[error("{label}: step {step}: `{reference}` does not unify with the stack: {msg}")]
    Unification {
        label: String,
        step: usize,
        reference: String,
        msg: String,
    },
    #[error("{label}: step {step}: distinct variable violation applying `{reference}`: {pairs}")]
    DistinctVariable {
        label: String,
        step: usize,
        reference: String,
        pairs: String,
    },
    #[error("{label}: step {step}: `{reference}` is not earlier in the library")]
    ForwardReference {
        label: String,
        step: usize,
        reference: String,
    },
    #[error("{label}: step {step}: unknown or out-of-scope label `{reference}`")]
    UnknownLabel {
        label: String,
        step: usize,
        reference: String,
    },
    #[error("{label}: step {step}: malformed compressed proof: {msg}")]
    Compressed {
        label: String,
        step: usize,
        msg: String,
    },
    #[error("{label}: step {step}: incomplete proof (`?`)")]
    Incomplete { label: String, step: usize },
    #[error("{label}: proof ends with {count} stack entries")]
    StackNotSingleton { label: String, count: usize },
    #[error("{label}: proof proves `{found}`, expected `{expected}`")]
    WrongConclusion {
        label: String,
        expected: String,
        found: String,
    },
    #[error("{label}: no proof to verify")]
    NoProof { label: String },
    #[error("{label}: {msg}")]
    Grammar { label: String, msg: String },
}

/// Proof-tree construction and export failures.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExportError {
    #[error("proof tree has an open goal: {0}")]
    OpenGoal(String),
    #[error("no floating hypothesis in scope for variable `{0}`")]
    NoFloat(String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("hypothesis index {0} out of range")]
    BadHypothesis(usize),
    #[error("theorem `{0}` not found")]
    UnknownTheorem(String),
}
