use thiserror::Error;

use crate::bayes::NetDiagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} needs {required} variables, over the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        required: usize,
        cap: usize,
    },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("invalid variable name `{0}`")]
    InvalidVariableName(String),
    #[error("too many variables: {0} (at most 64)")]
    TooManyVariables(usize),
    #[error("inconsistent context: `{0}` occurs both positively and negatively")]
    InconsistentContext(String),
    #[error("inconsistent evidence: `{0}` is assigned both values")]
    InconsistentEvidence(String),
    #[error("conditioning on zero-probability context")]
    ZeroProbabilityCondition,
    #[error("inconsistent evidence: the evidence has probability zero")]
    ZeroProbabilityEvidence,
    #[error("time must be at least 1")]
    InvalidTime,
    #[error("evidence at slice {slice} lies beyond time {time}")]
    EvidenceBeyondTime { slice: usize, time: usize },
    #[error("invalid network: {}", join(.0))]
    InvalidNetwork(Vec<NetDiagnostic>),
    #[error("variable mismatch: {0}")]
    VariableMismatch(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid formula: {0}")]
    InvalidFormula(String),
}

fn join(diags: &[NetDiagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Size caps for the exponential routes. Exceeding a cap is an explicit
/// error, never silent truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Variables whose worlds may be enumerated.
    pub enumeration_vars: usize,
    /// Variables for which a dense transition matrix may be built.
    pub matrix_vars: usize,
    /// Total variables of an unraveled network.
    pub unrolled_vars: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            enumeration_vars: 20,
            matrix_vars: 12,
            unrolled_vars: 24,
        }
    }
}

impl Limits {
    pub(crate) fn check(what: &'static str, required: usize, cap: usize) -> Result<()> {
        if required > cap {
            Err(Error::CapExceeded {
                what,
                required,
                cap,
            })
        } else {
            Ok(())
        }
    }
}
