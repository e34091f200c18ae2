use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by a jet whose value part is zero{}", denominator_suffix(.denominator))]
    DivisionBySingularJet { denominator: Option<String> },

    #[error("division by exact zero")]
    DivisionByZero,

    #[error("unbound variable {0}")]
    UnboundVariable(String),

    #[error("expression mixes variable kinds: {0}")]
    MixedVariableKinds(String),

    #[error("unsupported group: {0}")]
    UnsupportedGroup(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular point: denominator {denominator} vanishes")]
    SingularPoint { denominator: String },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("unsatisfiable constraints: {0}")]
    UnsatisfiableConstraints(String),

    #[error("invalid claim: {0}")]
    InvalidClaim(String),

    #[error("iterated tension depth {0} exceeds the supported maximum of 3")]
    DepthLimit(usize),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

fn denominator_suffix(d: &Option<String>) -> String {
    match d {
        Some(d) => format!(" (denominator {d})"),
        None => String::new(),
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
