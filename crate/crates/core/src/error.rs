use crate::expr::{ConvexityWarning, SyntaxError};

/// One schema violation, located by a JSON pointer.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SchemaIssue {
    pub pointer: String,
    pub message: String,
}

/// Errors raised by the engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("security payoffs are linearly dependent (rank {rank} < {securities})")]
    RankDeficient { rank: usize, securities: usize },
    #[error("payoff is not replicable by the basic securities")]
    NotReplicable,
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Convexity(#[from] ConvexityWarning),
    #[error("no attainable payoff superreplicates with acceptable risk")]
    InfeasibleAcceptability,
    #[error("superreplication price is not finite")]
    NonFinitePrice,
    #[error("acceptance set has no finite cone base")]
    NotPolyhedral,
    #[error("dimension {0} too large for vertex enumeration")]
    DimensionTooLarge(usize),
    #[error("conified acceptance set is not pointed")]
    PointednessFailed,
    #[error("hypotheses not met: {0}")]
    HypothesesNotMet(String),
    #[error("payoff is not in M and -M")]
    NotTwoSidedlyAttainable,
    #[error("scenario has {} schema error(s)", .0.len())]
    Schema(Vec<SchemaIssue>),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}

impl Error {
    /// Process exit code: 2 for invalid input, 3 for unmet hypotheses or
    /// preconditions, 4 for internal inconsistencies.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Dimension { .. }
            | Error::Invalid(_)
            | Error::RankDeficient { .. }
            | Error::NotReplicable
            | Error::Syntax(_)
            | Error::Convexity(_)
            | Error::Schema(_) => 2,
            Error::InternalInconsistency(_) => 4,
            _ => 3,
        }
    }

    /// Variant name, used as the `error` field of error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "Dimension",
            Error::Invalid(_) => "Invalid",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::NotReplicable => "NotReplicable",
            Error::Syntax(_) => "SyntaxError",
            Error::Convexity(_) => "ConvexityWarning",
            Error::InfeasibleAcceptability => "InfeasibleAcceptability",
            Error::NonFinitePrice => "NonFinitePrice",
            Error::NotPolyhedral => "NotPolyhedral",
            Error::DimensionTooLarge(_) => "DimensionTooLarge",
            Error::PointednessFailed => "PointednessFailed",
            Error::HypothesesNotMet(_) => "HypothesesNotMet",
            Error::NotTwoSidedlyAttainable => "NotTwoSidedlyAttainable",
            Error::Schema(_) => "SchemaError",
            Error::InternalInconsistency(_) => "InternalInconsistency",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
