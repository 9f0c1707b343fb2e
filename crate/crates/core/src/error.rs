use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {x} lies outside the support [{lo}, {hi}]")]
    OutsideSupport { x: i64, lo: i64, hi: i64 },

    #[error("conditioning event has zero probability")]
    ZeroProbability,

    #[error("distribution is not log-concave")]
    NotLogConcave,

    #[error(
        "monotone chain over {size} coordinates exceeds the exact construction limit of {limit}; \
         use desk-scale parameters, or ConditionalBernoulli for single-level sampling"
    )]
    ChainTooLarge { size: usize, limit: usize },

    #[error("enumeration of {count} configurations exceeds the limit of {limit}")]
    EnumerationTooLarge { count: f64, limit: f64 },

    #[error("rejection sampling failed: {0}")]
    Rejection(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by bad input rather than by a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::OutsideSupport { .. }
                | Error::ZeroProbability
                | Error::NotLogConcave
                | Error::ChainTooLarge { .. }
                | Error::EnumerationTooLarge { .. }
                | Error::Unsupported(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
