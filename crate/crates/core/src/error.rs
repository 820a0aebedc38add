use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("condition {id} fails: {reason}")]
    ConditionFailed { id: &'static str, reason: String },

    #[error("path does not cover lags: need X_{need_from}..X_{need_to}, have X_{have_from}..X_{have_to}")]
    MissingLagPrefix {
        need_from: i64,
        need_to: i64,
        have_from: i64,
        have_to: i64,
    },

    #[error("test function support reaches below the storage floor ({support} <= {floor})")]
    BelowFloor { support: f64, floor: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
