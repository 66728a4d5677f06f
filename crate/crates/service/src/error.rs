use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Malformed or invalid input.
    Invalid,
    NotFound,
    WrongPhase,
    UnknownBidder,
    NoBids,
    Forbidden,
    /// Journal gap, corrupt entry or non-reproducible result.
    Integrity,
    Io,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Invalid => "invalid",
            ErrorCode::NotFound => "not_found",
            ErrorCode::WrongPhase => "wrong_phase",
            ErrorCode::UnknownBidder => "unknown_bidder",
            ErrorCode::NoBids => "no_bids",
            ErrorCode::Forbidden => "forbidden",
            ErrorCode::Integrity => "integrity",
            ErrorCode::Io => "io",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}: {message}", code.as_str())]
pub struct ServiceError {
    pub code: ErrorCode,
    pub message: String,
}

impl ServiceError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Invalid, message)
    }

    pub fn integrity(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Integrity, message)
    }
}

impl From<qauction_core::Error> for ServiceError {
    fn from(e: qauction_core::Error) -> Self {
        Self::invalid(e.to_string())
    }
}

impl From<serde_json::Error> for ServiceError {
    fn from(e: serde_json::Error) -> Self {
        Self::invalid(e.to_string())
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        Self::new(ErrorCode::Io, e.to_string())
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
