use thiserror::Error;

use crate::field::FieldError;
use crate::model::ServerId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("verification failed at server {server}: {reason}")]
    VerificationFailed { server: ServerId, reason: String },
    #[error("server {server} refused access to message {key}")]
    AccessViolation { server: ServerId, key: String },
    #[error("decode failed: {0}")]
    Decode(String),
    #[error("enumeration domain too large: {states} states exceeds bound {bound} ({what})")]
    DomainTooLarge {
        what: String,
        states: u128,
        bound: u128,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn decode_err(msg: impl Into<String>) -> Error {
    Error::Decode(msg.into())
}
