//! Wire protocol, TCP service mode and experiment driver for the
//! attribute-based private retrieval schemes in `dapac-core`.

pub mod config;
pub mod dump;
pub mod frames;
pub mod run;
pub mod service;
pub mod wire;

use dapac_core::model::{Exchange, ServerId};
use thiserror::Error;

use frames::LoggedFrame;
use wire::WireError;

#[derive(Debug, Error)]
pub enum NetError {
    #[error(transparent)]
    Core(#[from] dapac_core::Error),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("configuration: {0}")]
    Config(String),
    /// A server answered `VERIFY_FAIL`; retrieval never started.
    #[error("server {server} rejected verification: {reason}")]
    Rejected {
        server: ServerId,
        reason: String,
        frames: Vec<LoggedFrame>,
    },
    /// The session broke after it started. Carries what was exchanged.
    #[error("session failed: {reason}")]
    Session {
        reason: String,
        frames: Vec<LoggedFrame>,
        exchanges: Vec<Exchange>,
    },
}
