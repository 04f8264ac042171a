use super::config::{AttributeVector, ServerId, SystemConfig};
use super::query::{Answer, Query};
use super::store::Message;
use crate::scheme::SchemeKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exchange {
    pub server: ServerId,
    pub query: Query,
    pub answer: Answer,
}

/// Everything the user sent and received in one retrieval, plus the
/// decoded message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub scheme: SchemeKind,
    pub cfg: SystemConfig,
    pub vstar: AttributeVector,
    pub exchanges: Vec<Exchange>,
    pub decoded: Message,
}

impl Transcript {
    pub fn exchange(&self, s: ServerId) -> Option<&Exchange> {
        self.exchanges.iter().find(|e| e.server == s)
    }

    /// Downloaded symbols from server `s` (zero if it was not queried).
    pub fn downloads(&self, s: ServerId) -> usize {
        self.exchange(s).map_or(0, |e| e.answer.symbols())
    }

    pub fn total_downloads(&self) -> usize {
        self.exchanges.iter().map(|e| e.answer.symbols()).sum()
    }
}
