//! Transcript dump: TOML with the configuration, seeds, the binary
//! transcript and every frame as hex.

use std::fs;
use std::path::Path;

use dapac_core::model::{SystemConfig, Transcript};
use serde::{Deserialize, Serialize};

use crate::frames::LoggedFrame;
use crate::wire::{decode_transcript, encode_transcript, TRANSCRIPT_VERSION};
use crate::NetError;

pub const DUMP_FORMAT: &str = "dapac-transcript";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "D")]
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub q: u16,
    #[serde(rename = "L")]
    pub l: usize,
    pub seed: u64,
    pub alphabets: Vec<Vec<String>>,
}

impl From<&SystemConfig> for DumpConfig {
    fn from(c: &SystemConfig) -> Self {
        DumpConfig {
            n: c.n,
            d: c.d,
            k: c.k,
            q: c.field.q(),
            l: c.l,
            seed: c.seed,
            alphabets: c.alphabets.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpFrame {
    pub from: String,
    pub to: String,
    pub tag: String,
    /// The whole frame, length prefix included.
    pub hex: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptDump {
    pub format: String,
    pub version: u8,
    pub scheme: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<String>,
    pub user: String,
    pub vstar: String,
    /// Coin seed of the user.
    pub coin_seed: u64,
    /// Pool seed of the servers; recorded for reproduction only.
    pub pool_seed: u64,
    pub decoded: Vec<u16>,
    pub transcript_hex: String,
    pub config: DumpConfig,
    pub frames: Vec<DumpFrame>,
}

impl TranscriptDump {
    pub fn new(t: &Transcript, user: &str, coin_seed: u64, pool_seed: u64, frames: &[LoggedFrame]) -> Self {
        TranscriptDump {
            format: DUMP_FORMAT.into(),
            version: TRANSCRIPT_VERSION,
            scheme: t.scheme.name().into(),
            lambda: t.scheme.lambda().map(|l| l.to_string()),
            user: user.into(),
            vstar: t.cfg.label(&t.vstar),
            coin_seed,
            pool_seed,
            decoded: t.decoded.iter().map(|e| e.value()).collect(),
            transcript_hex: hex::encode(encode_transcript(t)),
            config: DumpConfig::from(&t.cfg),
            frames: frames
                .iter()
                .map(|f| DumpFrame {
                    from: f.from.to_string(),
                    to: f.to.to_string(),
                    tag: f.frame.tag.name().into(),
                    hex: hex::encode(f.frame.to_bytes()),
                })
                .collect(),
        }
    }

    pub fn to_toml(&self) -> Result<String, NetError> {
        toml::to_string(self).map_err(|e| NetError::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, NetError> {
        let d: TranscriptDump = toml::from_str(text).map_err(|e| NetError::Config(e.to_string()))?;
        if d.format != DUMP_FORMAT {
            return Err(NetError::Config(format!("not a transcript dump: format {:?}", d.format)));
        }
        Ok(d)
    }

    pub fn write(&self, path: &Path) -> Result<(), NetError> {
        fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, NetError> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// The embedded binary transcript.
    pub fn transcript(&self) -> Result<Transcript, NetError> {
        let bytes = hex::decode(&self.transcript_hex).map_err(|e| NetError::Config(e.to_string()))?;
        Ok(decode_transcript(&bytes)?)
    }
}
