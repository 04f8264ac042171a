use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use sha2::{Digest, Sha256};

use super::config::{AttributeVector, SystemConfig};
use crate::error::{config_err, Result};
use crate::field::{FieldElement, FieldPrime};

pub type Message = Vec<FieldElement>;

/// Deterministic generator for one named stream. Every random object in the
/// system is derived from `(seed, domain, key)` so that streams never
/// overlap and regeneration is order independent.
pub fn derive_rng(seed: u64, domain: &str, key: &[u8]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_be_bytes());
    h.update((domain.len() as u32).to_be_bytes());
    h.update(domain.as_bytes());
    h.update(key);
    ChaCha8Rng::from_seed(h.finalize().into())
}

pub(crate) fn uniform_elements(rng: &mut impl Rng, field: FieldPrime, len: usize) -> Vec<FieldElement> {
    (0..len)
        .map(|_| field.reduce(rng.gen_range(0..field.q() as u64)))
        .collect()
}

pub(crate) fn key_bytes(key: &AttributeVector) -> Vec<u8> {
    key.coords().iter().flat_map(|c| c.to_be_bytes()).collect()
}

/// All `K^N` messages, each `L` symbols long.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageStore {
    k: usize,
    n: usize,
    l: usize,
    field: FieldPrime,
    seed: u64,
    messages: Vec<Message>,
}

impl MessageStore {
    pub fn generate(cfg: &SystemConfig, seed: u64) -> Self {
        let messages = cfg
            .all_keys()
            .iter()
            .map(|key| {
                let mut rng = derive_rng(seed, "msg", &key_bytes(key));
                uniform_elements(&mut rng, cfg.field, cfg.l)
            })
            .collect();
        MessageStore {
            k: cfg.k,
            n: cfg.n,
            l: cfg.l,
            field: cfg.field,
            seed,
            messages,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn message_len(&self) -> usize {
        self.l
    }

    pub fn field(&self) -> FieldPrime {
        self.field
    }

    fn index(&self, key: &AttributeVector) -> Option<usize> {
        if key.len() != self.n || key.coords().iter().any(|&c| c as usize >= self.k) {
            return None;
        }
        Some(key.coords().iter().fold(0, |acc, &c| acc * self.k + c as usize))
    }

    pub fn get(&self, key: &AttributeVector) -> Option<&[FieldElement]> {
        self.index(key).map(|i| self.messages[i].as_slice())
    }

    /// Replaces one message; used to build stores that differ in a single
    /// entry.
    pub fn replace(&mut self, key: &AttributeVector, message: Message) -> Result<()> {
        let i = self
            .index(key)
            .ok_or_else(|| config_err("replace: key outside the message set"))?;
        if message.len() != self.l || message.iter().any(|e| e.field() != self.field) {
            return Err(config_err("replace: message has the wrong length or field"));
        }
        self.messages[i] = message;
        Ok(())
    }
}
