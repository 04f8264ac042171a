use std::collections::HashMap;

use super::config::{AttributeVector, Pattern};
use super::plan::Component;
use super::store::{derive_rng, uniform_elements};
use crate::error::{config_err, Result};
use crate::field::{FieldElement, FieldPrime};

/// Canonical identifier of one chunk of common randomness: the message
/// subset it protects, tagged with the scheme component that uses it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChunkKey {
    pub component: Component,
    pub pattern: Pattern,
}

impl ChunkKey {
    fn bytes(&self) -> Vec<u8> {
        let mut out = vec![self.component as u8];
        for slot in self.pattern.slots() {
            match slot {
                None => out.extend_from_slice(&[0, 0, 0]),
                Some(v) => {
                    out.push(1);
                    out.extend_from_slice(&v.to_be_bytes());
                }
            }
        }
        out
    }
}

/// Source of one-time pads shared by the servers.
pub trait PadSource: Sync {
    fn chunk(&self, key: &ChunkKey, len: usize) -> Vec<FieldElement>;
}

/// Common randomness derived from a seed known only to the servers. Chunks
/// are independent of each other, of the user's identity and of the
/// messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomnessPool {
    seed: u64,
    field: FieldPrime,
}

impl RandomnessPool {
    pub fn new(seed: u64, field: FieldPrime) -> Self {
        RandomnessPool { seed, field }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl PadSource for RandomnessPool {
    fn chunk(&self, key: &ChunkKey, len: usize) -> Vec<FieldElement> {
        let mut rng = derive_rng(self.seed, "pool", &key.bytes());
        uniform_elements(&mut rng, self.field, len)
    }
}

/// Pads given by an explicit table; missing chunks are all-zero. The
/// auditor enumerates pool states through this type, and an empty table is
/// the pad-removal fault.
#[derive(Debug, Clone, Default)]
pub struct ExplicitPool {
    field: Option<FieldPrime>,
    chunks: HashMap<ChunkKey, Vec<FieldElement>>,
}

impl ExplicitPool {
    pub fn zeros(field: FieldPrime) -> Self {
        ExplicitPool {
            field: Some(field),
            chunks: HashMap::new(),
        }
    }

    pub fn insert(&mut self, key: ChunkKey, chunk: Vec<FieldElement>) {
        self.chunks.insert(key, chunk);
    }
}

impl PadSource for ExplicitPool {
    fn chunk(&self, key: &ChunkKey, len: usize) -> Vec<FieldElement> {
        match self.chunks.get(key) {
            Some(c) => c.clone(),
            None => self.field.expect("pool field").zeros(len),
        }
    }
}

/// The chunks a server adds to the answer for one message group.
///
/// A group is padded by the chunk of the subset its members span. The
/// central server of the three-dedicated-server scheme instead receives
/// concatenations of `K` such subsets and adds the sum of their `K` chunks.
pub fn pad_keys(
    component: Component,
    central: bool,
    k: usize,
    members: &[AttributeVector],
) -> Result<Vec<ChunkKey>> {
    if members.is_empty() {
        return Ok(Vec::new());
    }
    let block = if component == Component::D3 && central { k } else { members.len() };
    if !members.len().is_multiple_of(block) {
        return Err(config_err(format!(
            "group of {} members cannot be split into blocks of {block}",
            members.len()
        )));
    }
    Ok(members
        .chunks(block)
        .map(|b| ChunkKey {
            component,
            pattern: Pattern::common(b),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_is_reproducible_per_key() {
        let f = FieldPrime::new(257).unwrap();
        let a = RandomnessPool::new(5, f);
        let b = RandomnessPool::new(5, f);
        let key = ChunkKey {
            component: Component::Het,
            pattern: Pattern::free(3).fix(0, 1),
        };
        let other = ChunkKey {
            component: Component::Baseline,
            pattern: key.pattern.clone(),
        };
        assert_eq!(a.chunk(&key, 8), b.chunk(&key, 8));
        assert_ne!(a.chunk(&key, 8), a.chunk(&other, 8));
        assert_ne!(a.chunk(&key, 8), RandomnessPool::new(6, f).chunk(&key, 8));
    }

    #[test]
    fn central_d3_groups_split_into_k_blocks() {
        let members = Pattern::free(3).fix(0, 1).members(2);
        let keys = pad_keys(Component::D3, true, 2, &members).unwrap();
        assert_eq!(keys.len(), 2);
        assert_eq!(keys[0].pattern, Pattern::free(3).fix(0, 1).fix(1, 0));
        assert_eq!(pad_keys(Component::D3, false, 2, &members).unwrap().len(), 1);
        assert!(pad_keys(Component::D3, true, 3, &members).is_err());
    }
}
