//! Database secrecy by enumeration of every pool state.
//!
//! The queries are fixed (one realization per seed and designated vector).
//! Every answer is the data part plus the pad part, both computed by the
//! server code itself: once with an all-zero pool, once with an all-zero
//! store for every pool state. The answer law under a store is the pad law
//! shifted by that store's data part, so two stores can be compared by
//! shifting one table.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{config_err, Error, Result};
use crate::field::{FieldElement, FieldPrime};
use crate::model::{
    pad_keys, verify_attributes, AttributeVector, ChunkKey, Claims, ExplicitPool, MessageStore,
    PadSource, Query, RandomnessPool, Registry, SeededCoins, ServerId, ServerNode, SystemConfig,
};
use crate::scheme::{build_queries, segments_for, SchemeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PadMode {
    Honest,
    /// Fault injection: servers add no common randomness.
    Removed,
}

#[derive(Debug, Clone)]
pub struct SecrecyReport {
    pub scheme: SchemeKind,
    pub realizations: usize,
    pub pool_symbols: usize,
    pub pool_states: u128,
    pub substitutions: usize,
    pub tv: BigRational,
    pub elapsed_ms: u128,
}

struct Fixture<'a> {
    cfg: &'a SystemConfig,
    knowledge: BTreeMap<ServerId, crate::model::Knowledge>,
    segments: Vec<crate::model::Segment>,
    queries: BTreeMap<ServerId, Query>,
}

impl Fixture<'_> {
    fn answers(&self, store: &MessageStore, pool: &dyn PadSource) -> Result<Vec<u16>> {
        let mut out = Vec::new();
        for (s, q) in &self.queries {
            let node = ServerNode::new(self.cfg, *s, &self.knowledge[s], &self.segments, store, pool);
            for row in node.answer(q)?.rows {
                out.extend(row.iter().map(|e| e.value()));
            }
        }
        Ok(out)
    }

    fn chunks(&self) -> Result<Vec<(ChunkKey, usize)>> {
        let mut chunks = BTreeMap::new();
        for (s, q) in &self.queries {
            for g in &q.groups {
                let width = self
                    .segments
                    .iter()
                    .find(|seg| seg.component == g.component)
                    .ok_or_else(|| config_err("group for an unknown segment"))?
                    .subpacket_len();
                let keys: Vec<_> = g.members.iter().map(|m| m.key.clone()).collect();
                for c in pad_keys(g.component, self.cfg.is_central(*s), self.cfg.k, &keys)? {
                    chunks.insert(c, width);
                }
            }
        }
        Ok(chunks.into_iter().collect())
    }
}

fn zero_store(cfg: &SystemConfig) -> MessageStore {
    let mut store = MessageStore::generate(cfg, 0);
    for key in cfg.all_keys() {
        store.replace(&key, cfg.field.zeros(cfg.l)).expect("shape matches");
    }
    store
}

fn elements(field: FieldPrime, values: &[u32]) -> Vec<FieldElement> {
    values.iter().map(|&v| field.reduce(v as u64)).collect()
}

/// All messages of length `l` over the field, in lexicographic order.
fn all_messages(field: FieldPrime, l: usize) -> impl Iterator<Item = Vec<FieldElement>> {
    let q = field.q() as u64;
    (0..q.pow(l as u32)).map(move |mut x| {
        let mut v = vec![0u32; l];
        for slot in v.iter_mut().rev() {
            *slot = (x % q) as u32;
            x /= q;
        }
        elements(field, &v)
    })
}

fn sub(field: FieldPrime, a: &[u16], b: &[u16]) -> Vec<u16> {
    let q = field.q() as u32;
    a.iter().zip(b).map(|(&x, &y)| ((x as u32 + q - y as u32) % q) as u16).collect()
}

/// Pad-part law, its total mass, pool symbols and pool states.
type PadTable = (HashMap<Vec<u16>, u64>, u64, usize, u128);

/// Pad-part law: one entry per answer-tuple value, counted over pool states.
fn pad_table(fx: &Fixture<'_>, mode: PadMode, bound: u128) -> Result<PadTable> {
    let field = fx.cfg.field;
    let zero = zero_store(fx.cfg);
    let chunks = fx.chunks()?;
    let symbols: usize = chunks.iter().map(|(_, w)| w).sum();
    let states = (field.q() as u128)
        .checked_pow(symbols as u32)
        .filter(|&s| s <= bound)
        .ok_or(Error::DomainTooLarge {
            what: "pool states".into(),
            states: (field.q() as f64).powi(symbols as i32).min(u128::MAX as f64) as u128,
            bound,
        })?;
    let mut table = HashMap::new();
    if mode == PadMode::Removed {
        table.insert(fx.answers(&zero, &ExplicitPool::zeros(field))?, 1);
        return Ok((table, 1, symbols, states));
    }
    let q = field.q() as u32;
    let mut digits = vec![0u32; symbols];
    loop {
        let mut pool = ExplicitPool::zeros(field);
        let mut at = 0;
        for (key, w) in &chunks {
            pool.insert(key.clone(), elements(field, &digits[at..at + w]));
            at += w;
        }
        *table.entry(fx.answers(&zero, &pool)?).or_insert(0) += 1;
        let mut i = 0;
        loop {
            if i == digits.len() {
                return Ok((table, states as u64, symbols, states));
            }
            digits[i] += 1;
            if digits[i] < q {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// `TV(T, T shifted by delta)` for a table with total mass `total`.
fn shifted_tv(field: FieldPrime, table: &HashMap<Vec<u16>, u64>, total: u64, delta: &[u16]) -> BigRational {
    if delta.iter().all(|&d| d == 0) {
        return BigRational::zero();
    }
    let excess: u64 = table
        .iter()
        .map(|(x, &c)| c.saturating_sub(table.get(&sub(field, x, delta)).copied().unwrap_or(0)))
        .sum();
    BigRational::new(BigInt::from(excess), BigInt::from(total))
}

/// Largest total-variation distance between the answer laws of two stores
/// that differ in one non-designated message, over every such pair built
/// from the seeded store, every designated vector in `vstars` (all when
/// `None`) and every seed.
pub fn audit_database_secrecy(
    kind: SchemeKind,
    cfg: &SystemConfig,
    vstars: Option<&[AttributeVector]>,
    seeds: &[u64],
    mode: PadMode,
    bound: u128,
) -> Result<SecrecyReport> {
    let start = Instant::now();
    let field = cfg.field;
    let all = cfg.all_keys();
    let vstars = vstars.unwrap_or(&all);
    let mut report = SecrecyReport {
        scheme: kind,
        realizations: 0,
        pool_symbols: 0,
        pool_states: 0,
        substitutions: 0,
        tv: BigRational::zero(),
        elapsed_ms: 0,
    };
    let segments = segments_for(cfg, kind)?;
    for vstar in vstars {
        let mut registry = Registry::new();
        registry.insert("user", vstar.clone());
        let outcome = verify_attributes(cfg, "user", &Claims::honest(cfg, vstar), &registry)?;
        for &seed in seeds {
            let (_, _, queries) = build_queries(kind, cfg, vstar, &SeededCoins::new(seed, field))?;
            let fx = Fixture {
                cfg,
                knowledge: outcome.knowledge.clone(),
                segments: segments.clone(),
                queries,
            };
            let (table, total, symbols, states) = pad_table(&fx, mode, bound)?;
            report.realizations += 1;
            report.pool_symbols = report.pool_symbols.max(symbols);
            report.pool_states = report.pool_states.max(states);

            let store = MessageStore::generate(cfg, seed);
            let zero_pool = ExplicitPool::zeros(field);
            let base = fx.answers(&store, &zero_pool)?;
            // the split into data and pad parts must match a real answer
            let pads = RandomnessPool::new(seed, field);
            let full = fx.answers(&store, &pads)?;
            if sub(field, &full, &base) != fx.answers(&zero_store(cfg), &pads)? {
                return Err(config_err("answers are not data part plus pad part"));
            }
            for key in all.iter().filter(|k| *k != vstar) {
                let current = store.get(key).expect("key in store").to_vec();
                for alt in all_messages(field, cfg.l).filter(|m| *m != current) {
                    let mut other = store.clone();
                    other.replace(key, alt)?;
                    let data = fx.answers(&other, &zero_pool)?;
                    let tv = shifted_tv(field, &table, total, &sub(field, &data, &base));
                    report.tv = report.tv.clone().max(tv);
                    report.substitutions += 1;
                }
            }
        }
    }
    report.elapsed_ms = start.elapsed().as_millis();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_tv_of_a_uniform_subgroup() {
        let f = FieldPrime::new(3).unwrap();
        let mut t = HashMap::new();
        for x in 0..3u16 {
            t.insert(vec![x, x], 1);
        }
        assert!(shifted_tv(f, &t, 3, &[1, 1]).is_zero());
        assert_eq!(shifted_tv(f, &t, 3, &[1, 0]), BigRational::new(1.into(), 1.into()));
    }

    #[test]
    fn message_enumeration() {
        let f = FieldPrime::new(2).unwrap();
        assert_eq!(all_messages(f, 3).count(), 8);
    }
}
