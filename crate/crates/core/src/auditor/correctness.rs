use std::time::Instant;

use crate::error::Result;
use crate::model::{
    AttributeVector, Claims, MessageStore, RandomnessPool, Registry, SeededCoins, ServerId,
    SystemConfig,
};
use crate::scheme::{pool_seed, run_session, SchemeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnswerFault {
    None,
    /// Adds one to the first symbol of the first row from server 1.
    Corrupt,
}

#[derive(Debug, Clone)]
pub struct CorrectnessReport {
    pub scheme: SchemeKind,
    pub runs: usize,
    /// `(designated vector, seed, what went wrong)`.
    pub failures: Vec<(AttributeVector, u64, String)>,
    pub elapsed_ms: u128,
}

/// Runs a full session for every designated vector and seed and checks the
/// decoded message against the store.
pub fn audit_correctness(
    kind: SchemeKind,
    cfg: &SystemConfig,
    seeds: &[u64],
    fault: AnswerFault,
) -> Result<CorrectnessReport> {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut runs = 0;
    for &seed in seeds {
        let cfg = SystemConfig { seed, ..cfg.clone() };
        let store = MessageStore::generate(&cfg, seed);
        let pool = RandomnessPool::new(pool_seed(seed), cfg.field);
        let coins = SeededCoins::new(seed, cfg.field);
        for vstar in cfg.all_keys() {
            let mut registry = Registry::new();
            registry.insert("user", vstar.clone());
            let mut tamper = |s: ServerId, a: &mut crate::model::Answer| {
                if fault == AnswerFault::Corrupt && s == ServerId(1) {
                    if let Some(x) = a.rows.first_mut().and_then(|r| r.first_mut()) {
                        *x = *x + cfg.field.one();
                    }
                }
            };
            runs += 1;
            let claims = Claims::honest(&cfg, &vstar);
            match run_session(kind, &cfg, "user", &vstar, &claims, &registry, &store, &pool, &coins, &mut tamper) {
                Ok(t) if t.decoded == store.get(&vstar).expect("designated message exists") => {}
                Ok(_) => failures.push((vstar.clone(), seed, "decoded message differs".into())),
                Err(e) => failures.push((vstar.clone(), seed, e.to_string())),
            }
        }
    }
    Ok(CorrectnessReport {
        scheme: kind,
        runs,
        failures,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// Whether `build` produces the same queries for two stores with different
/// contents. `build` gets read access to the store, as a server-side
/// implementation would have.
pub fn audit_query_message_independence<B, F>(cfg: &SystemConfig, build: F) -> Result<bool>
where
    B: PartialEq,
    F: Fn(&MessageStore) -> Result<B>,
{
    let a = MessageStore::generate(cfg, cfg.seed);
    let mut b = MessageStore::generate(cfg, cfg.seed.wrapping_add(1));
    if a == b {
        b = MessageStore::generate(cfg, cfg.seed.wrapping_add(2));
    }
    Ok(build(&a)? == build(&b)?)
}

/// The queries of a complete honest session run against `store`.
pub fn session_queries(
    kind: SchemeKind,
    cfg: &SystemConfig,
    vstar: &AttributeVector,
    store: &MessageStore,
) -> Result<Vec<(ServerId, crate::model::Query)>> {
    let mut registry = Registry::new();
    registry.insert("user", vstar.clone());
    let t = run_session(
        kind,
        cfg,
        "user",
        vstar,
        &Claims::honest(cfg, vstar),
        &registry,
        store,
        &RandomnessPool::new(pool_seed(cfg.seed), cfg.field),
        &SeededCoins::new(cfg.seed, cfg.field),
        &mut |_, _| {},
    )?;
    Ok(t.exchanges.into_iter().map(|e| (e.server, e.query)).collect())
}
