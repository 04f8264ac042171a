//! The retrieval schemes and the in-process protocol runner.
//!
//! Every scheme is expressed as one or more [`SegmentPlan`]s. A plain scheme
//! uses a single segment covering the whole message; time-sharing retrieves
//! the first `lambda * L` symbols with the baseline construction and the
//! rest with the central-server construction.

pub mod d3;
pub mod dapac;
pub mod hetdapac;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{config_err, decode_err, Result};
use crate::field::FieldElement;
use crate::model::{
    realize, Answer, AttributeVector, Claims, CoinSource, Component, Exchange, MessageStore,
    PadSource, QueryPlan, RealizedCoins, Registry, Segment, SegmentPlan, ServerId, ServerNode,
    SystemConfig, Transcript, VerificationOutcome,
};

pub type Lambda = Ratio<u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    /// Baseline over the dedicated servers only.
    Dapac,
    /// Dedicated servers plus a central server answering `KD` groups.
    HetDapac,
    /// The three-dedicated-server construction.
    D3,
    /// Baseline on a `lambda` fraction of each message, `HetDapac` on the rest.
    TimeShare(Lambda),
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Dapac => "dapac",
            SchemeKind::HetDapac => "hetdapac",
            SchemeKind::D3 => "d3",
            SchemeKind::TimeShare(_) => "timeshare",
        }
    }

    pub fn lambda(&self) -> Option<Lambda> {
        match self {
            SchemeKind::TimeShare(l) => Some(*l),
            _ => None,
        }
    }

    /// Parses a scheme name; `timeshare` takes `lambda` (default 0).
    pub fn parse(name: &str, lambda: Option<Lambda>) -> Result<Self> {
        match name {
            "dapac" => Ok(SchemeKind::Dapac),
            "hetdapac" => Ok(SchemeKind::HetDapac),
            "d3" => Ok(SchemeKind::D3),
            "timeshare" => Ok(SchemeKind::TimeShare(lambda.unwrap_or_else(|| Ratio::from_integer(0)))),
            other => Err(config_err(format!("unknown scheme {other:?}"))),
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeKind::TimeShare(l) => write!(f, "timeshare({l})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Parses `a/b` or a bare integer as a rational in `[0, 1]`.
pub fn parse_lambda(s: &str) -> Result<Lambda> {
    let l = Lambda::from_str(s.trim()).map_err(|_| config_err(format!("bad lambda {s:?}")))?;
    if l > Lambda::from_integer(1) {
        return Err(config_err(format!("lambda {l} exceeds 1")));
    }
    Ok(l)
}

fn pairs(d: usize) -> usize {
    d * (d - 1) / 2
}

/// The message segments a scheme splits `L` into. Servers derive the same
/// list from the shared configuration.
pub fn segments_for(cfg: &SystemConfig, kind: SchemeKind) -> Result<Vec<Segment>> {
    let baseline = |start: usize, len: usize| -> Result<Segment> {
        if cfg.d < 2 {
            return Err(config_err("the baseline scheme needs at least two dedicated servers"));
        }
        let p = pairs(cfg.d);
        if !len.is_multiple_of(p) {
            return Err(config_err(format!("baseline segment length {len} not divisible by D(D-1)/2 = {p}")));
        }
        Ok(Segment {
            component: Component::Baseline,
            start,
            len,
            subpackets: p,
        })
    };
    let het = |start: usize, len: usize| -> Result<Segment> {
        if !len.is_multiple_of(cfg.d) {
            return Err(config_err(format!("segment length {len} not divisible by D = {}", cfg.d)));
        }
        Ok(Segment {
            component: Component::Het,
            start,
            len,
            subpackets: cfg.d,
        })
    };
    match kind {
        SchemeKind::Dapac => Ok(vec![baseline(0, cfg.l)?]),
        SchemeKind::HetDapac => Ok(vec![het(0, cfg.l)?]),
        SchemeKind::D3 => {
            if cfg.d != 3 {
                return Err(config_err(format!("the D=3 scheme needs D = 3, got {}", cfg.d)));
            }
            if !cfg.l.is_multiple_of(6) {
                return Err(config_err(format!("L = {} not divisible by 6", cfg.l)));
            }
            Ok(vec![Segment {
                component: Component::D3,
                start: 0,
                len: cfg.l,
                subpackets: 6,
            }])
        }
        SchemeKind::TimeShare(lambda) => {
            if lambda > Lambda::from_integer(1) {
                return Err(config_err(format!("lambda {lambda} exceeds 1")));
            }
            let scaled = lambda * Lambda::from_integer(cfg.l as u64);
            if !scaled.is_integer() {
                return Err(config_err(format!("lambda * L = {scaled} is not an integer")));
            }
            let first = scaled.to_integer() as usize;
            let mut segs = Vec::new();
            if first > 0 {
                segs.push(baseline(0, first)?);
            }
            if first < cfg.l {
                segs.push(het(first, cfg.l - first)?);
            }
            Ok(segs)
        }
    }
}

/// Builds the user's query plan for `vstar`.
pub fn plan(kind: SchemeKind, cfg: &SystemConfig, vstar: &AttributeVector) -> Result<QueryPlan> {
    cfg.check_key(vstar)?;
    let segments = segments_for(cfg, kind)?
        .into_iter()
        .map(|seg| match seg.component {
            Component::Baseline => dapac::plan_segment(cfg, vstar, seg),
            Component::Het => hetdapac::plan_segment(cfg, vstar, seg),
            Component::D3 => d3::plan_segment(cfg, vstar, seg),
        })
        .collect::<Result<Vec<SegmentPlan>>>()?;
    Ok(QueryPlan {
        vstar: vstar.clone(),
        segments,
    })
}

/// Scheme-specific recovery recipe for one segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoder {
    Baseline(dapac::PairDecoder),
    Het(hetdapac::HetDecoder),
    D3(d3::D3Decoder),
}

/// Answer rows of one segment, per server.
pub struct SegmentAnswers<'a> {
    rows: BTreeMap<ServerId, &'a [Vec<FieldElement>]>,
}

impl<'a> SegmentAnswers<'a> {
    pub fn row(&self, s: ServerId, i: usize) -> Result<&'a [FieldElement]> {
        self.rows
            .get(&s)
            .and_then(|r| r.get(i))
            .map(Vec::as_slice)
            .ok_or_else(|| decode_err(format!("missing answer row {i} from server {s}")))
    }
}

fn split_answers<'a>(
    plan: &QueryPlan,
    answers: &'a BTreeMap<ServerId, Answer>,
) -> Result<Vec<SegmentAnswers<'a>>> {
    let mut offsets: BTreeMap<ServerId, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for seg in &plan.segments {
        let mut rows = BTreeMap::new();
        for (s, groups) in &seg.groups {
            let a = answers
                .get(s)
                .ok_or_else(|| decode_err(format!("no answer from server {s}")))?;
            let off = offsets.entry(*s).or_insert(0);
            let slice = a
                .rows
                .get(*off..*off + groups.len())
                .ok_or_else(|| decode_err(format!("server {s} returned too few rows")))?;
            *off += groups.len();
            rows.insert(*s, slice);
        }
        out.push(SegmentAnswers { rows });
    }
    for (s, a) in answers {
        if offsets.get(s).copied().unwrap_or(0) != a.rows.len() {
            return Err(decode_err(format!("server {s} returned an unexpected number of rows")));
        }
    }
    Ok(out)
}

/// Recovers the designated message from the answers.
pub fn decode(
    plan: &QueryPlan,
    coins: &RealizedCoins,
    answers: &BTreeMap<ServerId, Answer>,
    l: usize,
) -> Result<Vec<FieldElement>> {
    let mut message: Vec<Option<FieldElement>> = vec![None; l];
    for (seg, seg_answers) in plan.segments.iter().zip(split_answers(plan, answers)?) {
        let recovered = match &seg.decoder {
            Decoder::Baseline(d) => d.recover(&seg_answers)?,
            Decoder::Het(d) => d.recover(&seg_answers)?,
            Decoder::D3(d) => d.recover(&seg_answers, coins)?,
        };
        let perm = coins.perm(seg.segment.component, &plan.vstar);
        let width = seg.segment.subpacket_len();
        let mut seen = vec![false; seg.segment.subpackets];
        for (logical, values) in recovered {
            if values.len() != width {
                return Err(decode_err("recovered sub-packet has the wrong length"));
            }
            let actual = perm[logical];
            if std::mem::replace(&mut seen[actual], true) {
                return Err(decode_err(format!("sub-packet {actual} recovered twice")));
            }
            for (slot, v) in message[seg.segment.range(actual)].iter_mut().zip(values) {
                *slot = Some(v);
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(decode_err("not every sub-packet was recovered"));
        }
    }
    message
        .into_iter()
        .map(|s| s.ok_or_else(|| decode_err("message symbol not covered by any segment")))
        .collect()
}

/// Convenience wrapper: plan, draw coins and realize every server's query.
pub fn build_queries(
    kind: SchemeKind,
    cfg: &SystemConfig,
    vstar: &AttributeVector,
    coins: &dyn CoinSource,
) -> Result<(QueryPlan, RealizedCoins, BTreeMap<ServerId, crate::model::Query>)> {
    let plan = plan(kind, cfg, vstar)?;
    let realized = RealizedCoins::draw(&plan, coins);
    let queries = plan
        .servers()
        .into_iter()
        .map(|s| (s, realize(&plan, s, &realized, cfg.field)))
        .collect();
    Ok((plan, realized, queries))
}

/// Full in-process session: verification, query construction, answers from
/// every queried server, decoding. `tamper` sees each answer before
/// decoding (fault injection for audits; pass a no-op otherwise).
#[allow(clippy::too_many_arguments)]
pub fn run_session(
    kind: SchemeKind,
    cfg: &SystemConfig,
    user: &str,
    vstar: &AttributeVector,
    claims: &Claims,
    registry: &Registry,
    store: &MessageStore,
    pool: &dyn PadSource,
    coins: &dyn CoinSource,
    tamper: &mut dyn FnMut(ServerId, &mut Answer),
) -> Result<Transcript> {
    let outcome = crate::model::verify_attributes(cfg, user, claims, registry)?;
    retrieve(kind, cfg, vstar, &outcome, store, pool, coins, tamper)
}

#[allow(clippy::too_many_arguments)]
pub fn retrieve(
    kind: SchemeKind,
    cfg: &SystemConfig,
    vstar: &AttributeVector,
    outcome: &VerificationOutcome,
    store: &MessageStore,
    pool: &dyn PadSource,
    coins: &dyn CoinSource,
    tamper: &mut dyn FnMut(ServerId, &mut Answer),
) -> Result<Transcript> {
    let segments = segments_for(cfg, kind)?;
    let (plan, realized, queries) = build_queries(kind, cfg, vstar, coins)?;
    let mut answers = BTreeMap::new();
    let mut exchanges = Vec::new();
    for (s, query) in queries {
        let known = outcome
            .knowledge
            .get(&s)
            .ok_or_else(|| config_err(format!("server {s} took no part in verification")))?;
        let node = ServerNode::new(cfg, s, known, &segments, store, pool);
        let mut answer = node.answer(&query)?;
        tamper(s, &mut answer);
        answers.insert(s, answer.clone());
        exchanges.push(Exchange {
            server: s,
            query,
            answer,
        });
    }
    let decoded = decode(&plan, &realized, &answers, cfg.l)?;
    Ok(Transcript {
        scheme: kind,
        cfg: cfg.clone(),
        vstar: vstar.clone(),
        exchanges,
        decoded,
    })
}

/// Honest single-user session with seeded store, pool and coins derived
/// from the configuration seed.
pub fn simulate(kind: SchemeKind, cfg: &SystemConfig, vstar: &AttributeVector) -> Result<(Transcript, MessageStore)> {
    let store = MessageStore::generate(cfg, cfg.seed);
    let pool = crate::model::RandomnessPool::new(pool_seed(cfg.seed), cfg.field);
    let coins = crate::model::SeededCoins::new(cfg.seed, cfg.field);
    let mut registry = Registry::new();
    registry.insert("user", vstar.clone());
    let t = run_session(
        kind,
        cfg,
        "user",
        vstar,
        &Claims::honest(cfg, vstar),
        &registry,
        &store,
        &pool,
        &coins,
        &mut |_, _| {},
    )?;
    Ok((t, store))
}

/// Default pool seed for a configuration seed. Service-mode servers may be
/// given a different one out of band.
pub fn pool_seed(seed: u64) -> u64 {
    use rand::RngCore;
    crate::model::derive_rng(seed, "pool-seed", &[]).next_u64()
}
