//! User-side query plans.
//!
//! A plan fixes everything about the queries except the user's coins: the
//! message groups each server receives, which logical sub-packet of each
//! member is requested, and which coefficient vectors (plus unit offsets)
//! combine each group. [`realize`] turns a plan and a coin source into the
//! concrete queries that go on the wire.

use std::collections::{BTreeMap, HashMap};

use super::coins::{CoinId, CoinSource, CoinSpec};
use super::config::{AttributeVector, ServerId};
use super::query::{Member, Query, QueryGroup};
use crate::error::{config_err, Result};
use crate::field::{FieldElement, FieldPrime};
use crate::scheme::Decoder;

/// Which construction a message segment is retrieved with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Component {
    Baseline = 0,
    Het = 1,
    D3 = 2,
}

impl Component {
    pub fn from_u8(b: u8) -> Option<Self> {
        match b {
            0 => Some(Component::Baseline),
            1 => Some(Component::Het),
            2 => Some(Component::D3),
            _ => None,
        }
    }
}

/// A contiguous symbol range of every message, split into equal sub-packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub component: Component,
    pub start: usize,
    pub len: usize,
    pub subpackets: usize,
}

impl Segment {
    pub fn subpacket_len(&self) -> usize {
        self.len / self.subpackets
    }

    /// Symbol range of sub-packet `i` inside a full message.
    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        let w = self.subpacket_len();
        self.start + i * w..self.start + (i + 1) * w
    }
}

/// Per-message cursor over logical sub-packet indices, plus a record of
/// which group occurrence took which index.
#[derive(Debug, Clone, Default)]
pub struct SubPacketPlan {
    count: usize,
    cursor: BTreeMap<AttributeVector, usize>,
    assigned: BTreeMap<(ServerId, usize, AttributeVector), usize>,
}

impl SubPacketPlan {
    pub fn new(count: usize) -> Self {
        SubPacketPlan {
            count,
            ..Default::default()
        }
    }

    /// Next unused logical index of `key`.
    pub fn fresh(&mut self, key: &AttributeVector) -> Result<usize> {
        let c = self.cursor.entry(key.clone()).or_insert(0);
        if *c >= self.count {
            return Err(config_err(format!(
                "sub-packet cursor overflow: message needs more than {} sub-packets",
                self.count
            )));
        }
        *c += 1;
        Ok(*c - 1)
    }

    pub fn record(&mut self, server: ServerId, group: usize, key: &AttributeVector, index: usize) {
        self.assigned.insert((server, group, key.clone()), index);
    }

    pub fn assigned(&self, server: ServerId, group: usize, key: &AttributeVector) -> Option<usize> {
        self.assigned.get(&(server, group, key.clone())).copied()
    }

    pub fn used(&self, key: &AttributeVector) -> usize {
        self.cursor.get(key).copied().unwrap_or(0)
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// Concatenation of coefficient vectors plus an optional unit vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffExpr {
    pub coins: Vec<CoinId>,
    pub offset: Option<usize>,
}

impl CoeffExpr {
    pub fn single(coin: CoinId) -> Self {
        CoeffExpr {
            coins: vec![coin],
            offset: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPlan {
    pub members: Vec<AttributeVector>,
    pub logical: Vec<usize>,
    pub coeffs: CoeffExpr,
}

/// Plan for one segment: groups per server, coin shapes and the recipe that
/// recovers the designated sub-packets from the answers.
#[derive(Debug, Clone)]
pub struct SegmentPlan {
    pub segment: Segment,
    pub groups: BTreeMap<ServerId, Vec<GroupPlan>>,
    pub coins: BTreeMap<CoinId, CoinSpec>,
    pub indices: SubPacketPlan,
    pub decoder: Decoder,
}

impl SegmentPlan {
    pub fn groups_for(&self, s: ServerId) -> &[GroupPlan] {
        self.groups.get(&s).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone)]
pub struct QueryPlan {
    pub vstar: AttributeVector,
    pub segments: Vec<SegmentPlan>,
}

impl QueryPlan {
    /// Servers that receive at least one group, in order.
    pub fn servers(&self) -> Vec<ServerId> {
        let mut s: Vec<ServerId> = self
            .segments
            .iter()
            .flat_map(|p| p.groups.keys().copied())
            .collect();
        s.sort();
        s.dedup();
        s
    }
}

/// Realized coin values, computed once per plan.
pub struct RealizedCoins {
    coeffs: HashMap<CoinId, Vec<FieldElement>>,
    perms: HashMap<(Component, AttributeVector), Vec<usize>>,
}

impl RealizedCoins {
    pub fn draw(plan: &QueryPlan, coins: &dyn CoinSource) -> Self {
        let mut coeffs = HashMap::new();
        let mut perms = HashMap::new();
        for seg in &plan.segments {
            for (id, spec) in &seg.coins {
                coeffs.insert(*id, coins.coeffs(*id, spec));
            }
            for g in seg.groups.values().flatten() {
                for key in &g.members {
                    perms
                        .entry((seg.segment.component, key.clone()))
                        .or_insert_with(|| coins.perm(seg.segment.component, key, seg.segment.subpackets));
                }
            }
        }
        RealizedCoins { coeffs, perms }
    }

    pub fn coeffs(&self, id: CoinId) -> &[FieldElement] {
        &self.coeffs[&id]
    }

    pub fn perm(&self, component: Component, key: &AttributeVector) -> &[usize] {
        &self.perms[&(component, key.clone())]
    }

    pub fn coefficient_vector(&self, field: FieldPrime, expr: &CoeffExpr) -> Vec<FieldElement> {
        let mut v: Vec<FieldElement> = expr
            .coins
            .iter()
            .flat_map(|c| self.coeffs(*c).iter().copied())
            .collect();
        if let Some(pos) = expr.offset {
            v[pos] = v[pos] + field.one();
        }
        v
    }
}

/// Builds the query for server `s` from a plan and realized coins.
pub fn realize(plan: &QueryPlan, s: ServerId, coins: &RealizedCoins, field: FieldPrime) -> Query {
    let mut groups = Vec::new();
    for seg in &plan.segments {
        let component = seg.segment.component;
        for g in seg.groups_for(s) {
            let members = g
                .members
                .iter()
                .zip(&g.logical)
                .map(|(key, &i)| Member {
                    key: key.clone(),
                    subpacket: coins.perm(component, key)[i] as u32,
                })
                .collect();
            groups.push(QueryGroup {
                component,
                members,
                coeffs: coins.coefficient_vector(field, &g.coeffs),
            });
        }
    }
    Query { groups }
}
