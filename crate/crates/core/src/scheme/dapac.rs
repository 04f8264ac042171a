//! Baseline retrieval over the dedicated servers.
//!
//! Server `n` receives, for every other server `m` and every value `k` of
//! attribute `m`, one group: the messages with `v_n = v*_n`, `v_m = k` and
//! the user's tail. The group with `k = v*_m` is also sent to `m`; the
//! higher-numbered server of the pair gets the same coefficients plus a
//! unit vector on the designated message, so subtracting the two answers
//! yields one sub-packet.

use std::collections::BTreeMap;

use super::{Decoder, SegmentAnswers};
use crate::error::{decode_err, Result};
use crate::field::{sub_vec, FieldElement};
use crate::model::{
    AttributeVector, CoeffExpr, CoinId, CoinSpec, Component, GroupPlan, Segment, SegmentPlan,
    ServerId, SubPacketPlan, SystemConfig,
};

/// One recovery step: the answer of `higher` minus the answer of `lower`
/// is the designated sub-packet with logical index `logical`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairStep {
    pub lower: (ServerId, usize),
    pub higher: (ServerId, usize),
    pub logical: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairDecoder {
    pub steps: Vec<PairStep>,
}

impl PairDecoder {
    pub fn recover(&self, answers: &SegmentAnswers<'_>) -> Result<Vec<(usize, Vec<FieldElement>)>> {
        self.steps
            .iter()
            .map(|st| {
                let hi = answers.row(st.higher.0, st.higher.1)?;
                let lo = answers.row(st.lower.0, st.lower.1)?;
                let diff = sub_vec(hi, lo).map_err(|e| decode_err(e.to_string()))?;
                Ok((st.logical, diff))
            })
            .collect()
    }
}

pub fn plan_segment(cfg: &SystemConfig, vstar: &AttributeVector, segment: Segment) -> Result<SegmentPlan> {
    let comp = Component::Baseline;
    let tail = cfg.tail_pattern(vstar);
    let mut indices = SubPacketPlan::new(segment.subpackets);
    let mut coins = BTreeMap::new();
    let mut groups = BTreeMap::new();
    // (lower, higher) -> the lower server's group and its position
    let mut shared: BTreeMap<(usize, usize), (GroupPlan, usize)> = BTreeMap::new();
    let mut steps = Vec::new();

    for n in 0..cfg.d {
        let s = ServerId(n + 1);
        let mut list: Vec<GroupPlan> = Vec::new();
        for m in (0..cfg.d).filter(|&m| m != n) {
            for k in 0..cfg.k as u16 {
                let members = tail.clone().fix(n, vstar.get(n)).fix(m, k).members(cfg.k);
                let designated = k == vstar.get(m);
                let g = if designated && m < n {
                    let (lower, at) = &shared[&(m, n)];
                    let p = lower
                        .members
                        .iter()
                        .position(|x| x == vstar)
                        .expect("designated message is in the shared group");
                    steps.push(PairStep {
                        lower: (ServerId(m + 1), *at),
                        higher: (s, list.len()),
                        logical: lower.logical[p],
                    });
                    GroupPlan {
                        members: lower.members.clone(),
                        logical: lower.logical.clone(),
                        coeffs: CoeffExpr {
                            coins: lower.coeffs.coins.clone(),
                            offset: Some(p),
                        },
                    }
                } else {
                    let logical = members
                        .iter()
                        .map(|key| indices.fresh(key))
                        .collect::<Result<Vec<_>>>()?;
                    let id = CoinId {
                        component: comp,
                        index: coins.len() as u32,
                    };
                    coins.insert(
                        id,
                        CoinSpec {
                            len: members.len(),
                            nonzero_at: None,
                        },
                    );
                    let g = GroupPlan {
                        members,
                        logical,
                        coeffs: CoeffExpr::single(id),
                    };
                    if designated {
                        shared.insert((n, m), (g.clone(), list.len()));
                    }
                    g
                };
                for (key, &i) in g.members.iter().zip(&g.logical) {
                    indices.record(s, list.len(), key, i);
                }
                list.push(g);
            }
        }
        groups.insert(s, list);
    }

    Ok(SegmentPlan {
        segment,
        groups,
        coins,
        indices,
        decoder: Decoder::Baseline(PairDecoder { steps }),
    })
}
