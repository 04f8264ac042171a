//! Retrieval with a central server.
//!
//! The central server receives one group `U(n, k)` per dedicated attribute
//! `n` and value `k`: every message with `v_n = k` and the user's tail.
//! Dedicated server `n` receives only `U(n, v*_n)`, with the same
//! coefficients plus a unit vector on the designated message. Each message
//! appears in exactly `D` central groups, once per attribute, so it needs
//! `D` sub-packets.

use std::collections::BTreeMap;

use super::{Decoder, SegmentAnswers};
use crate::error::{decode_err, Result};
use crate::field::{sub_vec, FieldElement};
use crate::model::{
    AttributeVector, CoeffExpr, CoinId, CoinSpec, Component, GroupPlan, Segment, SegmentPlan,
    ServerId, SubPacketPlan, SystemConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HetStep {
    pub dedicated: ServerId,
    /// Row of the central answer holding `U(n, v*_n)`.
    pub central_row: usize,
    pub logical: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HetDecoder {
    pub central: ServerId,
    pub steps: Vec<HetStep>,
}

impl HetDecoder {
    pub fn recover(&self, answers: &SegmentAnswers<'_>) -> Result<Vec<(usize, Vec<FieldElement>)>> {
        self.steps
            .iter()
            .map(|st| {
                let own = answers.row(st.dedicated, 0)?;
                let central = answers.row(self.central, st.central_row)?;
                let diff = sub_vec(own, central).map_err(|e| decode_err(e.to_string()))?;
                Ok((st.logical, diff))
            })
            .collect()
    }
}

pub fn plan_segment(cfg: &SystemConfig, vstar: &AttributeVector, segment: Segment) -> Result<SegmentPlan> {
    let comp = Component::Het;
    let central = cfg.central();
    let tail = cfg.tail_pattern(vstar);
    let mut indices = SubPacketPlan::new(segment.subpackets);
    let mut coins = BTreeMap::new();
    let mut central_groups = Vec::new();
    let mut groups = BTreeMap::new();
    let mut steps = Vec::new();

    for n in 0..cfg.d {
        for k in 0..cfg.k as u16 {
            let members = tail.clone().fix(n, k).members(cfg.k);
            let logical = members
                .iter()
                .map(|key| indices.fresh(key))
                .collect::<Result<Vec<_>>>()?;
            for (key, &i) in members.iter().zip(&logical) {
                indices.record(central, central_groups.len(), key, i);
            }
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
            central_groups.push(GroupPlan {
                members,
                logical,
                coeffs: CoeffExpr::single(id),
            });
        }
    }

    for n in 0..cfg.d {
        let s = ServerId(n + 1);
        let row = n * cfg.k + vstar.get(n) as usize;
        let g = &central_groups[row];
        let p = g
            .members
            .iter()
            .position(|x| x == vstar)
            .expect("designated message is in its own group");
        for (key, &i) in g.members.iter().zip(&g.logical) {
            indices.record(s, 0, key, i);
        }
        steps.push(HetStep {
            dedicated: s,
            central_row: row,
            logical: g.logical[p],
        });
        groups.insert(
            s,
            vec![GroupPlan {
                members: g.members.clone(),
                logical: g.logical.clone(),
                coeffs: CoeffExpr {
                    coins: g.coeffs.coins.clone(),
                    offset: Some(p),
                },
            }],
        );
    }
    groups.insert(central, central_groups);

    Ok(SegmentPlan {
        segment,
        groups,
        coins,
        indices,
        decoder: Decoder::Het(HetDecoder { central, steps }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldPrime;
    use crate::scheme::{plan, SchemeKind};

    fn cfg(n: usize, d: usize, k: usize) -> SystemConfig {
        SystemConfig::with_default_alphabets(n, d, k, FieldPrime::new(257).unwrap(), d, 3).unwrap()
    }

    #[test]
    fn two_by_two_example_groups() {
        let c = cfg(3, 2, 2);
        let vstar = AttributeVector::new(vec![0, 1, 1]);
        let p = plan(SchemeKind::HetDapac, &c, &vstar).unwrap();
        let seg = &p.segments[0];
        let central = seg.groups_for(c.central());
        assert_eq!(central.len(), 4);
        let firsts: Vec<_> = central.iter().map(|g| g.members.clone()).collect();
        assert_eq!(
            firsts[0],
            vec![AttributeVector::new(vec![0, 0, 1]), AttributeVector::new(vec![0, 1, 1])]
        );
        assert_eq!(
            firsts[3],
            vec![AttributeVector::new(vec![0, 1, 1]), AttributeVector::new(vec![1, 1, 1])]
        );
        // logical index equals the attribute the group is built on
        for (row, g) in central.iter().enumerate() {
            assert!(g.logical.iter().all(|&i| i == row / 2));
        }
        let d1 = seg.groups_for(ServerId(1));
        assert_eq!(d1.len(), 1);
        assert_eq!(d1[0].members, central[0].members);
        assert_eq!(d1[0].coeffs.offset, Some(1));
        let d2 = seg.groups_for(ServerId(2));
        assert_eq!(d2[0].members, central[3].members);
        assert_eq!(d2[0].coeffs.offset, Some(0));
    }

    #[test]
    fn counts_for_larger_systems() {
        let c = cfg(4, 3, 3);
        let vstar = AttributeVector::new(vec![2, 0, 1, 2]);
        let p = plan(SchemeKind::HetDapac, &c, &vstar).unwrap();
        let seg = &p.segments[0];
        assert_eq!(seg.groups_for(c.central()).len(), 9);
        assert!(seg.groups_for(c.central()).iter().all(|g| g.members.len() == 9));
        for key in c.all_keys() {
            let used = seg.indices.used(&key);
            assert!(used == 0 || used == 3);
        }
        assert_eq!(seg.indices.used(&vstar), 3);
    }
}
