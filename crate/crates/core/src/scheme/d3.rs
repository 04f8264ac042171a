//! Retrieval with three dedicated servers and a central server.
//!
//! The building block is a subset of `K` messages that agree on two of the
//! three dedicated attributes (and on the tail). Dedicated server `n` sees
//! the `2K` subsets that fix `v_n = v*_n`, ordered in two collections: the
//! one pairing `n` with the smaller other attribute, then the one pairing it
//! with the larger. Three of these subsets contain the designated message
//! and are seen by two servers each; the second server reuses the indices
//! and coefficients of the first, except for a fresh sub-packet of `v*`.
//!
//! The central server receives `3K` groups of `K^2` messages, one per
//! attribute `n` and value `k`. Each is the concatenation of the `K` subsets
//! pairing `n` with `(n + 1) mod 3`. For `k = v*_n` the group repeats server
//! `n`'s subsets, indices and coefficients (plus a unit offset on `v*`).

use std::collections::BTreeMap;

use super::{Decoder, SegmentAnswers};
use crate::error::{decode_err, Result};
use crate::field::{add_vec, sub_vec, FieldElement};
use crate::model::{
    AttributeVector, CoeffExpr, CoinId, CoinSpec, Component, GroupPlan, Pattern, RealizedCoins,
    Segment, SegmentPlan, ServerId, SubPacketPlan, SystemConfig,
};

/// The attribute each dedicated attribute is paired with at the central
/// server. Any choice making the three pairs distinct works; the cycle is
/// the simplest.
pub fn central_partner(n: usize) -> usize {
    (n + 1) % 3
}

fn others(n: usize) -> [usize; 2] {
    match n {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

/// Recovery of two sub-packets through attribute `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct D3Step {
    pub central_row: usize,
    pub server: ServerId,
    /// Rows of `server` whose sum cancels the central row except for `v*`.
    pub rows: Vec<usize>,
    pub first_logical: usize,
    /// The shared subset as answered by `server` and by the other server.
    pub here: (ServerId, usize),
    pub there: (ServerId, usize),
    pub coin: CoinId,
    pub pos: usize,
    pub second_logical: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct D3Decoder {
    pub central: ServerId,
    pub steps: Vec<D3Step>,
}

impl D3Decoder {
    pub fn recover(
        &self,
        answers: &SegmentAnswers<'_>,
        coins: &RealizedCoins,
    ) -> Result<Vec<(usize, Vec<FieldElement>)>> {
        let err = |e: crate::field::FieldError| decode_err(e.to_string());
        let mut out = Vec::with_capacity(2 * self.steps.len());
        for st in &self.steps {
            let mut first = answers.row(self.central, st.central_row)?.to_vec();
            for &r in &st.rows {
                first = sub_vec(&first, answers.row(st.server, r)?).map_err(err)?;
            }
            let diff = sub_vec(answers.row(st.there.0, st.there.1)?, answers.row(st.here.0, st.here.1)?)
                .map_err(err)?;
            let h = coins.coeffs(st.coin)[st.pos];
            let inv = h
                .inv()
                .map_err(|_| decode_err("shared-subset coefficient at the designated position is zero"))?;
            let scaled: Vec<FieldElement> = diff.into_iter().map(|x| x * inv).collect();
            let second = add_vec(&first, &scaled).map_err(err)?;
            out.push((st.first_logical, first));
            out.push((st.second_logical, second));
        }
        Ok(out)
    }
}

fn position(members: &[AttributeVector], key: &AttributeVector) -> usize {
    members
        .iter()
        .position(|x| x == key)
        .expect("designated message is in the subset")
}

pub fn plan_segment(cfg: &SystemConfig, vstar: &AttributeVector, segment: Segment) -> Result<SegmentPlan> {
    let comp = Component::D3;
    let central = cfg.central();
    let k = cfg.k;
    let tail = cfg.tail_pattern(vstar);
    let mut indices = SubPacketPlan::new(segment.subpackets);
    let mut coins = BTreeMap::new();
    let new_coin = |coins: &mut BTreeMap<CoinId, CoinSpec>, len: usize, nonzero_at: Option<usize>| {
        let id = CoinId {
            component: comp,
            index: coins.len() as u32,
        };
        coins.insert(id, CoinSpec { len, nonzero_at });
        id
    };
    let mut groups: BTreeMap<ServerId, Vec<GroupPlan>> = BTreeMap::new();
    // first occurrence of each subset: server and row
    let mut first_seen: BTreeMap<Pattern, (ServerId, usize)> = BTreeMap::new();
    // (n, partner, partner value) -> row at server n
    let mut rows: BTreeMap<(usize, usize, u16), usize> = BTreeMap::new();

    for n in 0..3 {
        let s = ServerId(n + 1);
        let mut list: Vec<GroupPlan> = Vec::new();
        for partner in others(n) {
            for kv in 0..k as u16 {
                let pat = tail.clone().fix(n, vstar.get(n)).fix(partner, kv);
                let members = pat.members(k);
                let g = if let Some(&(s0, r0)) = first_seen.get(&pat) {
                    let earlier = &groups[&s0][r0];
                    let mut logical = earlier.logical.clone();
                    logical[position(&members, vstar)] = indices.fresh(vstar)?;
                    GroupPlan {
                        members,
                        logical,
                        coeffs: earlier.coeffs.clone(),
                    }
                } else {
                    let logical = members
                        .iter()
                        .map(|key| indices.fresh(key))
                        .collect::<Result<Vec<_>>>()?;
                    let nonzero_at = (kv == vstar.get(partner)).then(|| position(&members, vstar));
                    let id = new_coin(&mut coins, k, nonzero_at);
                    first_seen.insert(pat, (s, list.len()));
                    GroupPlan {
                        members,
                        logical,
                        coeffs: CoeffExpr::single(id),
                    }
                };
                for (key, &i) in g.members.iter().zip(&g.logical) {
                    indices.record(s, list.len(), key, i);
                }
                rows.insert((n, partner, kv), list.len());
                list.push(g);
            }
        }
        groups.insert(s, list);
    }

    let mut central_groups = Vec::with_capacity(3 * k);
    let mut steps = Vec::new();
    for n in 0..3 {
        let p = central_partner(n);
        let s = ServerId(n + 1);
        for value in 0..k as u16 {
            let row = central_groups.len();
            let g = if value == vstar.get(n) {
                let own: Vec<usize> = (0..k as u16).map(|kv| rows[&(n, p, kv)]).collect();
                let blocks: Vec<&GroupPlan> = own.iter().map(|&r| &groups[&s][r]).collect();
                let members: Vec<AttributeVector> =
                    blocks.iter().flat_map(|g| g.members.iter().cloned()).collect();
                let logical: Vec<usize> = blocks.iter().flat_map(|g| g.logical.iter().copied()).collect();
                let coins_cat: Vec<CoinId> = blocks.iter().flat_map(|g| g.coeffs.coins.iter().copied()).collect();
                let offset = position(&members, vstar);

                let shared_kv = vstar.get(p);
                let here_row = rows[&(n, p, shared_kv)];
                let there_row = rows[&(p, n, vstar.get(n))];
                let here = &groups[&s][here_row];
                let there = &groups[&ServerId(p + 1)][there_row];
                let pos = position(&here.members, vstar);
                steps.push(D3Step {
                    central_row: row,
                    server: s,
                    rows: own,
                    first_logical: logical[offset],
                    here: (s, here_row),
                    there: (ServerId(p + 1), there_row),
                    coin: here.coeffs.coins[0],
                    pos,
                    second_logical: there.logical[pos],
                });
                GroupPlan {
                    members,
                    logical,
                    coeffs: CoeffExpr {
                        coins: coins_cat,
                        offset: Some(offset),
                    },
                }
            } else {
                let members: Vec<AttributeVector> = (0..k as u16)
                    .flat_map(|kv| tail.clone().fix(n, value).fix(p, kv).members(k))
                    .collect();
                let logical = members
                    .iter()
                    .map(|key| indices.fresh(key))
                    .collect::<Result<Vec<_>>>()?;
                let id = new_coin(&mut coins, k * k, None);
                GroupPlan {
                    members,
                    logical,
                    coeffs: CoeffExpr::single(id),
                }
            };
            for (key, &i) in g.members.iter().zip(&g.logical) {
                indices.record(central, row, key, i);
            }
            central_groups.push(g);
        }
    }
    groups.insert(central, central_groups);

    if indices.used(vstar) != segment.subpackets {
        return Err(decode_err(format!(
            "designated message received {} of {} sub-packets",
            indices.used(vstar),
            segment.subpackets
        )));
    }

    Ok(SegmentPlan {
        segment,
        groups,
        coins,
        indices,
        decoder: Decoder::D3(D3Decoder { central, steps }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldPrime;
    use crate::model::pad_keys;
    use crate::scheme::{plan, SchemeKind};
    use std::collections::BTreeSet;

    fn example() -> (SystemConfig, AttributeVector) {
        let c = SystemConfig::new(
            4,
            3,
            2,
            FieldPrime::new(257).unwrap(),
            6,
            vec![
                vec!["a".into(), "b".into()],
                vec!["1".into(), "2".into()],
                vec!["u".into(), "v".into()],
                vec!["x".into(), "y".into()],
            ],
            1,
        )
        .unwrap();
        let vstar = c.parse_labels(&["a", "2", "u", "y"]).unwrap();
        (c, vstar)
    }

    fn logical_of(seg: &SegmentPlan, s: usize, row: usize, labels: [&str; 4], c: &SystemConfig) -> usize {
        let key = c.parse_labels(&labels).unwrap();
        seg.indices.assigned(ServerId(s), row, &key).unwrap()
    }

    #[test]
    fn designated_indices_follow_the_worked_example() {
        let (c, vstar) = example();
        let p = plan(SchemeKind::D3, &c, &vstar).unwrap();
        let seg = &p.segments[0];
        let a2uy = ["a", "2", "u", "y"];
        // (server, row) -> expected 0-based index of the designated message
        for ((s, row), want) in [((1, 1), 0), ((1, 2), 1), ((2, 0), 2), ((2, 2), 3), ((3, 0), 4), ((3, 3), 5)] {
            assert_eq!(logical_of(seg, s, row, a2uy, &c), want, "server {s} row {row}");
        }
        // a non-designated message keeps its index when the subset reappears
        assert_eq!(logical_of(seg, 2, 2, ["b", "2", "u", "y"], &c), 1);
        assert_eq!(logical_of(seg, 3, 3, ["b", "2", "u", "y"], &c), 1);
        assert_eq!(seg.indices.used(&vstar), 6);
    }

    #[test]
    fn group_shapes_and_coefficient_reuse() {
        let (c, vstar) = example();
        let p = plan(SchemeKind::D3, &c, &vstar).unwrap();
        let seg = &p.segments[0];
        for s in 1..=3 {
            let list = seg.groups_for(ServerId(s));
            assert_eq!(list.len(), 4);
            assert!(list.iter().all(|g| g.members.len() == 2 && g.coeffs.offset.is_none()));
        }
        let db = |s: usize, r: usize| seg.groups_for(ServerId(s))[r].coeffs.coins[0];
        assert_eq!(db(2, 0), db(1, 1));
        assert_eq!(db(3, 0), db(1, 2));
        assert_eq!(db(3, 3), db(2, 2));
        // 6K vectors of which 3 are reused: 9 distinct short coins, 3 long ones
        assert_eq!(seg.coins.values().filter(|c| c.len == 2).count(), 9);
        assert_eq!(seg.coins.values().filter(|c| c.len == 4).count(), 3);
        assert_eq!(seg.coins.values().filter(|c| c.nonzero_at.is_some()).count(), 3);

        let central = seg.groups_for(c.central());
        assert_eq!(central.len(), 6);
        assert!(central.iter().all(|g| g.members.len() == 4));
        // first central row: server 1's first two groups, offset on v* in the second block
        assert_eq!(central[0].coeffs.coins, vec![db(1, 0), db(1, 1)]);
        assert_eq!(central[0].coeffs.offset, Some(2));
        // v*_2 = 2 so row 3 is designated: server 2's third and fourth groups
        assert_eq!(central[3].coeffs.coins, vec![db(2, 2), db(2, 3)]);
        assert_eq!(central[3].coeffs.offset, Some(0));
        // attribute 3 pairs with attribute 1: server 3's first two groups, offset e_2
        assert_eq!(central[4].coeffs.coins, vec![db(3, 0), db(3, 1)]);
        assert_eq!(central[4].coeffs.offset, Some(1));
    }

    #[test]
    fn pool_usage_and_sharing() {
        let (c, vstar) = example();
        let p = plan(SchemeKind::D3, &c, &vstar).unwrap();
        let seg = &p.segments[0];
        let mut all = BTreeSet::new();
        let mut per_db: Vec<BTreeSet<_>> = Vec::new();
        for (s, list) in &seg.groups {
            let mut mine = BTreeSet::new();
            for g in list {
                for ch in pad_keys(Component::D3, c.is_central(*s), c.k, &g.members).unwrap() {
                    mine.insert(ch.clone());
                    all.insert(ch);
                }
            }
            if !c.is_central(*s) {
                per_db.push(mine);
            }
        }
        assert_eq!(all.len(), 3 * c.k * c.k);
        let shared: usize = (0..3)
            .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
            .map(|(i, j)| per_db[i].intersection(&per_db[j]).count())
            .sum();
        assert_eq!(shared, 3);
    }

    #[test]
    fn every_vstar_gets_six_sub_packets_without_overflow() {
        for k in [2usize, 3] {
            let c = SystemConfig::with_default_alphabets(4, 3, k, FieldPrime::new(257).unwrap(), 6, 0).unwrap();
            for vstar in c.all_keys() {
                let p = plan(SchemeKind::D3, &c, &vstar).unwrap();
                let seg = &p.segments[0];
                assert_eq!(seg.indices.used(&vstar), 6);
                let Decoder::D3(d) = &seg.decoder else { panic!() };
                let mut got: Vec<usize> = d.steps.iter().flat_map(|s| [s.first_logical, s.second_logical]).collect();
                got.sort();
                assert_eq!(got, (0..6).collect::<Vec<_>>());
            }
        }
    }
}
