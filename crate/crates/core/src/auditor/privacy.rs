//! Attribute privacy by exhaustive enumeration of the user's randomness.
//!
//! For a server and each assignment of the attributes it knows, every
//! assignment of the hidden attributes is a hypothesis. The server's
//! observable is its whole query. Its randomness (coefficient vectors and
//! sub-packet permutations) splits into independent pieces: the
//! coefficients of groups sharing a vector form one piece, the requested
//! sub-packets of one message another. Each piece is enumerated on its own
//! through the real query construction, pieces whose law is the same under
//! every hypothesis are dropped, and the rest are multiplied out.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::table::{DistributionTable, Histogram};
use super::ExplicitCoins;
use crate::error::{Error, Result};
use crate::model::{
    realize, AttributeVector, CoinId, CoinSpec, Component, Query, QueryPlan, RealizedCoins,
    ServerId, SystemConfig,
};
use crate::scheme::{plan, SchemeKind};

#[derive(Debug, Clone)]
pub struct PrivacyReport {
    pub scheme: SchemeKind,
    pub server: ServerId,
    /// Assignments of the attributes the server knows.
    pub contexts: usize,
    /// Hypotheses per context.
    pub hypotheses: usize,
    pub tv: BigRational,
    pub mi_bits: f64,
    /// Randomness states enumerated in total.
    pub states: u128,
    pub components: usize,
    pub differing: usize,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Field {
    Coeffs(usize),
    Indices(Component, AttributeVector),
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

/// The deterministic part of a query: components and member lists.
fn skeleton(p: &QueryPlan, s: ServerId) -> Vec<(Component, Vec<AttributeVector>)> {
    p.segments
        .iter()
        .flat_map(|seg| {
            seg.groups_for(s)
                .iter()
                .map(move |g| (seg.segment.component, g.members.clone()))
        })
        .collect()
}

/// Coins used by each group of `s`, in query order.
fn group_coins(p: &QueryPlan, s: ServerId) -> Vec<Vec<CoinId>> {
    p.segments
        .iter()
        .flat_map(|seg| seg.groups_for(s).iter().map(|g| g.coeffs.coins.clone()))
        .collect()
}

fn coin_specs(p: &QueryPlan) -> BTreeMap<CoinId, CoinSpec> {
    p.segments.iter().flat_map(|seg| seg.coins.clone()).collect()
}

/// Logical indices of `key` requested from `s` within one component.
fn used_logical(p: &QueryPlan, s: ServerId, comp: Component, key: &AttributeVector) -> (usize, Vec<usize>) {
    let seg = p
        .segments
        .iter()
        .find(|seg| seg.segment.component == comp)
        .expect("component present in plan");
    let mut used: Vec<usize> = seg
        .groups_for(s)
        .iter()
        .flat_map(|g| g.members.iter().zip(&g.logical).filter(|(k, _)| *k == key).map(|(_, &i)| i))
        .collect();
    used.sort();
    used.dedup();
    (seg.segment.subpackets, used)
}

fn too_large(what: &str, states: u128, bound: u128) -> Error {
    Error::DomainTooLarge {
        what: what.into(),
        states,
        bound,
    }
}

/// Observable of one coefficient piece: the coefficient vectors of the
/// given groups, over every joint value of the coins they use.
fn coeff_table(
    p: &QueryPlan,
    s: ServerId,
    cfg: &SystemConfig,
    groups: &[usize],
    bound: u128,
) -> Result<(DistributionTable, u128)> {
    let per_group = group_coins(p, s);
    let specs = coin_specs(p);
    let mut coins: Vec<CoinId> = groups.iter().flat_map(|&g| per_group[g].iter().copied()).collect();
    coins.sort();
    coins.dedup();
    let q = cfg.field.q() as u32;
    // one digit per coordinate: (coin, position, low value)
    let mut digits: Vec<(CoinId, usize, u32)> = Vec::new();
    for c in &coins {
        let spec = specs[c];
        for pos in 0..spec.len {
            digits.push((*c, pos, u32::from(spec.nonzero_at == Some(pos))));
        }
    }
    let states: u128 = digits
        .iter()
        .try_fold(1u128, |acc, &(_, _, lo)| acc.checked_mul((q - lo) as u128))
        .unwrap_or(u128::MAX);
    if states > bound {
        return Err(too_large("coefficient piece", states, bound));
    }
    let mut values: Vec<u32> = digits.iter().map(|&(_, _, lo)| lo).collect();
    let mut table = DistributionTable::new();
    loop {
        let mut src = ExplicitCoins::new(cfg.field);
        for (&(c, pos, _), &v) in digits.iter().zip(&values) {
            src.set_coeff(c, specs[&c].len, pos, v);
        }
        let query = realize(p, s, &RealizedCoins::draw(p, &src), cfg.field);
        let outcome = groups
            .iter()
            .flat_map(|&g| query.groups[g].coeffs.iter().map(|e| e.value()))
            .collect();
        table.add(outcome, 1);
        // odometer
        let mut i = 0;
        loop {
            if i == values.len() {
                return Ok((table, states));
            }
            values[i] += 1;
            if values[i] < q {
                break;
            }
            values[i] = digits[i].2;
            i += 1;
        }
    }
}

fn injective_maps(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, k: usize, cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                go(n, k, cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(n, k, &mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Observable of one message's requested sub-packets, over every value the
/// permutation can take on the logical indices actually used.
fn index_table(
    p: &QueryPlan,
    s: ServerId,
    cfg: &SystemConfig,
    comp: Component,
    key: &AttributeVector,
    bound: u128,
) -> Result<(DistributionTable, u128)> {
    let (n, used) = used_logical(p, s, comp, key);
    let states: u128 = (n - used.len() + 1..=n).map(|x| x as u128).product();
    if states > bound {
        return Err(too_large("sub-packet piece", states, bound));
    }
    let mut table = DistributionTable::new();
    for image in injective_maps(n, used.len()) {
        let mut perm: Vec<Option<usize>> = vec![None; n];
        for (&l, &a) in used.iter().zip(&image) {
            perm[l] = Some(a);
        }
        let mut rest = (0..n).filter(|a| !image.contains(a));
        let perm: Vec<usize> = perm.into_iter().map(|x| x.unwrap_or_else(|| rest.next().unwrap())).collect();
        let mut src = ExplicitCoins::new(cfg.field);
        src.set_perm(comp, key.clone(), perm);
        let query = realize(p, s, &RealizedCoins::draw(p, &src), cfg.field);
        table.add(sub_packets_of(&query, comp, key), 1);
    }
    Ok((table, states))
}

fn sub_packets_of(query: &Query, comp: Component, key: &AttributeVector) -> Vec<u16> {
    query
        .groups
        .iter()
        .filter(|g| g.component == comp)
        .flat_map(|g| g.members.iter().filter(|m| &m.key == key).map(|m| m.subpacket as u16))
        .collect()
}

struct ContextResult {
    tv: BigRational,
    mi: f64,
    states: u128,
    components: usize,
    differing: usize,
}

fn audit_context(
    cfg: &SystemConfig,
    s: ServerId,
    plans: &[QueryPlan],
    bound: u128,
) -> Result<ContextResult> {
    let skeletons: Vec<_> = plans.iter().map(|p| skeleton(p, s)).collect();
    if skeletons.iter().any(|sk| sk != &skeletons[0]) {
        // the member lists alone tell hypotheses apart
        let mut classes: HashMap<&Vec<(Component, Vec<AttributeVector>)>, usize> = HashMap::new();
        for sk in &skeletons {
            *classes.entry(sk).or_default() += 1;
        }
        let h = plans.len() as f64;
        let mi = classes.values().map(|&c| -(c as f64 / h) * (c as f64 / h).log2()).sum();
        return Ok(ContextResult {
            tv: BigRational::one(),
            mi,
            states: 0,
            components: 0,
            differing: 0,
        });
    }
    let sk = &skeletons[0];

    let mut fields: Vec<Field> = (0..sk.len()).map(Field::Coeffs).collect();
    let mut keys: Vec<(Component, AttributeVector)> = sk
        .iter()
        .flat_map(|(c, members)| members.iter().map(move |m| (*c, m.clone())))
        .collect();
    keys.sort();
    keys.dedup();
    fields.extend(keys.into_iter().map(|(c, k)| Field::Indices(c, k)));

    let mut uf = UnionFind((0..fields.len()).collect());
    for p in plans {
        let mut by_coin: BTreeMap<CoinId, Vec<usize>> = BTreeMap::new();
        for (g, coins) in group_coins(p, s).into_iter().enumerate() {
            for c in coins {
                by_coin.entry(c).or_default().push(g);
            }
        }
        for gs in by_coin.values() {
            for w in gs.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
    }
    let mut pieces: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..fields.len() {
        let r = uf.find(i);
        pieces.entry(r).or_default().push(i);
    }

    let mut states = 0u128;
    let mut joint = Histogram::unit(plans.len());
    let mut differing = 0;
    for members in pieces.values() {
        let mut tables = Vec::with_capacity(plans.len());
        for p in plans {
            let (t, n) = match &fields[members[0]] {
                Field::Coeffs(_) => {
                    let groups: Vec<usize> = members
                        .iter()
                        .map(|&i| match fields[i] {
                            Field::Coeffs(g) => g,
                            Field::Indices(..) => unreachable!("coefficients and permutations never share randomness"),
                        })
                        .collect();
                    coeff_table(p, s, cfg, &groups, bound)?
                }
                Field::Indices(c, k) => index_table(p, s, cfg, *c, k, bound)?,
            };
            states += n;
            tables.push(t);
        }
        if tables.iter().all(|t| t.same_distribution(&tables[0])) {
            continue;
        }
        differing += 1;
        joint = joint.product(&Histogram::from_tables(&tables), bound)?;
    }
    Ok(ContextResult {
        tv: if differing == 0 { BigRational::zero() } else { joint.max_tv() },
        mi: if differing == 0 { 0.0 } else { joint.mutual_information() },
        states,
        components: pieces.len(),
        differing,
    })
}

fn assignments(k: usize, positions: &[usize], n: usize, base: &[u16]) -> Vec<AttributeVector> {
    let mut out = vec![base.to_vec()];
    for &pos in positions {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..k as u16).map(move |x| {
                    let mut v = v.clone();
                    v[pos] = x;
                    v
                })
            })
            .collect();
    }
    debug_assert!(out.iter().all(|v| v.len() == n));
    out.into_iter().map(AttributeVector::new).collect()
}

/// Positions server `s` learns during verification.
pub fn known_positions(cfg: &SystemConfig, s: ServerId) -> Vec<usize> {
    let mut known: Vec<usize> = (cfg.d..cfg.n).collect();
    if !cfg.is_central(s) {
        known.insert(0, s.0 - 1);
    }
    known
}

/// Maximum total-variation distance between the query laws of server `s`
/// under any two hidden-attribute assignments, over every assignment of
/// what `s` knows. A server the scheme never queries sees a constant.
pub fn audit_attribute_privacy(
    kind: SchemeKind,
    cfg: &SystemConfig,
    s: ServerId,
    bound: u128,
) -> Result<PrivacyReport> {
    let start = Instant::now();
    let known = known_positions(cfg, s);
    let hidden: Vec<usize> = (0..cfg.n).filter(|p| !known.contains(p)).collect();
    let contexts = assignments(cfg.k, &known, cfg.n, &vec![0; cfg.n]);
    let mut report = PrivacyReport {
        scheme: kind,
        server: s,
        contexts: contexts.len(),
        hypotheses: cfg.k.pow(hidden.len() as u32),
        tv: BigRational::zero(),
        mi_bits: 0.0,
        states: 0,
        components: 0,
        differing: 0,
        elapsed_ms: 0,
    };
    for ctx in contexts {
        let plans = assignments(cfg.k, &hidden, cfg.n, ctx.coords())
            .iter()
            .map(|v| plan(kind, cfg, v))
            .collect::<Result<Vec<_>>>()?;
        let r = audit_context(cfg, s, &plans, bound)?;
        report.tv = report.tv.max(r.tv);
        report.mi_bits = report.mi_bits.max(r.mi);
        report.states += r.states;
        report.components = report.components.max(r.components);
        report.differing = report.differing.max(r.differing);
    }
    report.elapsed_ms = start.elapsed().as_millis();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn injective_map_counts() {
        assert_eq!(injective_maps(4, 2).len(), 12);
        assert_eq!(injective_maps(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(injective_maps(6, 6).len(), 720);
    }

    #[test]
    fn assignments_cover_hidden_positions() {
        let a = assignments(3, &[0, 2], 3, &[0, 1, 0]);
        assert_eq!(a.len(), 9);
        assert!(a.iter().all(|v| v.get(1) == 1));
    }
}
