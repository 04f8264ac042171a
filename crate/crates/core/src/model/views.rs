use std::collections::BTreeMap;

use super::config::{AttributeVector, Pattern, ServerId, SystemConfig};
use crate::error::{Error, Result};

/// The messages one server may serve to the user after verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatabaseView {
    pub server: ServerId,
    pub pattern: Pattern,
    keys: Vec<AttributeVector>,
}

impl DatabaseView {
    pub fn new(server: ServerId, pattern: Pattern, k: usize) -> Self {
        let keys = pattern.members(k);
        DatabaseView {
            server,
            pattern,
            keys,
        }
    }

    /// The view implied by what a server learnt during verification.
    pub fn from_knowledge(cfg: &SystemConfig, server: ServerId, known: &Knowledge) -> Self {
        let pattern = known
            .iter()
            .fold(Pattern::free(cfg.n), |p, (&pos, &v)| p.fix(pos, v));
        Self::new(server, pattern, cfg.k)
    }

    pub fn keys(&self) -> &[AttributeVector] {
        &self.keys
    }

    pub fn contains(&self, key: &AttributeVector) -> bool {
        self.pattern.matches(key)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Dedicated views `1..=D` followed by the central view `D + 1`.
pub fn build_views(cfg: &SystemConfig, vstar: &AttributeVector) -> Result<Vec<DatabaseView>> {
    cfg.check_key(vstar)?;
    let tail = cfg.tail_pattern(vstar);
    let mut views: Vec<DatabaseView> = cfg
        .dedicated()
        .map(|s| DatabaseView::new(s, tail.clone().fix(s.0 - 1, vstar.get(s.0 - 1)), cfg.k))
        .collect();
    views.push(DatabaseView::new(cfg.central(), tail, cfg.k));
    Ok(views)
}

/// Attribute positions (0-based) and values a server has verified or been
/// told.
pub type Knowledge = BTreeMap<usize, u16>;

/// Trusted mapping from user names to their true attribute vectors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    users: BTreeMap<String, AttributeVector>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, user: impl Into<String>, attrs: AttributeVector) {
        self.users.insert(user.into(), attrs);
    }

    pub fn get(&self, user: &str) -> Option<&AttributeVector> {
        self.users.get(user)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &AttributeVector)> {
        self.users.iter()
    }
}

/// What the user asserts to each server during verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Claims {
    pub per_server: BTreeMap<ServerId, Vec<(usize, u16)>>,
}

impl Claims {
    /// Dedicated server `n` hears only `v*_n`; the central server hears the
    /// tail `v*_{D+1..N}`.
    pub fn honest(cfg: &SystemConfig, vstar: &AttributeVector) -> Self {
        let mut per_server: BTreeMap<ServerId, Vec<(usize, u16)>> = cfg
            .dedicated()
            .map(|s| (s, vec![(s.0 - 1, vstar.get(s.0 - 1))]))
            .collect();
        per_server.insert(
            cfg.central(),
            (cfg.d..cfg.n).map(|pos| (pos, vstar.get(pos))).collect(),
        );
        Claims { per_server }
    }

    pub fn for_server(&self, s: ServerId) -> &[(usize, u16)] {
        self.per_server.get(&s).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationOutcome {
    pub knowledge: BTreeMap<ServerId, Knowledge>,
    /// Tail attributes the central server relayed to every dedicated server.
    pub relayed: Vec<(usize, u16)>,
}

/// Positions a server is responsible for verifying.
pub fn responsibility(cfg: &SystemConfig, s: ServerId) -> Vec<usize> {
    if cfg.is_central(s) {
        (cfg.d..cfg.n).collect()
    } else {
        vec![s.0 - 1]
    }
}

/// One server's check of the claims it received against the registry.
pub fn check_claims(
    cfg: &SystemConfig,
    server: ServerId,
    user: &str,
    claims: &[(usize, u16)],
    registry: &Registry,
) -> Result<Knowledge> {
    let fail = |reason: String| Error::VerificationFailed { server, reason };
    let truth = registry
        .get(user)
        .ok_or_else(|| fail(format!("unknown user {user:?}")))?;
    let expected = responsibility(cfg, server);
    let positions: Vec<usize> = claims.iter().map(|&(p, _)| p).collect();
    if positions != expected {
        return Err(fail(format!(
            "claims cover positions {positions:?}, server verifies {expected:?}"
        )));
    }
    for &(pos, value) in claims {
        if truth.get(pos) != value {
            return Err(fail(format!("attribute {} does not match the registry", pos + 1)));
        }
    }
    Ok(claims.iter().copied().collect())
}

/// Runs the verification phase: each server checks what it was told, the
/// central server verifies the tail and relays it to the dedicated servers.
pub fn verify_attributes(
    cfg: &SystemConfig,
    user: &str,
    claims: &Claims,
    registry: &Registry,
) -> Result<VerificationOutcome> {
    let central = cfg.central();
    let relayed: Vec<(usize, u16)> =
        check_claims(cfg, central, user, claims.for_server(central), registry)?
            .into_iter()
            .collect();
    let mut knowledge = BTreeMap::new();
    for s in cfg.dedicated() {
        let mut known = check_claims(cfg, s, user, claims.for_server(s), registry)?;
        known.extend(relayed.iter().copied());
        knowledge.insert(s, known);
    }
    knowledge.insert(central, relayed.iter().copied().collect());
    Ok(VerificationOutcome { knowledge, relayed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldPrime;
    use std::collections::BTreeSet;

    fn cfg(n: usize, d: usize, k: usize) -> SystemConfig {
        SystemConfig::with_default_alphabets(n, d, k, FieldPrime::new(2).unwrap(), 1, 0).unwrap()
    }

    fn labelled_cfg() -> SystemConfig {
        SystemConfig::new(
            3,
            2,
            2,
            FieldPrime::new(257).unwrap(),
            2,
            vec![
                vec!["a".into(), "b".into()],
                vec!["1".into(), "2".into()],
                vec!["x".into(), "y".into()],
            ],
            0,
        )
        .unwrap()
    }

    #[test]
    fn views_of_the_worked_example() {
        let cfg = labelled_cfg();
        let vstar = cfg.parse_labels(&["a", "2", "y"]).unwrap();
        let views = build_views(&cfg, &vstar).unwrap();
        let labels: Vec<Vec<String>> = views
            .iter()
            .map(|v| v.keys().iter().map(|k| cfg.label(k)).collect())
            .collect();
        assert_eq!(labels[0], ["a1y", "a2y"]);
        assert_eq!(labels[1], ["a2y", "b2y"]);
        assert_eq!(labels[2], ["a1y", "a2y", "b1y", "b2y"]);
    }

    #[test]
    fn central_view_without_tail_is_everything() {
        let c = cfg(3, 3, 2);
        let views = build_views(&c, &AttributeVector::new(vec![1, 0, 1])).unwrap();
        assert_eq!(views[3].len(), 8);
    }

    #[test]
    fn view_invariants_exhaustive() {
        for (n, d, k) in [(3, 2, 2), (4, 3, 2), (3, 3, 2), (4, 2, 3), (2, 1, 3)] {
            let c = cfg(n, d, k);
            for vstar in c.all_keys() {
                let views = build_views(&c, &vstar).unwrap();
                let central: BTreeSet<_> = views[d].keys().iter().cloned().collect();
                assert_eq!(central.len(), k.pow(d as u32));
                for v in &views {
                    assert!(v.contains(&vstar));
                }
                for a in 0..d {
                    assert_eq!(views[a].len(), k.pow(d as u32 - 1));
                    assert!(views[a].keys().iter().all(|key| central.contains(key)));
                    for b in a + 1..d {
                        let shared = views[a].keys().iter().filter(|key| views[b].contains(key)).count();
                        assert_eq!(shared, k.pow(d as u32 - 2));
                    }
                }
            }
        }
    }

    #[test]
    fn overlap_counts_for_4_3_2() {
        let c = cfg(4, 3, 2);
        let views = build_views(&c, &AttributeVector::new(vec![0, 1, 0, 1])).unwrap();
        assert_eq!(views[..3].iter().map(DatabaseView::len).collect::<Vec<_>>(), [4, 4, 4]);
        assert_eq!(views[3].len(), 8);
    }

    #[test]
    fn honest_verification_and_relay() {
        let cfg = labelled_cfg();
        let vstar = cfg.parse_labels(&["a", "2", "y"]).unwrap();
        let mut reg = Registry::new();
        reg.insert("alice", vstar.clone());
        let out = verify_attributes(&cfg, "alice", &Claims::honest(&cfg, &vstar), &reg).unwrap();
        assert_eq!(out.relayed, vec![(2, 1)]);
        assert_eq!(out.knowledge[&ServerId(1)], Knowledge::from([(0, 0), (2, 1)]));
        assert_eq!(out.knowledge[&ServerId(2)], Knowledge::from([(1, 1), (2, 1)]));
        assert_eq!(out.knowledge[&ServerId(3)], Knowledge::from([(2, 1)]));
        let views = build_views(&cfg, &vstar).unwrap();
        for (s, known) in &out.knowledge {
            assert_eq!(DatabaseView::from_knowledge(&cfg, *s, known), views[s.0 - 1]);
        }
    }

    #[test]
    fn wrong_claim_names_the_rejecting_server() {
        let cfg = labelled_cfg();
        let vstar = cfg.parse_labels(&["a", "2", "y"]).unwrap();
        let mut reg = Registry::new();
        reg.insert("alice", vstar.clone());
        let mut claims = Claims::honest(&cfg, &vstar);
        claims.per_server.insert(ServerId(2), vec![(1, 0)]);
        match verify_attributes(&cfg, "alice", &claims, &reg) {
            Err(Error::VerificationFailed { server, .. }) => assert_eq!(server, ServerId(2)),
            other => panic!("unexpected {other:?}"),
        }
        // a dedicated server must not be told other attributes
        let mut claims = Claims::honest(&cfg, &vstar);
        claims.per_server.insert(ServerId(1), vec![(0, 0), (1, 1)]);
        assert!(verify_attributes(&cfg, "alice", &claims, &reg).is_err());
        assert!(verify_attributes(&cfg, "bob", &Claims::honest(&cfg, &vstar), &reg).is_err());
    }

    #[test]
    fn no_tail_means_empty_relay() {
        let c = cfg(3, 3, 2);
        let vstar = AttributeVector::new(vec![0, 1, 1]);
        let mut reg = Registry::new();
        reg.insert("u", vstar.clone());
        let out = verify_attributes(&c, "u", &Claims::honest(&c, &vstar), &reg).unwrap();
        assert!(out.relayed.is_empty());
        assert_eq!(out.knowledge[&ServerId(2)], Knowledge::from([(1, 1)]));
    }
}
