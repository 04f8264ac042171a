use std::fmt;

use crate::error::{config_err, Result};
use crate::field::FieldPrime;

/// 1-based server number: `1..=D` are the dedicated servers, `D + 1` is the
/// central one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ServerId(pub usize);

impl fmt::Display for ServerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A user identity: one alphabet index per attribute position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttributeVector(Vec<u16>);

impl AttributeVector {
    pub fn new(coords: Vec<u16>) -> Self {
        AttributeVector(coords)
    }

    pub fn coords(&self) -> &[u16] {
        &self.0
    }

    pub fn get(&self, pos: usize) -> u16 {
        self.0[pos]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn with(&self, pos: usize, value: u16) -> Self {
        let mut c = self.0.clone();
        c[pos] = value;
        AttributeVector(c)
    }
}

/// A set of attribute vectors described by the coordinates that are pinned.
/// Free coordinates range over the whole alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern(Vec<Option<u16>>);

impl Pattern {
    pub fn new(slots: Vec<Option<u16>>) -> Self {
        Pattern(slots)
    }

    pub fn free(n: usize) -> Self {
        Pattern(vec![None; n])
    }

    pub fn slots(&self) -> &[Option<u16>] {
        &self.0
    }

    pub fn fix(mut self, pos: usize, value: u16) -> Self {
        self.0[pos] = Some(value);
        self
    }

    pub fn matches(&self, key: &AttributeVector) -> bool {
        self.0
            .iter()
            .zip(key.coords())
            .all(|(slot, &c)| slot.is_none_or(|s| s == c))
    }

    /// Members in canonical (lexicographic) order.
    pub fn members(&self, k: usize) -> Vec<AttributeVector> {
        let free: Vec<usize> = (0..self.0.len()).filter(|&i| self.0[i].is_none()).collect();
        let base: Vec<u16> = self.0.iter().map(|s| s.unwrap_or(0)).collect();
        let total = k.pow(free.len() as u32);
        let mut out = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut c = base.clone();
            for &pos in free.iter().rev() {
                c[pos] = (idx % k) as u16;
                idx /= k;
            }
            out.push(AttributeVector(c));
        }
        out
    }

    /// The coordinates on which every key of a nonempty list agrees.
    pub fn common(keys: &[AttributeVector]) -> Pattern {
        let first = &keys[0];
        Pattern(
            (0..first.len())
                .map(|i| {
                    let v = first.get(i);
                    keys.iter().all(|k| k.get(i) == v).then_some(v)
                })
                .collect(),
        )
    }
}

/// Sorts a set of message keys into the order shared by the user and every
/// server: lexicographic on the attribute index tuple.
pub fn canonical_order<I: IntoIterator<Item = AttributeVector>>(keys: I) -> Vec<AttributeVector> {
    let mut v: Vec<AttributeVector> = keys.into_iter().collect();
    v.sort();
    v.dedup();
    v
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemConfig {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub field: FieldPrime,
    pub l: usize,
    pub alphabets: Vec<Vec<String>>,
    pub seed: u64,
}

impl SystemConfig {
    pub fn new(
        n: usize,
        d: usize,
        k: usize,
        field: FieldPrime,
        l: usize,
        alphabets: Vec<Vec<String>>,
        seed: u64,
    ) -> Result<Self> {
        let cfg = SystemConfig {
            n,
            d,
            k,
            field,
            l,
            alphabets,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Labels attribute `n`'s values as `<letter><index>`, e.g. `a1`, `a2`.
    pub fn with_default_alphabets(
        n: usize,
        d: usize,
        k: usize,
        field: FieldPrime,
        l: usize,
        seed: u64,
    ) -> Result<Self> {
        let alphabets = (0..n)
            .map(|pos| {
                let letter = (b'a' + (pos % 26) as u8) as char;
                (1..=k).map(|j| format!("{letter}{j}")).collect()
            })
            .collect();
        Self::new(n, d, k, field, l, alphabets, seed)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(config_err("N must be at least 1"));
        }
        if self.d == 0 || self.d > self.n {
            return Err(config_err(format!("D={} must satisfy 1 <= D <= N={}", self.d, self.n)));
        }
        if self.k < 2 || self.k > u16::MAX as usize {
            return Err(config_err(format!("K={} must be at least 2", self.k)));
        }
        if self.l == 0 {
            return Err(config_err("L must be positive"));
        }
        if self.alphabets.len() != self.n {
            return Err(config_err(format!(
                "expected {} alphabets, got {}",
                self.n,
                self.alphabets.len()
            )));
        }
        for (pos, a) in self.alphabets.iter().enumerate() {
            if a.len() != self.k {
                return Err(config_err(format!(
                    "alphabet {} has {} labels, expected K={}",
                    pos + 1,
                    a.len(),
                    self.k
                )));
            }
            let mut sorted = a.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != a.len() {
                return Err(config_err(format!("alphabet {} has duplicate labels", pos + 1)));
            }
        }
        let total = (self.k as u128).checked_pow(self.n as u32);
        if total.is_none_or(|t| t > 1 << 24) {
            return Err(config_err("K^N exceeds 2^24 messages"));
        }
        Ok(())
    }

    pub fn central(&self) -> ServerId {
        ServerId(self.d + 1)
    }

    pub fn dedicated(&self) -> impl Iterator<Item = ServerId> {
        (1..=self.d).map(ServerId)
    }

    pub fn is_central(&self, s: ServerId) -> bool {
        s.0 == self.d + 1
    }

    pub fn message_count(&self) -> usize {
        self.k.pow(self.n as u32)
    }

    /// All `K^N` keys in canonical order.
    pub fn all_keys(&self) -> Vec<AttributeVector> {
        Pattern::free(self.n).members(self.k)
    }

    pub fn key_index(&self, key: &AttributeVector) -> usize {
        key.coords()
            .iter()
            .fold(0usize, |acc, &c| acc * self.k + c as usize)
    }

    pub fn check_key(&self, key: &AttributeVector) -> Result<()> {
        if key.len() != self.n {
            return Err(config_err(format!(
                "attribute vector has {} coordinates, expected {}",
                key.len(),
                self.n
            )));
        }
        if let Some(&c) = key.coords().iter().find(|&&c| c as usize >= self.k) {
            return Err(config_err(format!("attribute index {c} out of range for K={}", self.k)));
        }
        Ok(())
    }

    pub fn label(&self, key: &AttributeVector) -> String {
        key.coords()
            .iter()
            .enumerate()
            .map(|(pos, &c)| self.alphabets[pos][c as usize].as_str())
            .collect()
    }

    /// Parses one label per attribute into an attribute vector.
    pub fn parse_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<AttributeVector> {
        if labels.len() != self.n {
            return Err(config_err(format!(
                "expected {} attribute labels, got {}",
                self.n,
                labels.len()
            )));
        }
        labels
            .iter()
            .enumerate()
            .map(|(pos, l)| {
                self.alphabets[pos]
                    .iter()
                    .position(|a| a == l.as_ref())
                    .map(|i| i as u16)
                    .ok_or_else(|| {
                        config_err(format!("unknown label {:?} for attribute {}", l.as_ref(), pos + 1))
                    })
            })
            .collect::<Result<Vec<_>>>()
            .map(AttributeVector)
    }

    /// Pattern fixing the tail positions `D..N` to the user's values.
    pub fn tail_pattern(&self, vstar: &AttributeVector) -> Pattern {
        (self.d..self.n).fold(Pattern::free(self.n), |p, pos| p.fix(pos, vstar.get(pos)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> SystemConfig {
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
            1,
        )
        .unwrap()
    }

    #[test]
    fn canonical_order_is_lexicographic() {
        let cfg = example();
        let a2y = cfg.parse_labels(&["a", "2", "y"]).unwrap();
        let a1y = cfg.parse_labels(&["a", "1", "y"]).unwrap();
        let a2x = cfg.parse_labels(&["a", "2", "x"]).unwrap();
        assert_eq!(canonical_order([a2y.clone(), a1y.clone()]), vec![a1y, a2y.clone()]);
        let ordered = canonical_order([a2y.clone(), a2x]);
        assert_eq!(ordered.iter().position(|k| *k == a2y), Some(1));
    }

    #[test]
    fn pattern_members_and_common() {
        let cfg = example();
        let p = Pattern::free(3).fix(0, 0).fix(2, 1);
        let labels: Vec<String> = p.members(2).iter().map(|k| cfg.label(k)).collect();
        assert_eq!(labels, ["a1y", "a2y"]);
        assert_eq!(Pattern::common(&p.members(2)), p);
        assert_eq!(cfg.all_keys().len(), 8);
        for (i, key) in cfg.all_keys().iter().enumerate() {
            assert_eq!(cfg.key_index(key), i);
        }
    }

    #[test]
    fn config_validation() {
        let f = FieldPrime::new(5).unwrap();
        assert!(SystemConfig::with_default_alphabets(3, 4, 2, f, 2, 0).is_err());
        assert!(SystemConfig::with_default_alphabets(3, 0, 2, f, 2, 0).is_err());
        assert!(SystemConfig::with_default_alphabets(3, 2, 1, f, 2, 0).is_err());
        let mut bad = example();
        bad.alphabets[1] = vec!["1".into(), "1".into()];
        assert!(bad.validate().is_err());
        let cfg = example();
        assert!(cfg.parse_labels(&["a", "3", "y"]).is_err());
        assert!(cfg.check_key(&AttributeVector::new(vec![0, 2, 0])).is_err());
        assert_eq!(cfg.label(&cfg.parse_labels(&["b", "1", "x"]).unwrap()), "b1x");
    }
}
