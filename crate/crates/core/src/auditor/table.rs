use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact distribution of an observable, built by counting every state of
/// the randomness that produces it. Probabilities are `count / total`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DistributionTable {
    counts: BTreeMap<Vec<u16>, u64>,
    total: u64,
}

impl DistributionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, outcome: Vec<u16>, weight: u64) {
        *self.counts.entry(outcome).or_insert(0) += weight;
        self.total += weight;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, outcome: &[u16]) -> u64 {
        self.counts.get(outcome).copied().unwrap_or(0)
    }

    pub fn prob(&self, outcome: &[u16]) -> BigRational {
        BigRational::new(BigInt::from(self.count(outcome)), BigInt::from(self.total))
    }

    pub fn outcomes(&self) -> impl Iterator<Item = &Vec<u16>> {
        self.counts.keys()
    }

    /// Equality as distributions (the totals may differ).
    pub fn same_distribution(&self, other: &Self) -> bool {
        self.counts.len() == other.counts.len()
            && self.counts.iter().all(|(o, &c)| {
                c as u128 * other.total as u128 == other.count(o) as u128 * self.total as u128
            })
    }

    pub fn tv(&self, other: &Self) -> BigRational {
        let keys: BTreeSet<&Vec<u16>> = self.counts.keys().chain(other.counts.keys()).collect();
        let sum: BigRational = keys
            .into_iter()
            .map(|o| (self.prob(o) - other.prob(o)).abs())
            .fold(BigRational::zero(), |a, b| a + b);
        sum / BigRational::from_integer(BigInt::from(2))
    }
}

/// Joint law of an observable under several hypotheses, kept only up to
/// what total variation and mutual information need: the multiset of
/// per-outcome probability vectors.
#[derive(Debug, Clone)]
pub struct Histogram {
    hypotheses: usize,
    entries: BTreeMap<Vec<BigRational>, BigUint>,
}

impl Histogram {
    /// The trivial observable: one outcome, probability 1 everywhere.
    pub fn unit(hypotheses: usize) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(vec![BigRational::one(); hypotheses], BigUint::one());
        Histogram { hypotheses, entries }
    }

    pub fn from_tables(tables: &[DistributionTable]) -> Self {
        let outcomes: BTreeSet<&Vec<u16>> = tables.iter().flat_map(|t| t.outcomes()).collect();
        let mut entries: BTreeMap<Vec<BigRational>, BigUint> = BTreeMap::new();
        for o in outcomes {
            let v: Vec<BigRational> = tables.iter().map(|t| t.prob(o)).collect();
            *entries.entry(v).or_default() += 1u32;
        }
        Histogram {
            hypotheses: tables.len(),
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Law of two independent observables taken together.
    pub fn product(&self, other: &Self, bound: u128) -> Result<Self> {
        let states = self.entries.len() as u128 * other.entries.len() as u128;
        if states > bound {
            return Err(Error::DomainTooLarge {
                what: "joint histogram".into(),
                states,
                bound,
            });
        }
        let mut entries: BTreeMap<Vec<BigRational>, BigUint> = BTreeMap::new();
        for (a, ma) in &self.entries {
            for (b, mb) in &other.entries {
                let v: Vec<BigRational> = a.iter().zip(b).map(|(x, y)| x * y).collect();
                *entries.entry(v).or_default() += ma * mb;
            }
        }
        Ok(Histogram {
            hypotheses: self.hypotheses,
            entries,
        })
    }

    pub fn tv(&self, i: usize, j: usize) -> BigRational {
        let sum = self
            .entries
            .iter()
            .map(|(v, m)| (&v[i] - &v[j]).abs() * BigRational::from_integer(BigInt::from(m.clone())))
            .fold(BigRational::zero(), |a, b| a + b);
        sum / BigRational::from_integer(BigInt::from(2))
    }

    pub fn max_tv(&self) -> BigRational {
        let mut best = BigRational::zero();
        for i in 0..self.hypotheses {
            for j in i + 1..self.hypotheses {
                best = best.max(self.tv(i, j));
            }
        }
        best
    }

    /// Mutual information in bits between a uniformly drawn hypothesis and
    /// the observable.
    pub fn mutual_information(&self) -> f64 {
        let h = self.hypotheses as f64;
        let mut bits = 0.0;
        for (v, m) in &self.entries {
            let m = m.to_f64().unwrap_or(f64::INFINITY);
            let p: Vec<f64> = v.iter().map(|x| x.to_f64().unwrap_or(0.0)).collect();
            let mean = p.iter().sum::<f64>() / h;
            for &x in &p {
                if x > 0.0 {
                    bits += m * x / h * (x / mean).log2();
                }
            }
        }
        bits.max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(entries: &[(&[u16], u64)]) -> DistributionTable {
        let mut t = DistributionTable::new();
        for (o, c) in entries {
            t.add(o.to_vec(), *c);
        }
        t
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn tv_and_equality() {
        let a = table(&[(&[0], 1), (&[1], 1)]);
        let b = table(&[(&[0], 2), (&[1], 2)]);
        let c = table(&[(&[0], 3), (&[1], 1)]);
        assert!(a.same_distribution(&b));
        assert_eq!(a.tv(&b), r(0, 1));
        assert_eq!(a.tv(&c), r(1, 4));
        assert_eq!(a.tv(&table(&[(&[2], 1)])), r(1, 1));
    }

    #[test]
    fn histogram_matches_direct_joint() {
        let x = [table(&[(&[0], 1), (&[1], 1)]), table(&[(&[0], 3), (&[1], 1)])];
        let y = [table(&[(&[0], 1), (&[1], 2)]), table(&[(&[0], 2), (&[1], 1)])];
        let hx = Histogram::from_tables(&x);
        let hy = Histogram::from_tables(&y);
        let joint = hx.product(&hy, 1 << 20).unwrap();
        // direct product tables
        let direct: Vec<DistributionTable> = (0..2)
            .map(|h| {
                let mut t = DistributionTable::new();
                for a in x[h].outcomes() {
                    for b in y[h].outcomes() {
                        let mut o = a.clone();
                        o.extend(b);
                        t.add(o, x[h].count(a) * y[h].count(b) * 12 / (x[h].total() * y[h].total()));
                    }
                }
                t
            })
            .collect();
        assert_eq!(joint.tv(0, 1), direct[0].tv(&direct[1]));
        assert!(joint.mutual_information() > 0.0);
        assert_eq!(Histogram::from_tables(&[x[0].clone(), x[0].clone()]).mutual_information(), 0.0);
    }

    #[test]
    fn product_respects_bound() {
        let a = Histogram::from_tables(&[table(&[(&[0], 1), (&[1], 1), (&[2], 2)])]);
        assert!(matches!(a.product(&a, 3), Err(Error::DomainTooLarge { .. })));
        assert_eq!(a.product(&a, 4).unwrap().entries.len(), 3);
    }

    #[test]
    fn mutual_information_of_a_perfect_channel_is_one_bit() {
        let h = Histogram::from_tables(&[table(&[(&[0], 1)]), table(&[(&[1], 1)])]);
        assert!((h.mutual_information() - 1.0).abs() < 1e-12);
        assert_eq!(h.max_tv(), r(1, 1));
    }
}
