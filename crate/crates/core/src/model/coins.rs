use rand::seq::SliceRandom;
use rand::Rng;

use super::config::AttributeVector;
use super::plan::Component;
use super::store::{derive_rng, key_bytes, uniform_elements};
use crate::field::{FieldElement, FieldPrime};

/// Names one coefficient vector the user draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoinId {
    pub component: Component,
    pub index: u32,
}

/// Shape of a coefficient vector: uniform over `F_q^len`, except that the
/// coordinate `nonzero_at` (if any) is uniform over the nonzero elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoinSpec {
    pub len: usize,
    pub nonzero_at: Option<usize>,
}

/// The user's private randomness: coefficient vectors and one sub-packet
/// permutation per message and scheme component.
pub trait CoinSource {
    fn coeffs(&self, id: CoinId, spec: &CoinSpec) -> Vec<FieldElement>;
    fn perm(&self, component: Component, key: &AttributeVector, n: usize) -> Vec<usize>;
}

#[derive(Debug, Clone, Copy)]
pub struct SeededCoins {
    seed: u64,
    field: FieldPrime,
}

impl SeededCoins {
    pub fn new(seed: u64, field: FieldPrime) -> Self {
        SeededCoins { seed, field }
    }
}

impl CoinSource for SeededCoins {
    fn coeffs(&self, id: CoinId, spec: &CoinSpec) -> Vec<FieldElement> {
        let mut key = vec![id.component as u8];
        key.extend_from_slice(&id.index.to_be_bytes());
        let mut rng = derive_rng(self.seed, "user-coeff", &key);
        let mut v = uniform_elements(&mut rng, self.field, spec.len);
        if let Some(pos) = spec.nonzero_at {
            v[pos] = self.field.reduce(rng.gen_range(1..self.field.q() as u64));
        }
        v
    }

    fn perm(&self, component: Component, key: &AttributeVector, n: usize) -> Vec<usize> {
        let mut k = vec![component as u8];
        k.extend(key_bytes(key));
        let mut rng = derive_rng(self.seed, "user-perm", &k);
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(&mut rng);
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonzero_coordinate_is_never_zero_at_q2() {
        let f = FieldPrime::new(2).unwrap();
        let spec = CoinSpec {
            len: 3,
            nonzero_at: Some(1),
        };
        for seed in 0..50 {
            let c = SeededCoins::new(seed, f).coeffs(
                CoinId {
                    component: Component::D3,
                    index: 4,
                },
                &spec,
            );
            assert_eq!(c.len(), 3);
            assert_eq!(c[1].value(), 1);
        }
    }

    #[test]
    fn permutations_are_permutations() {
        let coins = SeededCoins::new(3, FieldPrime::new(5).unwrap());
        let key = AttributeVector::new(vec![0, 1]);
        let mut p = coins.perm(Component::D3, &key, 6);
        assert_eq!(p, coins.perm(Component::D3, &key, 6));
        p.sort_unstable();
        assert_eq!(p, (0..6).collect::<Vec<_>>());
    }
}
