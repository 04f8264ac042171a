//! Prime field arithmetic over `GF(q)` with `q < 2^16`.
//!
//! Every element carries its modulus so that values drawn from two different
//! fields can never be silently mixed. The operator impls panic on a modulus
//! mismatch; the `try_*` methods report it as [`FieldError::FieldMismatch`].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not a prime below 2^16")]
    NotPrime(u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("field mismatch: GF({0}) vs GF({1})")]
    FieldMismatch(u16, u16),
    #[error("value {value} out of range for GF({q})")]
    OutOfRange { value: u32, q: u16 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionError { expected: usize, got: usize },
}

/// The modulus of a prime field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldPrime(u16);

impl FieldPrime {
    pub fn new(q: u32) -> Result<Self, FieldError> {
        if !(2..1 << 16).contains(&q) || !is_prime(q) {
            return Err(FieldError::NotPrime(q));
        }
        Ok(FieldPrime(q as u16))
    }

    pub fn q(self) -> u16 {
        self.0
    }

    pub fn zero(self) -> FieldElement {
        FieldElement { value: 0, q: self.0 }
    }

    pub fn one(self) -> FieldElement {
        FieldElement { value: 1, q: self.0 }
    }

    /// Builds an element, rejecting values that are not already reduced.
    pub fn element(self, value: u32) -> Result<FieldElement, FieldError> {
        if value >= self.0 as u32 {
            return Err(FieldError::OutOfRange { value, q: self.0 });
        }
        Ok(FieldElement {
            value: value as u16,
            q: self.0,
        })
    }

    /// Builds an element from any integer by reducing it.
    pub fn reduce(self, value: u64) -> FieldElement {
        FieldElement {
            value: (value % self.0 as u64) as u16,
            q: self.0,
        }
    }

    pub fn zeros(self, len: usize) -> Vec<FieldElement> {
        vec![self.zero(); len]
    }

    /// All elements in increasing order.
    pub fn elements(self) -> impl Iterator<Item = FieldElement> {
        (0..self.0).map(move |value| FieldElement { value, q: self.0 })
    }
}

impl fmt::Display for FieldPrime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.0)
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    value: u16,
    q: u16,
}

impl FieldElement {
    pub fn value(self) -> u16 {
        self.value
    }

    pub fn field(self) -> FieldPrime {
        FieldPrime(self.q)
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn check(self, other: FieldElement) -> Result<(), FieldError> {
        if self.q != other.q {
            return Err(FieldError::FieldMismatch(self.q, other.q));
        }
        Ok(())
    }

    pub fn try_add(self, other: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(other)?;
        let s = self.value as u32 + other.value as u32;
        Ok(FieldElement {
            value: (s % self.q as u32) as u16,
            q: self.q,
        })
    }

    pub fn try_sub(self, other: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(other)?;
        let s = self.value as u32 + self.q as u32 - other.value as u32;
        Ok(FieldElement {
            value: (s % self.q as u32) as u16,
            q: self.q,
        })
    }

    pub fn try_mul(self, other: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(other)?;
        let p = self.value as u32 * other.value as u32;
        Ok(FieldElement {
            value: (p % self.q as u32) as u16,
            q: self.q,
        })
    }

    /// Multiplicative inverse by Fermat's little theorem.
    pub fn inv(self) -> Result<FieldElement, FieldError> {
        if self.value == 0 {
            return Err(FieldError::DivisionByZero);
        }
        Ok(self.pow(self.q as u32 - 2))
    }

    pub fn try_div(self, other: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(other)?;
        self.try_mul(other.inv()?)
    }

    pub fn pow(self, mut exp: u32) -> FieldElement {
        let q = self.q as u32;
        let mut base = self.value as u32 % q;
        let mut acc = 1 % q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % q;
            }
            base = base * base % q;
            exp >>= 1;
        }
        FieldElement {
            value: acc as u16,
            q: self.q,
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: FieldElement) -> FieldElement {
        self.try_add(rhs).expect("field mismatch")
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: FieldElement) -> FieldElement {
        self.try_sub(rhs).expect("field mismatch")
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        self.try_mul(rhs).expect("field mismatch")
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement {
            value: ((self.q - self.value) % self.q),
            q: self.q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Neg,
    Inv,
}

/// Single entry point for the five field operations. Binary operations
/// require `b`; unary ones ignore it.
pub fn arith(
    op: ArithOp,
    a: FieldElement,
    b: Option<FieldElement>,
) -> Result<FieldElement, FieldError> {
    let rhs = || b.ok_or(FieldError::DimensionError { expected: 2, got: 1 });
    match op {
        ArithOp::Add => a.try_add(rhs()?),
        ArithOp::Sub => a.try_sub(rhs()?),
        ArithOp::Mul => a.try_mul(rhs()?),
        ArithOp::Neg => Ok(-a),
        ArithOp::Inv => a.inv(),
    }
}

/// Computes `coeffs^T rows`: the column-wise inner product of a coefficient
/// vector with a matrix given as a list of equal-width rows.
pub fn dot(
    coeffs: &[FieldElement],
    rows: &[Vec<FieldElement>],
) -> Result<Vec<FieldElement>, FieldError> {
    if coeffs.len() != rows.len() {
        return Err(FieldError::DimensionError {
            expected: rows.len(),
            got: coeffs.len(),
        });
    }
    let Some(first) = rows.first() else {
        return Ok(Vec::new());
    };
    let field = first.first().map(|e| e.field());
    let width = first.len();
    let mut acc = match field {
        Some(f) => f.zeros(width),
        None => return Ok(Vec::new()),
    };
    for (h, row) in coeffs.iter().zip(rows) {
        if row.len() != width {
            return Err(FieldError::DimensionError {
                expected: width,
                got: row.len(),
            });
        }
        for (a, x) in acc.iter_mut().zip(row) {
            *a = a.try_add(h.try_mul(*x)?)?;
        }
    }
    Ok(acc)
}

/// Element-wise sum of two equal-length vectors.
pub fn add_vec(
    a: &[FieldElement],
    b: &[FieldElement],
) -> Result<Vec<FieldElement>, FieldError> {
    if a.len() != b.len() {
        return Err(FieldError::DimensionError {
            expected: a.len(),
            got: b.len(),
        });
    }
    a.iter().zip(b).map(|(x, y)| x.try_add(*y)).collect()
}

/// Element-wise difference of two equal-length vectors.
pub fn sub_vec(
    a: &[FieldElement],
    b: &[FieldElement],
) -> Result<Vec<FieldElement>, FieldError> {
    if a.len() != b.len() {
        return Err(FieldError::DimensionError {
            expected: a.len(),
            got: b.len(),
        });
    }
    a.iter().zip(b).map(|(x, y)| x.try_sub(*y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(q: u32) -> FieldPrime {
        FieldPrime::new(q).unwrap()
    }

    fn v(f: FieldPrime, xs: &[u32]) -> Vec<FieldElement> {
        xs.iter().map(|&x| f.element(x).unwrap()).collect()
    }

    #[test]
    fn rejects_composites_and_large_moduli() {
        assert!(FieldPrime::new(0).is_err());
        assert!(FieldPrime::new(1).is_err());
        assert!(FieldPrime::new(4).is_err());
        assert!(FieldPrime::new(65_536).is_err());
        assert_eq!(FieldPrime::new(65_521).unwrap().q(), 65_521);
        assert_eq!(gf(257).q(), 257);
    }

    #[test]
    fn small_examples() {
        let f = gf(5);
        let a = f.element(3).unwrap();
        let b = f.element(4).unwrap();
        assert_eq!(arith(ArithOp::Add, a, Some(b)).unwrap().value(), 2);
        let two = f.element(2).unwrap();
        assert_eq!(arith(ArithOp::Inv, two, None).unwrap().value(), 3);
        assert_eq!(arith(ArithOp::Sub, two, Some(a)).unwrap().value(), 4);
        assert_eq!(arith(ArithOp::Neg, two, None).unwrap().value(), 3);
        assert_eq!(arith(ArithOp::Mul, a, Some(b)).unwrap().value(), 2);
    }

    #[test]
    fn inverse_by_brute_force_scan() {
        // oracle: for each a, find the unique b with a*b = 1 by scanning all products
        let f = gf(7);
        for a in 1..7u32 {
            let scanned = (1..7u32).find(|b| (a * b) % 7 == 1).unwrap();
            let ea = f.element(a).unwrap();
            assert_eq!(ea.inv().unwrap().value() as u32, scanned);
            assert_eq!((ea * ea.inv().unwrap()).value(), 1);
        }
    }

    #[test]
    fn errors() {
        let f = gf(5);
        assert_eq!(f.zero().inv(), Err(FieldError::DivisionByZero));
        let g = gf(7);
        assert_eq!(
            f.one().try_add(g.one()),
            Err(FieldError::FieldMismatch(5, 7))
        );
        assert!(matches!(
            gf(257).element(300),
            Err(FieldError::OutOfRange { value: 300, q: 257 })
        ));
    }

    #[test]
    fn dot_examples() {
        let f = gf(7);
        let rows = vec![v(f, &[5, 2]), v(f, &[3, 3])];
        assert_eq!(dot(&v(f, &[1, 0]), &rows).unwrap(), v(f, &[5, 2]));
        assert_eq!(dot(&v(f, &[0, 0]), &rows).unwrap(), v(f, &[0, 0]));
        let rows = vec![v(f, &[1, 4]), v(f, &[5, 6])];
        // 2*1 + 3*5 = 17 = 3, 2*4 + 3*6 = 26 = 5 (mod 7)
        assert_eq!(dot(&v(f, &[2, 3]), &rows).unwrap(), v(f, &[3, 5]));
        assert!(matches!(
            dot(&v(f, &[1]), &rows),
            Err(FieldError::DimensionError { .. })
        ));
    }

    #[test]
    fn exhaustive_ring_laws_small_q() {
        for q in [2u32, 3, 5, 7] {
            let f = gf(q);
            for a in f.elements() {
                for b in f.elements() {
                    assert_eq!(a + b, b + a);
                    assert_eq!(a * b, b * a);
                    assert_eq!((a + b) - b, a);
                    for c in f.elements() {
                        assert_eq!(a * (b + c), a * b + a * c);
                    }
                }
            }
            let mut seen: Vec<u16> = f.elements().skip(1).map(|a| a.inv().unwrap().value()).collect();
            seen.sort_unstable();
            let expected: Vec<u16> = (1..q as u16).collect();
            assert_eq!(seen, expected, "inv must permute the nonzero elements of GF({q})");
        }
    }
}
