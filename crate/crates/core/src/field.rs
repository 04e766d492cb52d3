//! Arithmetic in a prime field `F_q` and fixed-length vectors over it.

use alloc::vec::Vec;
use core::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::randomness::Randomness;

/// Trial-division primality test.
pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let n = n as u64;
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest prime strictly greater than `bound`.
pub fn smallest_prime_above(bound: u32) -> u32 {
    let mut c = bound.checked_add(1).expect("prime bound overflow");
    while !is_prime(c) {
        c = c.checked_add(1).expect("prime bound overflow");
    }
    c
}

/// The prime field `F_q`. Elements are canonical residues in `[0, q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PrimeField {
    q: u32,
}

impl PrimeField {
    pub fn new(q: u32) -> Result<Self> {
        if is_prime(q) {
            Ok(Self { q })
        } else {
            Err(Error::NotPrime(q))
        }
    }

    /// The field of the smallest prime strictly greater than `bound`.
    pub fn smallest_above(bound: u32) -> Self {
        Self {
            q: smallest_prime_above(bound),
        }
    }

    pub fn modulus(&self) -> u32 {
        self.q
    }

    pub fn contains(&self, a: u32) -> bool {
        a < self.q
    }

    pub fn reduce(&self, v: i64) -> u32 {
        v.rem_euclid(self.q as i64) as u32
    }

    pub fn add(&self, a: u32, b: u32) -> u32 {
        ((a as u64 + b as u64) % self.q as u64) as u32
    }

    pub fn sub(&self, a: u32, b: u32) -> u32 {
        ((a as u64 + self.q as u64 - b as u64 % self.q as u64) % self.q as u64) as u32
    }

    pub fn neg(&self, a: u32) -> u32 {
        self.sub(0, a)
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.q as u64) as u32
    }

    /// Uniform element of the field.
    pub fn sample<R: Randomness + ?Sized>(&self, rng: &mut R) -> u32 {
        rng.below(self.q)
    }

    /// Uniform element of `F_q \ {0}`.
    pub fn sample_nonzero<R: Randomness + ?Sized>(&self, rng: &mut R) -> u32 {
        1 + rng.below(self.q - 1)
    }

    fn check(&self, other: &PrimeField) -> Result<()> {
        if self.q == other.q {
            Ok(())
        } else {
            Err(Error::FieldMismatch {
                left: self.q,
                right: other.q,
            })
        }
    }
}

/// A vector over `F_q` whose entries are always reduced.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FieldVector {
    field: PrimeField,
    entries: Vec<u32>,
}

impl FieldVector {
    /// Fails if some entry is not a canonical residue.
    pub fn new(field: PrimeField, entries: Vec<u32>) -> Result<Self> {
        if let Some(&bad) = entries.iter().find(|&&e| !field.contains(e)) {
            return Err(Error::InvalidParameters(alloc::format!(
                "{bad} is not a residue mod {}",
                field.q
            )));
        }
        Ok(Self { field, entries })
    }

    /// Reduces arbitrary integers into the field.
    pub fn from_values(field: PrimeField, values: &[i64]) -> Self {
        Self {
            field,
            entries: values.iter().map(|&v| field.reduce(v)).collect(),
        }
    }

    pub fn from_bits(field: PrimeField, bits: &[bool]) -> Self {
        Self {
            field,
            entries: bits.iter().map(|&b| b as u32).collect(),
        }
    }

    pub fn zeros(field: PrimeField, len: usize) -> Self {
        Self {
            field,
            entries: alloc::vec![0; len],
        }
    }

    /// The standard basis vector `e_index`.
    pub fn unit(field: PrimeField, len: usize, index: usize) -> Self {
        let mut v = Self::zeros(field, len);
        v.entries[index] = 1 % field.q;
        v
    }

    pub fn sample<R: Randomness + ?Sized>(field: PrimeField, len: usize, rng: &mut R) -> Self {
        Self {
            field,
            entries: (0..len).map(|_| field.sample(rng)).collect(),
        }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<u32> {
        self.entries
    }

    pub fn get(&self, i: usize) -> u32 {
        self.entries[i]
    }

    pub fn slice(&self, range: Range<usize>) -> Self {
        Self {
            field: self.field,
            entries: self.entries[range].to_vec(),
        }
    }

    fn zip(&self, other: &Self, op: impl Fn(u32, u32) -> u32) -> Result<Self> {
        self.field.check(&other.field)?;
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(Self {
            field: self.field,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let f = self.field;
        self.zip(other, |a, b| f.add(a, b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let f = self.field;
        self.zip(other, |a, b| f.sub(a, b))
    }

    /// Entry-wise product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        let f = self.field;
        self.zip(other, |a, b| f.mul(a, b))
    }

    pub fn dot(&self, other: &Self) -> Result<u32> {
        let prod = self.hadamard(other)?;
        Ok(prod.entries.iter().fold(0, |acc, &x| self.field.add(acc, x)))
    }

    pub fn scale(&self, c: u32) -> Self {
        let f = self.field;
        Self {
            field: f,
            entries: self.entries.iter().map(|&a| f.mul(a, c)).collect(),
        }
    }

    /// Adds `c` to entry `i` in place.
    pub fn add_at(&mut self, i: usize, c: u32) {
        self.entries[i] = self.field.add(self.entries[i], c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_is_prime(n: u32) -> bool {
        n >= 2 && (2..n).all(|d| n % d != 0)
    }

    #[test]
    fn primality_matches_naive_check() {
        for n in 0..2000 {
            assert_eq!(is_prime(n), naive_is_prime(n), "n = {n}");
        }
    }

    #[test]
    fn smallest_prime_above_small_bounds() {
        let expected = [(0, 2), (1, 2), (2, 3), (3, 5), (4, 5), (5, 7), (8, 11), (13, 17), (23, 29)];
        for (b, p) in expected {
            assert_eq!(smallest_prime_above(b), p);
        }
    }

    #[test]
    fn rejects_composite_modulus() {
        assert_eq!(PrimeField::new(9), Err(Error::NotPrime(9)));
        assert!(PrimeField::new(7).is_ok());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let f = PrimeField::new(5).unwrap();
        let a = FieldVector::zeros(f, 3);
        let b = FieldVector::zeros(f, 4);
        assert!(matches!(a.add(&b), Err(Error::DimensionMismatch { left: 3, right: 4 })));
        assert!(a.dot(&b).is_err());
    }

    #[test]
    fn field_mismatch_is_an_error() {
        let a = FieldVector::zeros(PrimeField::new(5).unwrap(), 2);
        let b = FieldVector::zeros(PrimeField::new(7).unwrap(), 2);
        assert!(matches!(a.sub(&b), Err(Error::FieldMismatch { .. })));
    }

    #[test]
    fn reduce_handles_negatives() {
        let f = PrimeField::new(7).unwrap();
        assert_eq!(f.reduce(-1), 6);
        assert_eq!(f.reduce(-15), 6);
        assert_eq!(f.neg(3), 4);
        assert_eq!(f.sub(2, 5), 4);
    }
}
