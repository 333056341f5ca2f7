//! Arithmetic in the prime field F_p and protocol-grade sizing of p.
//!
//! A [`FieldElement`] is just a canonical representative in `[0, p)`; it does
//! not carry its modulus. Every operation goes through a [`Modulus`], which
//! owns `p` and the fixed encoding width derived from it.

use std::fmt;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::RngCore;
use thiserror::Error;

use crate::rng::SeededRng;

/// Miller-Rabin rounds used for every primality decision in the crate.
pub const PRIMALITY_ROUNDS: usize = 128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("invalid n = {0}: must be at least 2")]
    InvalidN(usize),
    #[error("modulus {0:#x} is not prime")]
    NotPrime(BigUint),
    #[error("value {value:#x} is not a canonical element mod {p:#x}")]
    NotCanonical { value: BigUint, p: BigUint },
}

/// Canonical representative of an element of F_p.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FieldElement(BigUint);

impl FieldElement {
    pub fn zero() -> Self {
        FieldElement(BigUint::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_value(self) -> BigUint {
        self.0
    }

    /// Small-integer view, when the representative fits.
    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:x}", self.0)
    }
}

/// A prime modulus together with its big-endian encoding width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Modulus {
    p: BigUint,
    bits: u64,
    byte_width: usize,
}

impl Modulus {
    /// Wraps `p` after a probabilistic primality check.
    pub fn new(p: BigUint) -> Result<Self, FieldError> {
        if !is_probable_prime(&p, PRIMALITY_ROUNDS) {
            return Err(FieldError::NotPrime(p));
        }
        let bits = p.bits();
        Ok(Modulus {
            p,
            bits,
            byte_width: bits.div_ceil(8) as usize,
        })
    }

    pub fn new_u64(p: u64) -> Result<Self, FieldError> {
        Self::new(BigUint::from(p))
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// `ceil(bitlen(p) / 8)`.
    pub fn byte_width(&self) -> usize {
        self.byte_width
    }

    /// Checked constructor: rejects representatives `>= p`.
    pub fn element(&self, value: BigUint) -> Result<FieldElement, FieldError> {
        if value >= self.p {
            return Err(FieldError::NotCanonical {
                value,
                p: self.p.clone(),
            });
        }
        Ok(FieldElement(value))
    }

    /// Reduces an arbitrary integer into the field.
    pub fn reduce(&self, value: BigUint) -> FieldElement {
        if value < self.p {
            FieldElement(value)
        } else {
            FieldElement(value % &self.p)
        }
    }

    pub fn from_u64(&self, value: u64) -> FieldElement {
        self.reduce(BigUint::from(value))
    }

    pub fn one(&self) -> FieldElement {
        self.from_u64(1)
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let sum = &a.0 + &b.0;
        if sum >= self.p {
            FieldElement(sum - &self.p)
        } else {
            FieldElement(sum)
        }
    }

    pub fn neg(&self, a: &FieldElement) -> FieldElement {
        if a.0.is_zero() {
            FieldElement::zero()
        } else {
            FieldElement(&self.p - &a.0)
        }
    }

    /// `a - b`, computed as `a + (-b)`.
    pub fn sub(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement((&a.0 * &b.0) % &self.p)
    }

    /// Multiplication by a small integer scalar (permutation values, list offsets).
    pub fn mul_small(&self, a: &FieldElement, k: u64) -> FieldElement {
        FieldElement((&a.0 * BigUint::from(k)) % &self.p)
    }

    pub fn inv(&self, a: &FieldElement) -> Result<FieldElement, FieldError> {
        if a.0.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        // Fermat: a^(p-2) = a^-1 for prime p.
        let exp = &self.p - BigUint::from(2u8);
        Ok(FieldElement(a.0.modpow(&exp, &self.p)))
    }

    /// Uniform draw from `{0, ..., p-1}`.
    ///
    /// Each attempt reads `byte_width` bytes, masks off bits above `bitlen(p)`
    /// and rejects values `>= p`, so the expected number of attempts is below 2.
    pub fn sample(&self, rng: &mut SeededRng) -> FieldElement {
        let mut buf = vec![0u8; self.byte_width];
        let excess = (self.byte_width as u64 * 8 - self.bits) as u32;
        let mask = 0xffu8 >> excess;
        loop {
            rng.fill_bytes(&mut buf);
            buf[0] &= mask;
            let candidate = BigUint::from_bytes_be(&buf);
            if candidate < self.p {
                return FieldElement(candidate);
            }
        }
    }

    /// Uniform draw from F_p \ {0}.
    pub fn sample_nonzero(&self, rng: &mut SeededRng) -> FieldElement {
        loop {
            let x = self.sample(rng);
            if !x.is_zero() {
                return x;
            }
        }
    }
}

/// `ceil(sqrt(n * log2 n))`, the bit size targeted for p.
pub fn modulus_bits(n: usize) -> Result<u32, FieldError> {
    if n < 2 {
        return Err(FieldError::InvalidN(n));
    }
    let nf = n as f64;
    Ok((nf * nf.log2()).sqrt().ceil() as u32)
}

/// Least prime `>= 2^b` with `b = ceil(sqrt(n * log2 n))`.
pub fn derive_modulus(n: usize) -> Result<Modulus, FieldError> {
    let b = modulus_bits(n)?;
    let p = next_prime(&(BigUint::one() << b));
    Modulus::new(p)
}

/// Least probable prime `>= from`.
pub fn next_prime(from: &BigUint) -> BigUint {
    let two = BigUint::from(2u8);
    if *from <= two {
        return two;
    }
    let mut candidate = from.clone();
    if candidate.is_even() {
        candidate += 1u8;
    }
    while !is_probable_prime(&candidate, PRIMALITY_ROUNDS) {
        candidate += 2u8;
    }
    candidate
}

const SMALL_PRIMES: [u32; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

/// Small-prime sieve followed by `rounds` Miller-Rabin rounds.
///
/// Witnesses are drawn from a stream keyed by the candidate itself, so the
/// verdict for a given input is reproducible.
pub fn is_probable_prime(n: &BigUint, rounds: usize) -> bool {
    if *n < BigUint::from(2u8) {
        return false;
    }
    for &sp in SMALL_PRIMES.iter() {
        let sp = BigUint::from(sp);
        if *n == sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }
    // No factor <= 251, so anything below 251^2 is prime.
    if *n < BigUint::from(251u32 * 251) {
        return true;
    }

    let one = BigUint::one();
    let n_minus_one = n - &one;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    let two = BigUint::from(2u8);
    let mut rng = SeededRng::new(&n.to_bytes_be(), "miller-rabin");

    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(p: u64) -> Modulus {
        Modulus::new_u64(p).unwrap()
    }

    fn fe(m: &Modulus, v: u64) -> FieldElement {
        m.element(BigUint::from(v)).unwrap()
    }

    #[test]
    fn add_examples() {
        let m7 = m(7);
        assert_eq!(m7.add(&fe(&m7, 3), &fe(&m7, 5)), fe(&m7, 1));
        assert_eq!(m7.add(&fe(&m7, 0), &fe(&m7, 4)), fe(&m7, 4));
        assert_eq!(m7.add(&fe(&m7, 6), &fe(&m7, 1)), fe(&m7, 0));
    }

    #[test]
    fn mul_examples() {
        let m7 = m(7);
        assert_eq!(m7.mul(&fe(&m7, 3), &fe(&m7, 5)), fe(&m7, 1));
        assert_eq!(m7.mul(&fe(&m7, 1), &fe(&m7, 6)), fe(&m7, 6));
        assert_eq!(m7.mul(&fe(&m7, 0), &fe(&m7, 6)), fe(&m7, 0));
    }

    #[test]
    fn neg_examples() {
        let m7 = m(7);
        let m11 = m(11);
        assert_eq!(m7.neg(&fe(&m7, 3)), fe(&m7, 4));
        assert_eq!(m7.neg(&fe(&m7, 0)), fe(&m7, 0));
        assert_eq!(m11.neg(&fe(&m11, 1)), fe(&m11, 10));
    }

    #[test]
    fn inv_examples() {
        let m7 = m(7);
        let m11 = m(11);
        assert_eq!(m7.inv(&fe(&m7, 3)).unwrap(), fe(&m7, 5));
        assert_eq!(m7.inv(&fe(&m7, 1)).unwrap(), fe(&m7, 1));
        assert_eq!(m11.inv(&fe(&m11, 2)).unwrap(), fe(&m11, 6));
        assert_eq!(m7.inv(&fe(&m7, 0)), Err(FieldError::ZeroInverse));
    }

    #[test]
    fn element_rejects_non_canonical() {
        let m7 = m(7);
        assert!(matches!(
            m7.element(BigUint::from(7u8)),
            Err(FieldError::NotCanonical { .. })
        ));
    }

    #[test]
    fn derive_modulus_rejects_small_n() {
        assert_eq!(derive_modulus(1), Err(FieldError::InvalidN(1)));
        assert_eq!(derive_modulus(0), Err(FieldError::InvalidN(0)));
    }

    #[test]
    fn byte_width_tracks_bitlen() {
        assert_eq!(m(5).byte_width(), 1);
        assert_eq!(m(251).byte_width(), 1);
        assert_eq!(m(257).byte_width(), 2);
        assert_eq!(m(65537).byte_width(), 3);
    }

    #[test]
    fn non_prime_modulus_rejected() {
        assert!(matches!(Modulus::new_u64(91), Err(FieldError::NotPrime(_))));
        assert!(matches!(Modulus::new_u64(1), Err(FieldError::NotPrime(_))));
        // Carmichael number
        assert!(Modulus::new_u64(561).is_err());
    }

    #[test]
    fn primality_on_larger_values() {
        let mersenne_61 = BigUint::from((1u64 << 61) - 1);
        assert!(is_probable_prime(&mersenne_61, PRIMALITY_ROUNDS));
        let composite = BigUint::from(1_000_003u64) * BigUint::from(1_000_033u64);
        assert!(!is_probable_prime(&composite, PRIMALITY_ROUNDS));
    }

    #[test]
    fn sample_p2_in_range() {
        let m2 = m(2);
        let mut rng = SeededRng::new(b"p2", "test");
        for _ in 0..1000 {
            assert!(m2.sample(&mut rng).value() < m2.p());
        }
    }

    #[test]
    fn sample_is_reproducible() {
        let m257 = m(257);
        let a = m257.sample(&mut SeededRng::new(b"s0", "test"));
        let b = m257.sample(&mut SeededRng::new(b"s0", "test"));
        assert_eq!(a, b);
    }
}
