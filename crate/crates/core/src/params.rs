//! Public parameters and each party's private data.

use rand::Rng;
use thiserror::Error;

use crate::field::{derive_modulus, FieldElement, FieldError, Modulus};
use crate::owf::OwfId;
use crate::rng::{SeededRng, RNG_TAG, ROLE_ALICE, ROLE_BOB, ROLE_MATRIX};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamsError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("seed must not be empty")]
    EmptySeed,
    #[error("matrix must be {n}x{n}, found {rows} rows / row {row} of length {len}")]
    Dimension {
        n: usize,
        rows: usize,
        row: usize,
        len: usize,
    },
    #[error("not a permutation of 1..={n}: {image:?}")]
    InvalidPermutation { n: usize, image: Vec<usize> },
    #[error("expected {expected} secret bits, got {actual}")]
    BitCount { expected: usize, actual: usize },
    #[error("secret scalar must be nonzero")]
    ZeroScalar,
}

/// A permutation of `{1, ..., n}`, stored as its image `(pi(1), ..., pi(n))`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self, ParamsError> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &v in &image {
            if v == 0 || v > n || seen[v - 1] {
                return Err(ParamsError::InvalidPermutation { n, image });
            }
            seen[v - 1] = true;
        }
        Ok(Permutation(image))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((1..=n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `pi(j)` for 1-based `j`.
    pub fn apply(&self, j: usize) -> usize {
        self.0[j - 1]
    }

    pub fn image(&self) -> &[usize] {
        &self.0
    }
}

/// Uniform permutation of `{1..n}` by Fisher-Yates.
pub fn gen_permutation(n: usize, rng: &mut SeededRng) -> Permutation {
    let mut image: Vec<usize> = (1..=n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        image.swap(i, j);
    }
    Permutation(image)
}

/// The agreed public data: `n`, the prime modulus, the matrix `C` and `h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicParams {
    n: usize,
    modulus: Modulus,
    /// Row-major, `c[i][j]` with 0-based indices.
    c: Vec<Vec<FieldElement>>,
    owf: OwfId,
    seed: Vec<u8>,
    rng: String,
}

impl PublicParams {
    /// Assembles externally supplied parameters, checking dimensions. Entries
    /// are already canonical by construction of [`FieldElement`] via `modulus`.
    pub fn new(
        modulus: Modulus,
        c: Vec<Vec<FieldElement>>,
        owf: OwfId,
        seed: Vec<u8>,
        rng: String,
    ) -> Result<Self, ParamsError> {
        let n = c.len();
        if n < 2 {
            return Err(FieldError::InvalidN(n).into());
        }
        for (row, entries) in c.iter().enumerate() {
            if entries.len() != n {
                return Err(ParamsError::Dimension {
                    n,
                    rows: n,
                    row,
                    len: entries.len(),
                });
            }
            if let Some(bad) = entries.iter().find(|e| e.value() >= modulus.p()) {
                return Err(FieldError::NotCanonical {
                    value: bad.value().clone(),
                    p: modulus.p().clone(),
                }
                .into());
            }
        }
        Ok(PublicParams {
            n,
            modulus,
            c,
            owf,
            seed,
            rng,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    /// `c_{i,j}` for 1-based indices.
    pub fn c(&self, i: usize, j: usize) -> &FieldElement {
        &self.c[i - 1][j - 1]
    }

    pub fn matrix(&self) -> &[Vec<FieldElement>] {
        &self.c
    }

    pub fn owf(&self) -> OwfId {
        self.owf
    }

    pub fn seed(&self) -> &[u8] {
        &self.seed
    }

    pub fn rng_tag(&self) -> &str {
        &self.rng
    }

    /// Upper end of the match range, `K = n(n+1)/2`.
    pub fn offset_bound(&self) -> usize {
        offset_bound(self.n)
    }
}

/// `K = n(n+1)/2`, the largest possible value of `sum_j s_j * sigma(j)`.
pub fn offset_bound(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Derives `p` from `n` and fills `C` row-major from the seed's matrix stream.
pub fn gen_public_params(n: usize, seed: &[u8]) -> Result<PublicParams, ParamsError> {
    if seed.is_empty() {
        return Err(ParamsError::EmptySeed);
    }
    let modulus = derive_modulus(n)?;
    let mut rng = SeededRng::new(seed, ROLE_MATRIX);
    let c = (0..n)
        .map(|_| (0..n).map(|_| modulus.sample(&mut rng)).collect())
        .collect();
    Ok(PublicParams {
        n,
        modulus,
        c,
        owf: OwfId::default(),
        seed: seed.to_vec(),
        rng: RNG_TAG.to_string(),
    })
}

/// One party's secret: a nonzero scalar, `n` bits and a permutation.
///
/// For Alice these are `(alpha, t, sigma)`, for Bob `(beta, s, rho)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartySecret {
    scalar: FieldElement,
    bits: Vec<bool>,
    perm: Permutation,
}

pub type AliceSecret = PartySecret;
pub type BobSecret = PartySecret;

impl PartySecret {
    pub fn new(
        pp: &PublicParams,
        scalar: FieldElement,
        bits: Vec<bool>,
        perm: Permutation,
    ) -> Result<Self, ParamsError> {
        let n = pp.n();
        if scalar.is_zero() {
            return Err(ParamsError::ZeroScalar);
        }
        if scalar.value() >= pp.modulus().p() {
            return Err(FieldError::NotCanonical {
                value: scalar.into_value(),
                p: pp.modulus().p().clone(),
            }
            .into());
        }
        if bits.len() != n {
            return Err(ParamsError::BitCount {
                expected: n,
                actual: bits.len(),
            });
        }
        if perm.len() != n {
            return Err(ParamsError::InvalidPermutation { n, image: perm.0 });
        }
        Ok(PartySecret { scalar, bits, perm })
    }

    pub fn scalar(&self) -> &FieldElement {
        &self.scalar
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    fn generate(pp: &PublicParams, rng: &mut SeededRng) -> Self {
        let scalar = pp.modulus().sample_nonzero(rng);
        let bits = (0..pp.n()).map(|_| rng.gen::<bool>()).collect();
        let perm = gen_permutation(pp.n(), rng);
        PartySecret { scalar, bits, perm }
    }
}

pub fn gen_alice_secret(pp: &PublicParams, rng: &mut SeededRng) -> AliceSecret {
    PartySecret::generate(pp, rng)
}

pub fn gen_bob_secret(pp: &PublicParams, rng: &mut SeededRng) -> BobSecret {
    PartySecret::generate(pp, rng)
}

/// Alice's secret drawn from the `alice` stream of `seed`.
pub fn alice_secret_from_seed(pp: &PublicParams, seed: &[u8]) -> AliceSecret {
    gen_alice_secret(pp, &mut SeededRng::new(seed, ROLE_ALICE))
}

/// Bob's secret drawn from the `bob` stream of `seed`.
pub fn bob_secret_from_seed(pp: &PublicParams, seed: &[u8]) -> BobSecret {
    gen_bob_secret(pp, &mut SeededRng::new(seed, ROLE_BOB))
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;

    #[test]
    fn gen_params_deterministic() {
        let a = gen_public_params(4, &[0x01]).unwrap();
        let b = gen_public_params(4, &[0x01]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gen_params_n16_shape() {
        let pp = gen_public_params(16, &[0x02]).unwrap();
        assert_eq!(pp.modulus().p(), &257u32.into());
        assert_eq!(pp.matrix().len(), 16);
        let entries: Vec<_> = pp.matrix().iter().flatten().collect();
        assert_eq!(entries.len(), 256);
        assert!(entries.iter().all(|e| e.to_u64().unwrap() < 257));
    }

    #[test]
    fn gen_params_n2_shape() {
        let pp = gen_public_params(2, b"any").unwrap();
        assert_eq!(pp.modulus().p(), &5u32.into());
        assert!(pp
            .matrix()
            .iter()
            .flatten()
            .all(|e| e.to_u64().unwrap() < 5));
    }

    #[test]
    fn gen_params_errors() {
        assert_eq!(
            gen_public_params(1, &[1]),
            Err(ParamsError::Field(FieldError::InvalidN(1)))
        );
        assert_eq!(gen_public_params(4, &[]), Err(ParamsError::EmptySeed));
    }

    #[test]
    fn distinct_seeds_distinct_matrices() {
        let mut rng = SeededRng::new(b"pairs", "test");
        for _ in 0..100 {
            let (s1, s2): ([u8; 16], [u8; 16]) = (rng.gen(), rng.gen());
            assert_ne!(
                gen_public_params(16, &s1).unwrap().matrix(),
                gen_public_params(16, &s2).unwrap().matrix()
            );
        }
    }

    #[test]
    fn permutation_n1() {
        let mut rng = SeededRng::new(b"p", "test");
        assert_eq!(gen_permutation(1, &mut rng).image(), &[1]);
    }

    #[test]
    fn permutation_invariant_and_uniformity() {
        let mut rng = SeededRng::new(b"perm-freq", "test");
        let mut counts: HashMap<Vec<usize>, u32> = HashMap::new();
        let trials = 60_000;
        for _ in 0..trials {
            let p = gen_permutation(3, &mut rng);
            let mut sorted = p.image().to_vec();
            sorted.sort_unstable();
            assert_eq!(sorted, vec![1, 2, 3]);
            *counts.entry(p.0).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        // binomial(60000, 1/6): mean 10^4, sigma ~ 91.3
        let sigma = (trials as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for &c in counts.values() {
            assert!((c as f64 - 10_000.0).abs() < 5.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::new(vec![2, 1, 3]).is_ok());
        assert!(Permutation::new(vec![1, 1, 3]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![1, 3]).is_err());
    }

    fn check_secret_generation(gen: fn(&PublicParams, &mut SeededRng) -> PartySecret) {
        let pp = gen_public_params(32, b"secrets").unwrap();
        let mut rng = SeededRng::new(b"secret-stream", "test");
        let mut weight_sum = 0usize;
        let trials = 10_000;
        for _ in 0..trials {
            let sec = gen(&pp, &mut rng);
            assert!(!sec.scalar().is_zero());
            assert_eq!(sec.bits().len(), 32);
            Permutation::new(sec.permutation().image().to_vec()).unwrap();
            weight_sum += sec.bits().iter().filter(|&&b| b).count();
        }
        // mean of 10^4 Binomial(32, 1/2) weights: sd of mean = sqrt(8)/100
        let mean = weight_sum as f64 / trials as f64;
        let sd_mean = (32.0f64 * 0.25).sqrt() / (trials as f64).sqrt();
        assert!((mean - 16.0).abs() < 5.0 * sd_mean, "mean weight {mean}");

        let again = |seed: &[u8]| gen(&pp, &mut SeededRng::new(seed, "x"));
        assert_eq!(again(b"fixed"), again(b"fixed"));
    }

    #[test]
    fn alice_secret_generation() {
        check_secret_generation(gen_alice_secret);
    }

    #[test]
    fn bob_secret_generation() {
        check_secret_generation(gen_bob_secret);
    }

    #[test]
    fn scalar_never_zero_at_tiny_p() {
        // p = 5: zero would show up ~20% of the time without resampling
        let pp = gen_public_params(2, b"tiny").unwrap();
        let mut rng = SeededRng::new(b"tiny", "test");
        for _ in 0..10_000 {
            assert!(!gen_alice_secret(&pp, &mut rng).scalar().is_zero());
        }
    }

    #[test]
    fn explicit_secret_validation() {
        let pp = gen_public_params(2, b"v").unwrap();
        let m = pp.modulus();
        let id = Permutation::identity(2);
        assert_eq!(
            PartySecret::new(&pp, m.from_u64(0), vec![true, false], id.clone()),
            Err(ParamsError::ZeroScalar)
        );
        assert!(matches!(
            PartySecret::new(&pp, m.from_u64(1), vec![true], id.clone()),
            Err(ParamsError::BitCount { .. })
        ));
        assert!(PartySecret::new(&pp, m.from_u64(1), vec![true, true], id).is_ok());
    }
}
