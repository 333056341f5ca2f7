use std::collections::HashSet;

use kap::field::{derive_modulus, is_probable_prime, modulus_bits, Modulus, PRIMALITY_ROUNDS};
use kap::owf::{h_eval, OwfId};
use kap::params::{gen_public_params, PartySecret};
use kap::SeededRng;
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::Rng;

/// Trial division; independent of the Miller-Rabin path.
fn is_prime_naive(x: u64) -> bool {
    if x < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= x {
        if x.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn u(x: &kap::FieldElement) -> u64 {
    x.to_u64().unwrap()
}

#[test]
fn derive_modulus_frozen_values() {
    // least prime >= 2^ceil(sqrt(n log2 n)), computed by trial division offline
    let frozen = [
        (2, 5),
        (3, 11),
        (4, 11),
        (5, 17),
        (8, 37),
        (10, 67),
        (12, 131),
        (16, 257),
        (20, 1031),
        (24, 2053),
        (32, 8209),
        (64, 1_048_583),
        (100, 67_108_879),
        (128, 1_073_741_827),
    ];
    for (n, p) in frozen {
        assert_eq!(
            derive_modulus(n).unwrap().p(),
            &BigUint::from(p as u64),
            "n = {n}"
        );
    }
}

#[test]
fn derive_modulus_monotone_and_prime() {
    let mut prev = BigUint::from(0u8);
    for n in 2..=300 {
        let m = derive_modulus(n).unwrap();
        let p = m.p().clone();
        assert!(p >= prev, "n = {n}");
        let b = modulus_bits(n).unwrap();
        assert!(p >= BigUint::from(1u8) << b);
        if let Some(small) = p.to_u64_digits().first().filter(|_| p.bits() <= 40) {
            assert!(is_prime_naive(*small), "n = {n}, p = {p}");
            // nothing prime between 2^b and p
            for q in (1u64 << b)..*small {
                assert!(!is_prime_naive(q));
            }
        }
        prev = p;
    }
}

#[test]
fn primality_agrees_with_trial_division() {
    for x in 0u64..20_000 {
        assert_eq!(
            is_probable_prime(&BigUint::from(x), PRIMALITY_ROUNDS),
            is_prime_naive(x),
            "x = {x}"
        );
    }
}

#[test]
fn inverse_exhaustive_small_primes() {
    for p in (2u64..=257).filter(|&p| is_prime_naive(p)) {
        let m = Modulus::new_u64(p).unwrap();
        for a in 1..p {
            let x = m.from_u64(a);
            let inv = m.inv(&x).unwrap();
            assert_eq!(u(&m.mul(&x, &inv)), 1, "p = {p}, a = {a}");
        }
    }
}

#[test]
fn neg_is_additive_inverse() {
    let m = Modulus::new_u64(257).unwrap();
    for a in 0..257 {
        let x = m.from_u64(a);
        assert!(m.add(&x, &m.neg(&x)).is_zero());
    }
}

#[test]
fn field_axioms_random() {
    let moduli = [
        Modulus::new_u64(7).unwrap(),
        Modulus::new_u64(257).unwrap(),
        derive_modulus(64).unwrap(),
    ];
    let mut rng = SeededRng::new(b"axioms", "test");
    for m in &moduli {
        let p = m.p().to_u64_digits()[0];
        for _ in 0..10_000 {
            let (a, b, c) = (m.sample(&mut rng), m.sample(&mut rng), m.sample(&mut rng));
            assert_eq!(m.add(&m.add(&a, &b), &c), m.add(&a, &m.add(&b, &c)));
            assert_eq!(
                m.mul(&a, &m.add(&b, &c)),
                m.add(&m.mul(&a, &b), &m.mul(&a, &c))
            );
            assert_eq!(m.mul(&a, &b), m.mul(&b, &a));
            // against plain u128 arithmetic
            let (x, y) = (u(&a) as u128, u(&b) as u128);
            assert_eq!(u(&m.add(&a, &b)) as u128, (x + y) % p as u128);
            assert_eq!(u(&m.mul(&a, &b)) as u128, (x * y) % p as u128);
            assert_eq!(u(&m.sub(&a, &b)) as u128, (x + p as u128 - y) % p as u128);
        }
    }
}

#[test]
fn sample_never_out_of_range() {
    let mut rng = SeededRng::new(b"range", "test");
    for p in [2u64, 3, 5, 251, 257, 65_521, 1_048_583] {
        let m = Modulus::new_u64(p).unwrap();
        for _ in 0..5_000 {
            assert!(u(&m.sample(&mut rng)) < p);
        }
    }
}

#[test]
fn sample_uniform_p5() {
    let m = Modulus::new_u64(5).unwrap();
    let mut rng = SeededRng::new(b"chi", "test");
    let mut counts = [0u32; 5];
    let draws = 10_000;
    for _ in 0..draws {
        counts[u(&m.sample(&mut rng)) as usize] += 1;
    }
    let sigma = (draws as f64 * 0.2 * 0.8).sqrt();
    for c in counts {
        assert!((c as f64 - 2000.0).abs() < 5.0 * sigma, "{counts:?}");
    }
}

#[test]
fn owf_collision_free_p_below_2_16() {
    let m = Modulus::new_u64(65_521).unwrap();
    let mut seen = HashSet::with_capacity(65_521);
    for v in 0..65_521 {
        assert!(
            seen.insert(h_eval(&m.from_u64(v), &m, OwfId::Sha256V1)),
            "v = {v}"
        );
    }
}

#[test]
fn owf_collision_free_random_large_p() {
    let m = derive_modulus(4096).unwrap();
    assert!(m.bits() > 64);
    let mut rng = SeededRng::new(b"owf-large", "test");
    let mut inputs = HashSet::new();
    let mut digests = HashSet::new();
    while inputs.len() < 1_000_000 {
        let x = m.sample(&mut rng);
        if inputs.insert(x.clone()) {
            assert!(digests.insert(h_eval(&x, &m, OwfId::Sha256V1)));
        }
    }
}

#[test]
fn digest_sort_is_reproducible() {
    let m = Modulus::new_u64(257).unwrap();
    let mut rng = SeededRng::new(b"sort", "test");
    let list: Vec<_> = (0..500)
        .map(|_| h_eval(&m.sample(&mut rng), &m, OwfId::Sha256V1))
        .collect();
    let mut a = list.clone();
    let mut b = list.clone();
    a.sort();
    b.reverse();
    b.sort();
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[0].as_bytes() <= w[1].as_bytes()));
}

#[test]
fn generated_secrets_satisfy_invariants() {
    let pp = gen_public_params(12, b"inv").unwrap();
    let mut rng = SeededRng::new(b"inv", "test");
    for _ in 0..2_000 {
        let seed: [u8; 8] = rng.gen();
        let sec = kap::params::alice_secret_from_seed(&pp, &seed);
        PartySecret::new(
            &pp,
            sec.scalar().clone(),
            sec.bits().to_vec(),
            sec.permutation().clone(),
        )
        .unwrap();
        let mut img = sec.permutation().image().to_vec();
        img.sort_unstable();
        assert_eq!(img, (1..=12).collect::<Vec<_>>());
    }
}

proptest! {
    #[test]
    fn reduce_matches_u128(a in any::<u64>(), b in any::<u64>()) {
        let m = derive_modulus(64).unwrap();
        let p = 1_048_583u128;
        let x = m.reduce(BigUint::from(a));
        let y = m.reduce(BigUint::from(b));
        prop_assert_eq!(u(&x) as u128, a as u128 % p);
        prop_assert_eq!(u(&m.mul(&x, &y)) as u128, (a as u128 % p) * (b as u128 % p) % p);
    }
}
