//! Passive cryptanalysis at desk scale.
//!
//! An eavesdropper sees `C`, `mu`, `nu`, `tau_A`, `tau_B`, Alice's digest list
//! and `k0`, and wants `g`. Alice's bits satisfy the single knapsack relation
//! `sum_i x_i*nu_i = tau_B`; guessing the first `r` values of `sigma` adds
//! `r-1` more relations in which `alpha` cancels:
//!
//! ```text
//! sum_i x_i*(s'(j)*c_{i,1} - s'(1)*c_{i,j}) = s'(j)*mu_1 - s'(1)*mu_j,   j = 2..r
//! ```
//!
//! The stacked system is solved over F_p for binary solutions by elimination
//! plus exhaustive enumeration of the free unknowns. A candidate `t` then
//! yields `alpha` and `sigma` from `w_j = mu_j - sum_i t_i*c_{i,j} = sigma(j)*alpha`,
//! and the key follows as `tau_A - k0*alpha`.

use std::collections::HashMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::field::{FieldElement, FieldError, Modulus};
use crate::owf::{Digest, Owf};
use crate::params::{
    gen_alice_secret, gen_bob_secret, gen_public_params, AliceSecret, BobSecret, ParamsError,
    Permutation, PublicParams,
};
use crate::protocol::{AliceSession, BobSession, HandshakeError, ProtocolError, SharedKey};
use crate::rng::{SeededRng, ROLE_ALICE, ROLE_BOB};
use crate::wire::{Transcript, WireError};

/// Largest number of binary unknowns enumerated exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 24;

/// Largest `n` accepted by the solution-count experiment.
pub const EXPERIMENT_LIMIT: usize = 20;

pub type BitVector = Vec<bool>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AttackError {
    #[error("{unknowns} binary unknowns exceed the exhaustive budget of {limit}")]
    TooLarge { unknowns: usize, limit: usize },
    #[error("invalid guess: {0}")]
    InvalidGuess(String),
    #[error("no candidate scalar turns w into a permutation")]
    NoCandidate,
    #[error("w_{j} is zero")]
    ZeroW { j: usize },
    #[error("{what}: expected {expected} entries, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Handshake(#[from] HandshakeError),
    #[error(transparent)]
    Wire(#[from] WireError),
}

fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<(), AttackError> {
    if expected != actual {
        return Err(AttackError::LengthMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}

/// One linear equation `sum_i coeffs[i]*x_i = rhs` over F_p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub coeffs: Vec<FieldElement>,
    pub rhs: FieldElement,
}

impl Equation {
    pub fn is_satisfied_by(&self, x: &[bool], m: &Modulus) -> bool {
        let lhs = self
            .coeffs
            .iter()
            .zip(x)
            .filter(|(_, &b)| b)
            .fold(FieldElement::zero(), |acc, (c, _)| m.add(&acc, c));
        lhs == self.rhs
    }
}

/// Equations over F_p in `n` binary unknowns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSystem {
    n: usize,
    rows: Vec<Equation>,
}

impl LinearSystem {
    pub fn new(n: usize) -> Self {
        LinearSystem {
            n,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Equation) -> Result<(), AttackError> {
        check_len("equation coefficients", self.n, row.coeffs.len())?;
        self.rows.push(row);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Equation] {
        &self.rows
    }

    pub fn is_satisfied_by(&self, x: &[bool], m: &Modulus) -> bool {
        self.rows.iter().all(|row| row.is_satisfied_by(x, m))
    }
}

/// Guessed values `sigma'(j)` at chosen (1-based) positions `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuessSet {
    positions: Vec<usize>,
    values: Vec<usize>,
}

impl GuessSet {
    /// Guesses for positions `1..=r`.
    pub fn prefix(values: Vec<usize>) -> Self {
        GuessSet {
            positions: (1..=values.len()).collect(),
            values,
        }
    }

    pub fn at_positions(positions: Vec<usize>, values: Vec<usize>) -> Result<Self, AttackError> {
        check_len("guess positions", values.len(), positions.len())?;
        Ok(GuessSet { positions, values })
    }

    /// The correct guess: `sigma` restricted to positions `1..=r`.
    pub fn true_prefix(sigma: &Permutation, r: usize) -> Self {
        Self::prefix(sigma.image()[..r].to_vec())
    }

    pub fn r(&self) -> usize {
        self.values.len()
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    fn validate(&self, n: usize) -> Result<(), AttackError> {
        if self.r() < 2 {
            return Err(AttackError::InvalidGuess(format!(
                "need at least 2 guessed values, got {}",
                self.r()
            )));
        }
        for (name, list) in [("value", &self.values), ("position", &self.positions)] {
            let mut seen = vec![false; n + 1];
            for &v in list {
                if v == 0 || v > n {
                    return Err(AttackError::InvalidGuess(format!(
                        "{name} {v} outside 1..={n}"
                    )));
                }
                if seen[v] {
                    return Err(AttackError::InvalidGuess(format!("duplicate {name} {v}")));
                }
                seen[v] = true;
            }
        }
        Ok(())
    }
}

/// A uniformly random guess of length `r` that differs from `truth`.
pub fn random_wrong_guess(n: usize, truth: &GuessSet, rng: &mut SeededRng) -> GuessSet {
    let r = truth.r();
    let mut pool: Vec<usize> = (1..=n).collect();
    loop {
        pool.shuffle(rng);
        let values = pool[..r].to_vec();
        if values != truth.values {
            return GuessSet::at_positions(truth.positions.clone(), values)
                .expect("positions and values have equal length");
        }
    }
}

/// All `x` in `{0,1}^n` with `sum_i x_i*nu_i = tau_b`, in lexicographic order.
///
/// Splits the unknowns in two halves and matches the first half's sums
/// against a table of the second half's, so the work is `O(2^(n/2))` plus
/// the size of the output.
pub fn knapsack_solutions(
    nu: &[FieldElement],
    tau_b: &FieldElement,
    m: &Modulus,
) -> Result<Vec<BitVector>, AttackError> {
    let n = nu.len();
    if n > EXHAUSTIVE_LIMIT {
        return Err(AttackError::TooLarge {
            unknowns: n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let (high, low) = nu.split_at(n / 2);

    let mut by_sum: HashMap<FieldElement, Vec<u32>> = HashMap::new();
    for (mask, sum) in subset_sums(low, m).into_iter().enumerate() {
        by_sum.entry(sum).or_default().push(mask as u32);
    }

    let mut out = Vec::new();
    for (high_mask, sum) in subset_sums(high, m).into_iter().enumerate() {
        let needed = m.sub(tau_b, &sum);
        if let Some(low_masks) = by_sum.get(&needed) {
            for &low_mask in low_masks {
                let mut x = mask_to_bits(high_mask as u32, high.len());
                x.extend(mask_to_bits(low_mask, low.len()));
                out.push(x);
            }
        }
    }
    Ok(out)
}

/// `sums[mask]` for every mask, where the most significant bit of `mask`
/// selects `values[0]`; increasing masks are lexicographic bit vectors.
fn subset_sums(values: &[FieldElement], m: &Modulus) -> Vec<FieldElement> {
    let k = values.len();
    let mut sums = vec![FieldElement::zero(); 1 << k];
    for mask in 1usize..(1 << k) {
        let low_bit = mask.trailing_zeros() as usize;
        sums[mask] = m.add(&sums[mask & (mask - 1)], &values[k - 1 - low_bit]);
    }
    sums
}

fn mask_to_bits(mask: u32, width: usize) -> BitVector {
    (0..width)
        .map(|i| mask >> (width - 1 - i) & 1 == 1)
        .collect()
}

/// Builds the `r-1` alpha-free equations from a guess of `sigma`.
///
/// With base position `a = positions[0]` and each further position `b`,
/// the row is `sum_i x_i*(v_b*c_{i,a} - v_a*c_{i,b}) = v_b*mu_a - v_a*mu_b`.
pub fn eliminate_alpha(
    pp: &PublicParams,
    mu: &[FieldElement],
    guess: &GuessSet,
) -> Result<LinearSystem, AttackError> {
    let n = pp.n();
    check_len("mu", n, mu.len())?;
    guess.validate(n)?;
    let m = pp.modulus();
    let base = guess.positions[0];
    let base_val = guess.values[0] as u64;

    let mut system = LinearSystem::new(n);
    for (&pos, &val) in guess.positions.iter().zip(&guess.values).skip(1) {
        let val = val as u64;
        let coeffs = (1..=n)
            .map(|i| {
                m.sub(
                    &m.mul_small(pp.c(i, base), val),
                    &m.mul_small(pp.c(i, pos), base_val),
                )
            })
            .collect();
        let rhs = m.sub(
            &m.mul_small(&mu[base - 1], val),
            &m.mul_small(&mu[pos - 1], base_val),
        );
        system.push(Equation { coeffs, rhs })?;
    }
    Ok(system)
}

/// Binary solutions of `system` together with `sum_i x_i*nu_i = tau_b`.
///
/// Reduces the stacked system to row echelon form over F_p, then enumerates
/// `{0,1}` assignments of the free unknowns and keeps those whose pivot
/// unknowns also come out binary. Output is lexicographically sorted.
pub fn solve_binary(
    system: &LinearSystem,
    nu: &[FieldElement],
    tau_b: &FieldElement,
    m: &Modulus,
    n: usize,
) -> Result<Vec<BitVector>, AttackError> {
    check_len("nu", n, nu.len())?;
    check_len("system unknowns", n, system.n())?;

    let mut rows: Vec<Vec<FieldElement>> = Vec::with_capacity(system.rows().len() + 1);
    let mut first = nu.to_vec();
    first.push(tau_b.clone());
    rows.push(first);
    for eq in system.rows() {
        let mut row = eq.coeffs.clone();
        row.push(eq.rhs.clone());
        rows.push(row);
    }

    let pivots = reduce_rows(&mut rows, n, m)?;
    // 0 = nonzero leaves no solutions.
    if rows[pivots.len()..].iter().any(|row| !row[n].is_zero()) {
        return Ok(Vec::new());
    }

    let mut is_pivot = vec![false; n];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
    if free.len() > EXHAUSTIVE_LIMIT {
        return Err(AttackError::TooLarge {
            unknowns: free.len(),
            limit: EXHAUSTIVE_LIMIT,
        });
    }

    let one = m.one();
    let mut out = Vec::new();
    'assignment: for mask in 0u32..(1u32 << free.len()) {
        let mut x = vec![false; n];
        for (bit, &col) in free.iter().enumerate() {
            x[col] = mask >> bit & 1 == 1;
        }
        for (row, &col) in rows.iter().zip(&pivots) {
            let value = free
                .iter()
                .filter(|&&f| x[f])
                .fold(row[n].clone(), |acc, &f| m.sub(&acc, &row[f]));
            if value.is_zero() {
                x[col] = false;
            } else if value == one {
                x[col] = true;
            } else {
                continue 'assignment;
            }
        }
        out.push(x);
    }
    out.sort_unstable();
    Ok(out)
}

/// Gauss-Jordan elimination on an augmented matrix with `n` unknown columns.
/// Returns the pivot column of each of the leading rows.
fn reduce_rows(
    rows: &mut [Vec<FieldElement>],
    n: usize,
    m: &Modulus,
) -> Result<Vec<usize>, AttackError> {
    let mut pivots = Vec::new();
    for col in 0..n {
        let top = pivots.len();
        let Some(found) = (top..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(top, found);
        let inv = m.inv(&rows[top][col])?;
        for v in rows[top].iter_mut() {
            *v = m.mul(v, &inv);
        }
        let pivot_row = rows[top].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == top || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v = m.sub(v, &m.mul(&factor, p));
            }
        }
        pivots.push(col);
        if pivots.len() == rows.len() {
            break;
        }
    }
    Ok(pivots)
}

/// `alpha` and `sigma` recovered from known bits `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recovery {
    pub alpha: FieldElement,
    pub sigma: Permutation,
    /// False when more than one scalar produced a valid permutation; the
    /// first (smallest `sigma(1)`) is returned.
    pub unique: bool,
}

/// Recovers `(alpha, sigma)` from `w_j = mu_j - sum_i t_i*c_{i,j} = sigma(j)*alpha`.
///
/// Tries `sigma(1) = a` for each `a` in `1..=n`, sets `alpha = w_1/a` and
/// accepts when `(w_j/alpha)_j` is a permutation of `1..=n`.
pub fn recover_alpha_sigma(
    pp: &PublicParams,
    mu: &[FieldElement],
    t: &[bool],
) -> Result<Recovery, AttackError> {
    let n = pp.n();
    check_len("mu", n, mu.len())?;
    check_len("t", n, t.len())?;
    let m = pp.modulus();

    let w = (1..=n)
        .map(|j| {
            let sum = (1..=n)
                .filter(|&i| t[i - 1])
                .fold(FieldElement::zero(), |acc, i| m.add(&acc, pp.c(i, j)));
            let wj = m.sub(&mu[j - 1], &sum);
            if wj.is_zero() {
                Err(AttackError::ZeroW { j })
            } else {
                Ok(wj)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut accepted: Vec<Recovery> = Vec::new();
    for a in 1..=n as u64 {
        let a = m.from_u64(a);
        if a.is_zero() {
            continue;
        }
        let alpha = m.mul(&w[0], &m.inv(&a)?);
        let alpha_inv = m.inv(&alpha)?;
        let image: Option<Vec<usize>> = w
            .iter()
            .map(|wj| {
                m.mul(wj, &alpha_inv)
                    .to_u64()
                    .map(|v| v as usize)
                    .filter(|&v| (1..=n).contains(&v))
            })
            .collect();
        if let Some(Ok(sigma)) = image.map(Permutation::new) {
            accepted.push(Recovery {
                alpha,
                sigma,
                unique: true,
            });
        }
    }
    let count = accepted.len();
    let mut first = accepted
        .into_iter()
        .next()
        .ok_or(AttackError::NoCandidate)?;
    first.unique = count == 1;
    Ok(first)
}

/// Everything a passive observer of one run sees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackTranscript {
    pub pp: PublicParams,
    pub mu: Vec<FieldElement>,
    pub nu: Vec<FieldElement>,
    pub tau_a: FieldElement,
    pub tau_b: FieldElement,
    pub digests: Vec<Digest>,
    pub k0: usize,
}

impl AttackTranscript {
    pub fn from_transcript(pp: &PublicParams, t: &Transcript) -> Result<Self, AttackError> {
        let d = t.decode(pp)?;
        Ok(AttackTranscript {
            pp: pp.clone(),
            mu: d.round1.mu,
            nu: d.round2.nu,
            tau_a: d.round2.tau_a,
            tau_b: d.round3.tau_b,
            digests: d.round3.digests,
            k0: d.round4.k0 as usize,
        })
    }
}

/// A full recovery consistent with the published digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub t: BitVector,
    pub alpha: FieldElement,
    pub sigma: Permutation,
    pub g: FieldElement,
    /// Copied from [`Recovery::unique`].
    pub unique: bool,
}

/// Attempts to recover the key from a transcript under a guess of `sigma`.
/// Returns only candidates whose `h(g)` equals the published `digests[k0]`;
/// a wrong guess usually yields an empty list.
pub fn full_attack(tr: &AttackTranscript, guess: &GuessSet) -> Result<Vec<Candidate>, AttackError> {
    let pp = &tr.pp;
    let n = pp.n();
    let m = pp.modulus();
    check_len("digests", pp.offset_bound() + 1, tr.digests.len())?;
    if tr.k0 > pp.offset_bound() {
        return Err(ProtocolError::RangeError {
            k0: tr.k0,
            bound: pp.offset_bound(),
        }
        .into());
    }
    let target = tr.digests[tr.k0];

    let system = eliminate_alpha(pp, &tr.mu, guess)?;
    let mut out = Vec::new();
    for t in solve_binary(&system, &tr.nu, &tr.tau_b, m, n)? {
        let rec = match recover_alpha_sigma(pp, &tr.mu, &t) {
            Ok(rec) => rec,
            Err(AttackError::NoCandidate | AttackError::ZeroW { .. }) => continue,
            Err(e) => return Err(e),
        };
        let g = m.sub(&tr.tau_a, &m.mul_small(&rec.alpha, tr.k0 as u64));
        if pp.owf().eval(&g, m) == target {
            out.push(Candidate {
                t,
                alpha: rec.alpha,
                sigma: rec.sigma,
                g,
                unique: rec.unique,
            });
        }
    }
    Ok(out)
}

/// An honest run with both secrets kept, for experiments and tests.
#[derive(Debug, Clone)]
pub struct HonestInstance {
    pub alice: AliceSecret,
    pub bob: BobSecret,
    pub transcript: AttackTranscript,
    pub alice_key: SharedKey,
    pub bob_key: SharedKey,
}

impl HonestInstance {
    /// Fresh parameters and secrets from `seed`, executed in-process.
    pub fn generate(n: usize, seed: &[u8]) -> Result<Self, AttackError> {
        let pp = gen_public_params(n, seed)?;
        let alice = gen_alice_secret(&pp, &mut SeededRng::new(seed, ROLE_ALICE));
        let bob = gen_bob_secret(&pp, &mut SeededRng::new(seed, ROLE_BOB));
        Self::run(pp, alice, bob)
    }

    pub fn run(pp: PublicParams, alice: AliceSecret, bob: BobSecret) -> Result<Self, AttackError> {
        let mut a = AliceSession::new(&pp, alice.clone());
        let mut b = BobSession::new(&pp, bob.clone());
        let r1 = a.round1()?;
        let r2 = b.round2(&r1)?;
        let r3 = a.round3(&r2)?;
        let (r4, bob_key) = b.round4(&r3)?;
        let alice_key = a.finalize(&r4)?;
        let transcript = AttackTranscript {
            pp: pp.clone(),
            mu: r1.mu,
            nu: r2.nu,
            tau_a: r2.tau_a,
            tau_b: r3.tau_b,
            digests: r3.digests,
            k0: r4.k0 as usize,
        };
        Ok(HonestInstance {
            alice,
            bob,
            transcript,
            alice_key,
            bob_key,
        })
    }

    pub fn pp(&self) -> &PublicParams {
        &self.transcript.pp
    }

    /// Whether `c` is exactly Alice's secret and key.
    pub fn matches(&self, c: &Candidate) -> bool {
        c.t == self.alice.bits()
            && &c.alpha == self.alice.scalar()
            && &c.sigma == self.alice.permutation()
            && c.g == self.alice_key.g
    }
}

/// One CSV row of the solution-count experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRow {
    pub n: usize,
    pub p: String,
    pub trial: usize,
    pub count: usize,
    pub prediction: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountStats {
    pub n: usize,
    pub p: u64,
    pub rows: Vec<CountRow>,
    pub mean: f64,
    pub min: usize,
    pub max: usize,
    /// `2^n / p`.
    pub prediction: f64,
}

impl CountStats {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut writer = csv::Writer::from_writer(w);
        for row in &self.rows {
            writer.serialize(row)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// `2^n / p` rounded half-up to 3 decimals, computed in integers.
pub fn predicted_count(n: usize, p: u64) -> String {
    let scaled = ((1u128 << n) * 1000 + p as u128 / 2) / p as u128;
    format!("{}.{:03}", scaled / 1000, scaled % 1000)
}

/// Counts knapsack solutions over `trials` honest transcripts at size `n`.
pub fn solution_count_experiment(
    n: usize,
    trials: usize,
    rng: &mut SeededRng,
) -> Result<CountStats, AttackError> {
    count_experiment_with_limit(n, trials, rng, EXPERIMENT_LIMIT)
}

/// As [`solution_count_experiment`] with a caller-chosen size cap (at most
/// [`EXHAUSTIVE_LIMIT`]).
pub fn count_experiment_with_limit(
    n: usize,
    trials: usize,
    rng: &mut SeededRng,
    limit: usize,
) -> Result<CountStats, AttackError> {
    let limit = limit.min(EXHAUSTIVE_LIMIT);
    if n > limit {
        return Err(AttackError::TooLarge { unknowns: n, limit });
    }
    let mut rows = Vec::with_capacity(trials);
    let mut p_value = 0u64;
    let mut prediction = String::new();
    for trial in 0..trials {
        let seed: [u8; 32] = rng.gen();
        let inst = HonestInstance::generate(n, &seed)?;
        let tr = &inst.transcript;
        let m = tr.pp.modulus();
        let count = knapsack_solutions(&tr.nu, &tr.tau_b, m)?.len();
        if trial == 0 {
            p_value = m
                .p()
                .try_into()
                .map_err(|_| AttackError::TooLarge { unknowns: n, limit })?;
            prediction = predicted_count(n, p_value);
        }
        rows.push(CountRow {
            n,
            p: format!("{:x}", m.p()),
            trial,
            count,
            prediction: prediction.clone(),
        });
    }
    let counts = rows.iter().map(|r| r.count);
    let min = counts.clone().min().unwrap_or(0);
    let max = counts.clone().max().unwrap_or(0);
    let mean = if trials == 0 {
        0.0
    } else {
        counts.sum::<usize>() as f64 / trials as f64
    };
    Ok(CountStats {
        n,
        p: p_value,
        rows,
        mean,
        min,
        max,
        prediction: prediction.parse().unwrap_or(0.0),
    })
}
