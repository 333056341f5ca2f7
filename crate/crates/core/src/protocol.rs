//! The four protocol rounds and the shared-key derivation.
//!
//! Alice sends `mu`, Bob answers with `(nu, tau_A)`, Alice publishes the
//! digest list `h(tau_A - k*alpha)` for `k = 0..=K` together with `tau_B`,
//! and Bob closes with the index `k0` of the first digest he can reproduce
//! from his side as `h(tau_B - l*beta)`. Both end up holding
//! `g = tau_A - k0*alpha = tau_B - l0*beta`.
//!
//! The offsets run over `0..=K` with `K = n(n+1)/2`: `sum_j s_j*sigma(j)` is
//! zero for an all-zero bit vector and `K` for an all-one vector.

use std::sync::mpsc;
use std::thread;

use thiserror::Error;

use crate::field::{FieldElement, Modulus};
use crate::owf::{Digest, Owf, OwfId};
use crate::params::{
    alice_secret_from_seed, bob_secret_from_seed, offset_bound, AliceSecret, BobSecret,
    PublicParams,
};
use crate::wire::{self, Frame, FrameChannel, MemChannel, Transcript, WireError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("{party} cannot run {attempted} in state {state}")]
    OutOfOrder {
        party: &'static str,
        attempted: &'static str,
        state: &'static str,
    },
    #[error("{what}: expected length {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("no digest match between the two candidate lists")]
    NoMatch,
    #[error("k0 = {k0} outside 0..={bound}")]
    RangeError { k0: usize, bound: usize },
}

/// Error from a full handshake run over some channel.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HandshakeError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Wire(#[from] WireError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round1Msg {
    pub mu: Vec<FieldElement>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round2Msg {
    pub nu: Vec<FieldElement>,
    pub tau_a: FieldElement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round3Msg {
    /// `digests[k] = h(tau_A - k*alpha)` for `k = 0..=K`.
    pub digests: Vec<Digest>,
    pub tau_b: FieldElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Round4Msg {
    pub k0: u32,
}

/// The agreed element `g` and its published image `h(g)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedKey {
    pub g: FieldElement,
    pub digest: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    pub k0: usize,
    pub l0: usize,
    pub g: FieldElement,
}

fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<(), ProtocolError> {
    if expected != actual {
        return Err(ProtocolError::LengthMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}

/// `sum_k bits[k] * v[k]` over the field.
fn masked_sum<'a>(
    m: &Modulus,
    bits: &[bool],
    values: impl Iterator<Item = &'a FieldElement>,
) -> FieldElement {
    bits.iter()
        .zip(values)
        .filter(|(&b, _)| b)
        .fold(FieldElement::zero(), |acc, (_, v)| m.add(&acc, v))
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum AliceState {
    Fresh,
    AwaitingRound2,
    AwaitingRound4 { tau_a: FieldElement },
    Done,
}

impl AliceState {
    fn label(&self) -> &'static str {
        match self {
            AliceState::Fresh => "Fresh",
            AliceState::AwaitingRound2 => "AwaitingRound2",
            AliceState::AwaitingRound4 { .. } => "AwaitingRound4",
            AliceState::Done => "Done",
        }
    }
}

/// Alice's side: rounds 1 and 3, then [`AliceSession::finalize`].
#[derive(Debug)]
pub struct AliceSession<'p, H = OwfId> {
    pp: &'p PublicParams,
    secret: AliceSecret,
    owf: H,
    state: AliceState,
}

impl<'p> AliceSession<'p, OwfId> {
    pub fn new(pp: &'p PublicParams, secret: AliceSecret) -> Self {
        Self::with_owf(pp, secret, pp.owf())
    }
}

impl<'p, H: Owf> AliceSession<'p, H> {
    pub fn with_owf(pp: &'p PublicParams, secret: AliceSecret, owf: H) -> Self {
        AliceSession {
            pp,
            secret,
            owf,
            state: AliceState::Fresh,
        }
    }

    pub fn secret(&self) -> &AliceSecret {
        &self.secret
    }

    pub fn state_label(&self) -> &'static str {
        self.state.label()
    }

    fn out_of_order(&self, attempted: &'static str) -> ProtocolError {
        ProtocolError::OutOfOrder {
            party: "alice",
            attempted,
            state: self.state.label(),
        }
    }

    /// `mu_j = sum_i t_i*c_{i,j} + sigma(j)*alpha`.
    pub fn round1(&mut self) -> Result<Round1Msg, ProtocolError> {
        if self.state != AliceState::Fresh {
            return Err(self.out_of_order("round1"));
        }
        let (pp, m) = (self.pp, self.pp.modulus());
        let t = self.secret.bits();
        let alpha = self.secret.scalar();
        let sigma = self.secret.permutation();
        let mu = (1..=pp.n())
            .map(|j| {
                let column = (1..=pp.n()).map(|i| pp.c(i, j));
                let sum = masked_sum(m, t, column);
                m.add(&sum, &m.mul_small(alpha, sigma.apply(j) as u64))
            })
            .collect();
        self.state = AliceState::AwaitingRound2;
        Ok(Round1Msg { mu })
    }

    /// Publishes `h(tau_A - k*alpha)` for `k = 0..=K` and `tau_B = sum_i t_i*nu_i`.
    pub fn round3(&mut self, r2: &Round2Msg) -> Result<Round3Msg, ProtocolError> {
        if self.state != AliceState::AwaitingRound2 {
            return Err(self.out_of_order("round3"));
        }
        let n = self.pp.n();
        check_len("round 2 nu", n, r2.nu.len())?;
        let m = self.pp.modulus();
        let alpha = self.secret.scalar();

        let k_max = offset_bound(n);
        let mut digests = Vec::with_capacity(k_max + 1);
        let mut candidate = r2.tau_a.clone();
        for _ in 0..=k_max {
            digests.push(self.owf.eval(&candidate, m));
            candidate = m.sub(&candidate, alpha);
        }
        let tau_b = masked_sum(m, self.secret.bits(), r2.nu.iter());

        self.state = AliceState::AwaitingRound4 {
            tau_a: r2.tau_a.clone(),
        };
        Ok(Round3Msg { digests, tau_b })
    }

    /// `g = tau_A - k0*alpha`.
    pub fn finalize(&mut self, r4: &Round4Msg) -> Result<SharedKey, ProtocolError> {
        let AliceState::AwaitingRound4 { tau_a } = &self.state else {
            return Err(self.out_of_order("finalize"));
        };
        let bound = self.pp.offset_bound();
        let k0 = r4.k0 as usize;
        if k0 > bound {
            return Err(ProtocolError::RangeError { k0, bound });
        }
        let m = self.pp.modulus();
        let g = m.sub(tau_a, &m.mul_small(self.secret.scalar(), k0 as u64));
        let digest = self.owf.eval(&g, m);
        self.state = AliceState::Done;
        Ok(SharedKey { g, digest })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BobState {
    Fresh,
    AwaitingRound3,
    Done,
}

impl BobState {
    fn label(&self) -> &'static str {
        match self {
            BobState::Fresh => "Fresh",
            BobState::AwaitingRound3 => "AwaitingRound3",
            BobState::Done => "Done",
        }
    }
}

/// Bob's side: rounds 2 and 4.
#[derive(Debug)]
pub struct BobSession<'p, H = OwfId> {
    pp: &'p PublicParams,
    secret: BobSecret,
    owf: H,
    state: BobState,
}

impl<'p> BobSession<'p, OwfId> {
    pub fn new(pp: &'p PublicParams, secret: BobSecret) -> Self {
        Self::with_owf(pp, secret, pp.owf())
    }
}

impl<'p, H: Owf> BobSession<'p, H> {
    pub fn with_owf(pp: &'p PublicParams, secret: BobSecret, owf: H) -> Self {
        BobSession {
            pp,
            secret,
            owf,
            state: BobState::Fresh,
        }
    }

    pub fn secret(&self) -> &BobSecret {
        &self.secret
    }

    pub fn state_label(&self) -> &'static str {
        self.state.label()
    }

    fn out_of_order(&self, attempted: &'static str) -> ProtocolError {
        ProtocolError::OutOfOrder {
            party: "bob",
            attempted,
            state: self.state.label(),
        }
    }

    /// `nu_i = sum_j s_j*c_{i,j} + rho(i)*beta` and `tau_A = sum_j s_j*mu_j`.
    pub fn round2(&mut self, r1: &Round1Msg) -> Result<Round2Msg, ProtocolError> {
        if self.state != BobState::Fresh {
            return Err(self.out_of_order("round2"));
        }
        let (pp, m) = (self.pp, self.pp.modulus());
        check_len("round 1 mu", pp.n(), r1.mu.len())?;
        let s = self.secret.bits();
        let beta = self.secret.scalar();
        let rho = self.secret.permutation();
        let nu = pp
            .matrix()
            .iter()
            .enumerate()
            .map(|(row, c_row)| {
                let sum = masked_sum(m, s, c_row.iter());
                m.add(&sum, &m.mul_small(beta, rho.apply(row + 1) as u64))
            })
            .collect();
        let tau_a = masked_sum(m, s, r1.mu.iter());
        self.state = BobState::AwaitingRound3;
        Ok(Round2Msg { nu, tau_a })
    }

    /// Finds the match and returns `k0` for Alice plus Bob's own key.
    pub fn round4(&mut self, r3: &Round3Msg) -> Result<(Round4Msg, SharedKey), ProtocolError> {
        if self.state != BobState::AwaitingRound3 {
            return Err(self.out_of_order("round4"));
        }
        let (pp, m) = (self.pp, self.pp.modulus());
        let found = match_digests(
            &r3.digests,
            &r3.tau_b,
            self.secret.scalar(),
            m,
            &self.owf,
            pp.n(),
        )?;
        let digest = r3.digests[found.k0];
        self.state = BobState::Done;
        Ok((
            Round4Msg {
                k0: found.k0 as u32,
            },
            SharedKey { g: found.g, digest },
        ))
    }
}

/// Sorted-list match between Alice's digests and `h(tau_B - l*beta)`.
///
/// Alice's list is indexed by `(digest, k)`; `l` is scanned upward from 0 and
/// the first hit wins, so ties resolve to the smallest `l0` and then the
/// smallest `k0`. At most `K+1` evaluations of `h` are made.
pub fn match_digests(
    digests: &[Digest],
    tau_b: &FieldElement,
    beta: &FieldElement,
    m: &Modulus,
    owf: &impl Owf,
    n: usize,
) -> Result<MatchResult, ProtocolError> {
    let k_max = offset_bound(n);
    check_len("round 3 digest list", k_max + 1, digests.len())?;

    let mut index: Vec<(Digest, usize)> = digests.iter().copied().zip(0..).collect();
    index.sort_unstable();

    let mut candidate = tau_b.clone();
    for l in 0..=k_max {
        let d = owf.eval(&candidate, m);
        let pos = index.partition_point(|(entry, _)| *entry < d);
        if let Some(&(entry, k)) = index.get(pos) {
            if entry == d {
                return Ok(MatchResult {
                    k0: k,
                    l0: l,
                    g: candidate,
                });
            }
        }
        candidate = m.sub(&candidate, beta);
    }
    Err(ProtocolError::NoMatch)
}

/// Runs Alice's half of the handshake over `chan`, returning her key and the
/// frames she sent.
pub fn drive_alice<C: FrameChannel, H: Owf>(
    session: &mut AliceSession<'_, H>,
    chan: &mut C,
) -> Result<SharedKey, HandshakeError> {
    let pp = session.pp;
    let r1 = session.round1()?;
    chan.send_frame(&wire::encode_msg(&r1, pp))?;
    let r2: Round2Msg = wire::decode_msg(&chan.recv_frame()?, pp)?;
    let r3 = session.round3(&r2)?;
    chan.send_frame(&wire::encode_msg(&r3, pp))?;
    let r4: Round4Msg = wire::decode_msg(&chan.recv_frame()?, pp)?;
    Ok(session.finalize(&r4)?)
}

/// Runs Bob's half of the handshake over `chan`.
pub fn drive_bob<C: FrameChannel, H: Owf>(
    session: &mut BobSession<'_, H>,
    chan: &mut C,
) -> Result<SharedKey, HandshakeError> {
    let pp = session.pp;
    let r1: Round1Msg = wire::decode_msg(&chan.recv_frame()?, pp)?;
    let r2 = session.round2(&r1)?;
    chan.send_frame(&wire::encode_msg(&r2, pp))?;
    let r3: Round3Msg = wire::decode_msg(&chan.recv_frame()?, pp)?;
    let (r4, key) = session.round4(&r3)?;
    chan.send_frame(&wire::encode_msg(&r4, pp))?;
    Ok(key)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandshakeOutcome {
    pub alice: SharedKey,
    pub bob: SharedKey,
    pub transcript: Transcript,
}

impl HandshakeOutcome {
    pub fn agreed(&self) -> bool {
        self.alice == self.bob
    }
}

/// Handshake with secrets drawn from `seed_alice` / `seed_bob`.
pub fn run_handshake(
    pp: &PublicParams,
    seed_alice: &[u8],
    seed_bob: &[u8],
) -> Result<HandshakeOutcome, HandshakeError> {
    run_handshake_with_secrets(
        pp,
        alice_secret_from_seed(pp, seed_alice),
        bob_secret_from_seed(pp, seed_bob),
    )
}

/// Runs both parties as two threads joined by an in-memory ordered channel.
/// Every frame that crosses the channel is recorded in the transcript.
pub fn run_handshake_with_secrets(
    pp: &PublicParams,
    alice: AliceSecret,
    bob: BobSecret,
) -> Result<HandshakeOutcome, HandshakeError> {
    let (tap_tx, tap_rx) = mpsc::channel::<Frame>();
    let (mut alice_end, mut bob_end) = MemChannel::pair();
    alice_end.tap(tap_tx.clone());
    bob_end.tap(tap_tx);

    let (alice_key, bob_key) = thread::scope(|scope| {
        let alice_task = scope.spawn(move || {
            let mut session = AliceSession::new(pp, alice);
            drive_alice(&mut session, &mut alice_end)
        });
        let bob_task = scope.spawn(move || {
            let mut session = BobSession::new(pp, bob);
            drive_bob(&mut session, &mut bob_end)
        });
        (
            alice_task.join().expect("alice task panicked"),
            bob_task.join().expect("bob task panicked"),
        )
    });

    // A failure on one side surfaces on the other as a closed channel;
    // report the root cause.
    let (alice_key, bob_key) = match (alice_key, bob_key) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), Err(HandshakeError::Wire(WireError::ChannelClosed))) => return Err(e),
        (_, Err(e)) | (Err(e), _) => return Err(e),
    };

    let transcript = Transcript::new(tap_rx.try_iter().collect())?;
    Ok(HandshakeOutcome {
        alice: alice_key,
        bob: bob_key,
        transcript,
    })
}
