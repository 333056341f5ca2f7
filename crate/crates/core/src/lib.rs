//! A four-pass key agreement over a prime field whose secrecy rests on an
//! ultra-high-density knapsack, plus desk-scale tooling to attack it.
//!
//! Two parties agree on `n`, a prime `p` of about `sqrt(n log2 n)` bits, a
//! random `n x n` matrix `C` over F_p and an injective one-way function `h`.
//! Each keeps a nonzero scalar, `n` random bits and a random permutation.
//! After four messages both hold the same field element `g`:
//!
//! ```
//! use kap::params::gen_public_params;
//! use kap::protocol::run_handshake;
//!
//! let pp = gen_public_params(16, b"public seed").unwrap();
//! let outcome = run_handshake(&pp, b"alice", b"bob").unwrap();
//! assert_eq!(outcome.alice.g, outcome.bob.g);
//! ```
//!
//! Modules:
//!
//! - [`field`]: F_p arithmetic, primality, sizing of `p` from `n`.
//! - [`owf`]: the SHA-256 instantiation of `h` and an evaluation counter.
//! - [`params`]: public parameters, permutations, party secrets.
//! - [`protocol`]: round messages, session state machines, the digest match.
//! - [`wire`]: frame and message encodings, parameter and transcript files.
//! - [`attack`]: knapsack enumeration, alpha elimination, binary solving,
//!   secret recovery and the solution-count experiment.
//! - [`cli`]: the `kap` command-line driver.

pub mod attack;
pub mod cli;
pub mod field;
pub mod owf;
pub mod params;
pub mod protocol;
pub mod rng;
pub mod wire;

pub use field::{FieldElement, Modulus};
pub use owf::{Digest, OwfId};
pub use params::{gen_public_params, PublicParams};
pub use protocol::{run_handshake, AliceSession, BobSession, SharedKey};
pub use rng::SeededRng;
