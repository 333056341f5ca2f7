//! The one-way function `h: F_p -> {0,1}^256` used to publish key candidates.
//!
//! The only registered instantiation hashes a domain-separated, fixed-width
//! encoding of the input with SHA-256:
//!
//! ```text
//! "KAP-OWF-v1" || byte_width(p) as u16 BE || x as byte_width-byte BE
//! ```

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::field::{FieldElement, Modulus};

/// Domain separation prefix of the hash preimage.
pub const OWF_DOMAIN_TAG: &[u8] = b"KAP-OWF-v1";

/// Digest length in bytes.
pub const DIGEST_LEN: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OwfError {
    #[error("unknown one-way function {0:?}")]
    UnknownOwf(String),
}

/// Identifier of a registered one-way function instantiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OwfId {
    #[default]
    Sha256V1,
}

impl OwfId {
    pub fn name(&self) -> &'static str {
        match self {
            OwfId::Sha256V1 => "sha256-kap-v1",
        }
    }

    /// Output length in bits.
    pub fn output_bits(&self) -> usize {
        match self {
            OwfId::Sha256V1 => DIGEST_LEN * 8,
        }
    }
}

impl FromStr for OwfId {
    type Err = OwfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sha256-kap-v1" => Ok(OwfId::Sha256V1),
            other => Err(OwfError::UnknownOwf(other.to_string())),
        }
    }
}

impl fmt::Display for OwfId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A 256-bit digest, ordered lexicographically by bytes.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest(pub [u8; DIGEST_LEN]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Anything that can play the role of `h`.
pub trait Owf {
    fn id(&self) -> OwfId;
    fn eval(&self, x: &FieldElement, m: &Modulus) -> Digest;
}

impl Owf for OwfId {
    fn id(&self) -> OwfId {
        *self
    }

    fn eval(&self, x: &FieldElement, m: &Modulus) -> Digest {
        match self {
            OwfId::Sha256V1 => sha256_v1(x, m),
        }
    }
}

/// Preimage bytes hashed by [`OwfId::Sha256V1`].
pub fn owf_preimage(x: &FieldElement, m: &Modulus) -> Vec<u8> {
    let width = m.byte_width();
    let mut out = Vec::with_capacity(OWF_DOMAIN_TAG.len() + 2 + width);
    out.extend_from_slice(OWF_DOMAIN_TAG);
    out.extend_from_slice(&(width as u16).to_be_bytes());
    let value = x.value().to_bytes_be();
    out.resize(out.len() + width - value.len(), 0);
    out.extend_from_slice(&value);
    out
}

fn sha256_v1(x: &FieldElement, m: &Modulus) -> Digest {
    Digest(Sha256::digest(owf_preimage(x, m)).into())
}

/// Evaluates the registered function named by `id`.
pub fn h_eval(x: &FieldElement, m: &Modulus, id: OwfId) -> Digest {
    id.eval(x, m)
}

/// Wraps another [`Owf`] and counts evaluations. Clones share the counter.
#[derive(Debug, Clone, Default)]
pub struct CountingOwf<H = OwfId> {
    inner: H,
    calls: Arc<AtomicU64>,
}

impl<H: Owf> CountingOwf<H> {
    pub fn new(inner: H) -> Self {
        CountingOwf {
            inner,
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::Relaxed)
    }
}

impl<H: Owf> Owf for CountingOwf<H> {
    fn id(&self) -> OwfId {
        self.inner.id()
    }

    fn eval(&self, x: &FieldElement, m: &Modulus) -> Digest {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.eval(x, m)
    }
}

impl<H: Owf + ?Sized> Owf for &H {
    fn id(&self) -> OwfId {
        (**self).id()
    }

    fn eval(&self, x: &FieldElement, m: &Modulus) -> Digest {
        (**self).eval(x, m)
    }
}
