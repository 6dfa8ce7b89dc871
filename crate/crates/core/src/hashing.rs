//! Collision-resistant digests.
//!
//! Every protocol that exchanges helper messages compares payloads through a
//! [`Digest`]. The default function is SHA-256; a cheaper non-cryptographic
//! [`fast_digest`] can be swapped in via [`HashFn`] for bulk tests.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::Hasher;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

pub const DIGEST_LEN: usize = 32;

/// Fixed-size digest; equality is byte equality.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Digest(pub [u8; DIGEST_LEN]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        <[u8; DIGEST_LEN]>::try_from(bytes).ok().map(Digest)
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({}..)", &self.to_hex()[..12])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Pluggable digest function.
pub type HashFn = fn(&[u8]) -> Digest;

/// SHA-256 of `data`.
pub fn digest(data: &[u8]) -> Digest {
    Digest(Sha256::digest(data).into())
}

/// Fast SipHash-based digest expanded to 32 bytes (four lanes with distinct
/// prefixes). Not collision resistant against an adversary; only for tests
/// that push millions of payloads.
pub fn fast_digest(data: &[u8]) -> Digest {
    let mut out = [0u8; DIGEST_LEN];
    for (lane, chunk) in out.chunks_mut(8).enumerate() {
        // DefaultHasher::new() is fixed-keyed, so this is deterministic.
        let mut h = DefaultHasher::new();
        h.write_u64(0x9e37_79b9_7f4a_7c15 ^ lane as u64);
        h.write(data);
        chunk.copy_from_slice(&h.finish().to_le_bytes());
    }
    Digest(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_empty_vector() {
        assert_eq!(digest(b"").to_hex(), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn sha256_abc_vector() {
        assert_eq!(digest(b"abc").to_hex(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn deterministic() {
        let x = b"reliable broadcast";
        assert_eq!(digest(x), digest(x));
        assert_eq!(fast_digest(x), fast_digest(x));
        assert_ne!(fast_digest(b"a"), fast_digest(b"b"));
    }

    #[test]
    fn million_distinct_inputs_have_distinct_digests() {
        let mut seen = std::collections::HashSet::with_capacity(1_000_000);
        for i in 0u64..1_000_000 {
            assert!(seen.insert(digest(&i.to_le_bytes())), "collision at {i}");
        }
    }
}
