//! Linear [n, k] MDS erasure coding over GF(2^8).
//!
//! The code is a systematic Reed-Solomon code: the message is split into `k`
//! equal-length shards `m_1..m_k` (zero-padded), a polynomial `P` of degree
//! `< k` is fixed per byte column by `P(x_j) = m_j` for `j = 1..k`, and
//! element `i` carries `P(x_i)` for every column. Evaluation points are the
//! field elements `x_i = i`, so `n` is capped at 255. Any `k` elements
//! reconstruct the message; with distance `d = n - k + 1` a bounded-distance
//! decoder corrects `e` errors and `s` erasures whenever `2e + s < d`.

pub mod gf256;
mod rs;
mod subset;

use bytes::Bytes;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use rs::{decode_correcting, decode_erasure, encode, encode_element};
pub use subset::{subset_search_decode, SubsetSearch, DEFAULT_SUBSET_CAP};

/// Largest supported code length (number of nonzero field elements).
pub const MAX_N: usize = 255;

/// Serialized size of a [`CodedElement`] excluding its data bytes.
pub const ELEMENT_OVERHEAD: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("invalid code parameters: n={n}, k={k} ({reason})")]
    InvalidParams { n: usize, k: usize, reason: &'static str },
    #[error("cannot encode an empty payload")]
    EmptyPayload,
    #[error("need at least {needed} elements, got {got}")]
    NotEnoughElements { needed: usize, got: usize },
    #[error("inconsistent element indices or lengths: {0}")]
    InconsistentIndices(String),
    #[error("decoding detected an error: no codeword within the correction radius")]
    DetectedError,
    #[error("subset search would try {subsets} subsets, above the cap of {cap}")]
    FaultBudgetTooLarge { subsets: u128, cap: u128 },
}

/// Parameters of an [n, k] code over GF(2^8).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeParams {
    n: usize,
    k: usize,
}

impl CodeParams {
    pub fn new(n: usize, k: usize) -> Result<Self, CodecError> {
        let bad = |reason| Err(CodecError::InvalidParams { n, k, reason });
        if k < 1 {
            return bad("k must be at least 1");
        }
        if k > n {
            return bad("k must not exceed n");
        }
        if n > MAX_N {
            return bad("n must not exceed 255");
        }
        Ok(CodeParams { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Minimum distance `n - k + 1`.
    pub fn distance(&self) -> usize {
        self.n - self.k + 1
    }

    /// Shard length for a payload of `len` bytes.
    pub fn shard_len(&self, len: usize) -> usize {
        len.div_ceil(self.k)
    }
}

/// One position of a codeword: `index` is 1-based, `data` holds
/// `ceil(L / k)` bytes and `claimed_len` records the original `L`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CodedElement {
    pub index: u8,
    pub data: Bytes,
    pub claimed_len: u32,
}

impl CodedElement {
    pub fn new(index: u8, data: impl Into<Bytes>, claimed_len: u32) -> Self {
        CodedElement { index, data: data.into(), claimed_len }
    }

    /// Serialized size: index (1) + claimed_len (4) + data.
    pub fn encoded_len(&self) -> usize {
        ELEMENT_OVERHEAD + self.data.len()
    }
}
