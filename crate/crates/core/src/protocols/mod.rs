//! Broadcast automata.
//!
//! | kind          | resilience | fast-path depth | source sends        |
//! |---------------|------------|-----------------|---------------------|
//! | `crb`         | n >= f+1   | 1               | n * L               |
//! | `ec-crb`      | n >= f+1   | 2               | n * L/k             |
//! | `bracha`      | n >= 3f+1  | 3               | n * L               |
//! | `h-brb-3f1`   | n >= 3f+1  | 3               | n * L               |
//! | `h-brb-5f1`   | n >= 5f+1  | 2               | n * L               |
//! | `ec-brb-3f1`  | n >= 3f+1  | 3               | n * (L/k + digest)  |
//! | `ec-brb-4f1`  | n >= 4f+1  | 4               | n * (L/k + digest)  |
//!
//! Every automaton keeps one lazily created state per `(source, h)` for the
//! whole run and emits at most one `Deliver` per `(source, h)`.

mod bracha;
mod common;
mod crb;
mod ec_brb3;
mod ec_brb4;
mod ec_crb;
mod hbrb3;
mod hbrb5;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::Automaton;
use crate::codec::{CodeParams, DEFAULT_SUBSET_CAP};
use crate::hashing::{digest, HashFn};
use crate::wire::NodeId;

pub use bracha::Bracha;
pub use crb::CrbFlood;
pub use ec_brb3::EcBrb3;
pub use ec_brb4::EcBrb4;
pub use ec_crb::EcCrb;
pub use hbrb3::HBrb3;
pub use hbrb5::HBrb5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProtocolKind {
    #[serde(rename = "crb")]
    CrbFlood,
    #[serde(rename = "ec-crb")]
    EcCrb,
    #[serde(rename = "bracha")]
    Bracha,
    #[serde(rename = "h-brb-3f1")]
    HBrb3f1,
    #[serde(rename = "h-brb-5f1")]
    HBrb5f1,
    #[serde(rename = "ec-brb-3f1")]
    EcBrb3f1,
    #[serde(rename = "ec-brb-4f1")]
    EcBrb4f1,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 7] = [
        ProtocolKind::CrbFlood,
        ProtocolKind::EcCrb,
        ProtocolKind::Bracha,
        ProtocolKind::HBrb3f1,
        ProtocolKind::HBrb5f1,
        ProtocolKind::EcBrb3f1,
        ProtocolKind::EcBrb4f1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::CrbFlood => "crb",
            ProtocolKind::EcCrb => "ec-crb",
            ProtocolKind::Bracha => "bracha",
            ProtocolKind::HBrb3f1 => "h-brb-3f1",
            ProtocolKind::HBrb5f1 => "h-brb-5f1",
            ProtocolKind::EcBrb3f1 => "ec-brb-3f1",
            ProtocolKind::EcBrb4f1 => "ec-brb-4f1",
        }
    }

    /// Smallest `n` tolerating `f` faults.
    pub fn min_n(self, f: usize) -> usize {
        match self {
            ProtocolKind::CrbFlood | ProtocolKind::EcCrb => f + 1,
            ProtocolKind::Bracha | ProtocolKind::HBrb3f1 | ProtocolKind::EcBrb3f1 => 3 * f + 1,
            ProtocolKind::EcBrb4f1 => 4 * f + 1,
            ProtocolKind::HBrb5f1 => 5 * f + 1,
        }
    }

    pub fn bound(self) -> &'static str {
        match self {
            ProtocolKind::CrbFlood | ProtocolKind::EcCrb => "n >= f+1",
            ProtocolKind::Bracha | ProtocolKind::HBrb3f1 | ProtocolKind::EcBrb3f1 => "n >= 3f+1",
            ProtocolKind::EcBrb4f1 => "n >= 4f+1",
            ProtocolKind::HBrb5f1 => "n >= 5f+1",
        }
    }

    pub fn uses_coding(self) -> bool {
        matches!(self, ProtocolKind::EcCrb | ProtocolKind::EcBrb3f1 | ProtocolKind::EcBrb4f1)
    }

    /// Whether the protocol tolerates Byzantine (not just crash) faults.
    pub fn byzantine(self) -> bool {
        !matches!(self, ProtocolKind::CrbFlood | ProtocolKind::EcCrb)
    }

    /// Default code dimension for `(n, f)`.
    pub fn default_k(self, n: usize, f: usize) -> Option<usize> {
        match self {
            ProtocolKind::EcCrb => Some(n.saturating_sub(f)),
            ProtocolKind::EcBrb3f1 => Some(f + 1),
            ProtocolKind::EcBrb4f1 => Some(n.saturating_sub(3 * f)),
            _ => None,
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        let alias = match norm.as_str() {
            "crb-flood" => "crb",
            "h-brb-3f+1" | "hbrb3" => "h-brb-3f1",
            "h-brb-5f+1" | "hbrb5" => "h-brb-5f1",
            "ec-brb-3f+1" | "ecbrb3" => "ec-brb-3f1",
            "ec-brb-4f+1" | "ecbrb4" => "ec-brb-4f1",
            other => other,
        };
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.name() == alias)
            .ok_or_else(|| ProtocolError::UnknownProtocol(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("{kind} with n={n}, f={f} violates the resilience bound {bound}")]
    ResilienceViolation { kind: ProtocolKind, n: usize, f: usize, bound: &'static str },
    #[error("bad code parameters: {0}")]
    BadCodeParams(String),
    #[error("node id {me} out of range for n={n}")]
    InvalidNode { me: NodeId, n: usize },
    #[error("unknown protocol {0:?}")]
    UnknownProtocol(String),
}

#[derive(Debug, Clone, Copy)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    pub n: usize,
    pub f: usize,
    /// Code dimension for coded protocols; `None` selects the default.
    pub k: Option<usize>,
    pub me: NodeId,
    pub strict_resilience: bool,
    pub hash: HashFn,
    /// Cap on subsets tried per search (EC-BRB[3f+1]).
    pub subset_cap: u128,
}

impl ProtocolConfig {
    pub fn new(kind: ProtocolKind, n: usize, f: usize, me: NodeId) -> Self {
        ProtocolConfig {
            kind,
            n,
            f,
            k: None,
            me,
            strict_resilience: true,
            hash: digest,
            subset_cap: DEFAULT_SUBSET_CAP,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict_resilience = strict;
        self
    }

    pub fn with_hash(mut self, hash: HashFn) -> Self {
        self.hash = hash;
        self
    }

    /// Checks resilience (in strict mode) and code parameters; returns the
    /// code parameters for coded protocols.
    pub fn validate(&self) -> Result<Option<CodeParams>, ProtocolError> {
        let (kind, n, f) = (self.kind, self.n, self.f);
        if n == 0 || self.me >= n {
            return Err(ProtocolError::InvalidNode { me: self.me, n });
        }
        if self.strict_resilience && n < kind.min_n(f) {
            return Err(ProtocolError::ResilienceViolation { kind, n, f, bound: kind.bound() });
        }
        if !kind.uses_coding() {
            if self.k.is_some() {
                return Err(ProtocolError::BadCodeParams(format!("{kind} does not use a code; k must be unset")));
            }
            return Ok(None);
        }
        let default_k = kind.default_k(n, f).unwrap();
        let k = self.k.unwrap_or(default_k);
        let ok = match kind {
            ProtocolKind::EcCrb => k + f <= n,
            _ => k == default_k && k >= 1,
        };
        if !ok {
            let rule = match kind {
                ProtocolKind::EcCrb => format!("k must satisfy k <= n-f = {}", n.saturating_sub(f)),
                ProtocolKind::EcBrb3f1 => format!("k must equal f+1 = {}", f + 1),
                _ => format!("k must equal n-3f = {}", n as isize - 3 * f as isize),
            };
            return Err(ProtocolError::BadCodeParams(format!("{kind} with n={n}, f={f}, k={k}: {rule}")));
        }
        CodeParams::new(n, k).map(Some).map_err(|e| ProtocolError::BadCodeParams(e.to_string()))
    }
}

/// Builds a fresh automaton for `config`.
pub fn make_automaton(config: ProtocolConfig) -> Result<Box<dyn Automaton>, ProtocolError> {
    let params = config.validate()?;
    let ctx = common::Ctx::from_config(&config);
    Ok(match config.kind {
        ProtocolKind::CrbFlood => Box::new(CrbFlood::new(ctx)),
        ProtocolKind::EcCrb => Box::new(EcCrb::new(ctx, params.unwrap())),
        ProtocolKind::Bracha => Box::new(Bracha::new(ctx)),
        ProtocolKind::HBrb3f1 => Box::new(HBrb3::new(ctx)),
        ProtocolKind::HBrb5f1 => Box::new(HBrb5::new(ctx)),
        ProtocolKind::EcBrb3f1 => Box::new(EcBrb3::new(ctx, params.unwrap(), config.subset_cap)),
        ProtocolKind::EcBrb4f1 => Box::new(EcBrb4::new(ctx, params.unwrap())),
    })
}

/// Quorum thresholds of an automaton, for inspection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Thresholds {
    pub n: usize,
    pub f: usize,
    /// Smallest quorum guaranteed to contain a non-faulty node.
    pub f_plus_1: usize,
    /// Largest quorum a node can wait for.
    pub n_minus_f: usize,
}

impl Thresholds {
    pub fn of(n: usize, f: usize) -> Self {
        Thresholds { n, f, f_plus_1: f + 1, n_minus_f: n - f }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hbrb3_thresholds() {
        let a = make_automaton(ProtocolConfig::new(ProtocolKind::HBrb3f1, 4, 1, 0)).unwrap();
        let h = a.as_any().downcast_ref::<HBrb3>().unwrap();
        assert_eq!(h.thresholds(), Thresholds { n: 4, f: 1, f_plus_1: 2, n_minus_f: 3 });
    }

    #[test]
    fn hbrb5_strict_needs_six() {
        let err = make_automaton(ProtocolConfig::new(ProtocolKind::HBrb5f1, 5, 1, 0)).err().unwrap();
        assert!(matches!(err, ProtocolError::ResilienceViolation { .. }));
        assert!(err.to_string().contains("n >= 5f+1"));
        assert!(make_automaton(ProtocolConfig::new(ProtocolKind::HBrb5f1, 5, 1, 0).strict(false)).is_ok());
    }

    #[test]
    fn ecbrb4_default_k() {
        let cfg = ProtocolConfig::new(ProtocolKind::EcBrb4f1, 13, 3, 0);
        assert_eq!(cfg.validate().unwrap().unwrap().k(), 4);
        assert!(matches!(cfg.with_k(5).validate(), Err(ProtocolError::BadCodeParams(_))));
    }

    #[test]
    fn eccrb_k_bound() {
        let cfg = ProtocolConfig::new(ProtocolKind::EcCrb, 5, 1, 0);
        assert_eq!(cfg.validate().unwrap().unwrap().k(), 4);
        assert!(cfg.with_k(2).validate().is_ok());
        assert!(cfg.with_k(5).validate().is_err());
    }

    #[test]
    fn node_out_of_range() {
        assert!(matches!(
            ProtocolConfig::new(ProtocolKind::Bracha, 4, 1, 4).validate(),
            Err(ProtocolError::InvalidNode { .. })
        ));
    }

    #[test]
    fn names_roundtrip() {
        for k in ProtocolKind::ALL {
            assert_eq!(k.name().parse::<ProtocolKind>().unwrap(), k);
        }
        assert_eq!("H_BRB_3F1".parse::<ProtocolKind>().unwrap(), ProtocolKind::HBrb3f1);
    }
}
