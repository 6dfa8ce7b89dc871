//! Reliable-broadcast protocol lab.
//!
//! - [`protocols`]: broadcast automata (flooding CRB, coded CRB, Bracha,
//!   hash-based H-BRB for n >= 3f+1 and n >= 5f+1, coded EC-BRB for
//!   n >= 3f+1 and n >= 4f+1) behind the [`automaton::Automaton`] interface.
//! - [`codec`]: Reed-Solomon over GF(2^8) with erasure, error-correcting and
//!   subset-search decoding.
//! - [`wire`], [`hashing`]: message envelope and digests.
//! - [`simnet`]: deterministic discrete-event network with topologies,
//!   bandwidth, jitter, byte accounting, traces and property checks.
//! - [`adversary`]: faulty-node strategies, the witness strawman and scripted
//!   impossibility executions.
//! - [`bench`](mod@bench): TOML experiment configs, sweeps, reports and named scenarios.

pub mod adversary;
pub mod automaton;
pub mod bench;
pub mod codec;
pub mod hashing;
pub mod protocols;
pub mod simnet;
pub mod wire;
