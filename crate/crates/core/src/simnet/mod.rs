//! Deterministic discrete-event network simulator.
//!
//! A [`World`] owns one automaton per node and a queue of pending events
//! ordered by `(time, insertion sequence)`. Every `Send` action is turned
//! into a future `Receive` by the link model (or by a scripted delay rule),
//! after passing through the sender's adversary strategy if one is bound.
//! Self-addressed sends arrive immediately and skip the link model.

mod link;
pub mod properties;
mod stats;
mod topology;
pub mod trace;
mod world;

use thiserror::Error;

use crate::protocols::ProtocolError;
use crate::wire::{NodeId, SeqIndex};

pub use link::{serialization_delay, LinkModel, SLOW_LINK_FACTOR};
pub use properties::{check_properties, PropertyCheck, Violation};
pub use stats::{causal_depth, BroadcastRecord, DeliveryRecord, NodeStats, RunStats};
pub use topology::{build_topology, Topology, TopologyKind};
pub use trace::{TraceEvent, TraceRecord, TRACE_HEADER};
pub use world::{run, BroadcastSpec, DelayRule, SimConfig, World, DEFAULT_STEPS_PER_BROADCAST};

/// Simulated time in nanoseconds.
pub type SimTime = u64;

pub const US: SimTime = 1_000;
pub const MS: SimTime = 1_000_000;
pub const SEC: SimTime = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("step cap of {cap} events exceeded")]
    StepCapExceeded { cap: u64 },
    #[error("{faulty} faulty nodes exceed the budget f={f}")]
    FaultBudgetExceeded { faulty: usize, f: usize },
    #[error("node {node} out of range for n={n}")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("node {node} did not deliver ({s}, {h})")]
    NotDelivered { node: NodeId, s: NodeId, h: SeqIndex },
    #[error("event scheduled at {at} before the current time {now}")]
    ScheduleInPast { at: SimTime, now: SimTime },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}
