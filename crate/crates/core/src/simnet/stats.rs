//! Run accounting.

use std::collections::{BTreeMap, BTreeSet};

use crate::hashing::Digest;
use crate::wire::{NodeId, SeqIndex, StatKind};

use super::{SimError, SimTime};

const KINDS: usize = StatKind::ALL.len();

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeStats {
    pub bytes_sent: [u64; KINDS],
    pub bytes_received: [u64; KINDS],
    pub msgs_sent: [u64; KINDS],
    pub msgs_received: [u64; KINDS],
    /// Bytes of wire-kind MSG sent, including nested-instance MSGs.
    pub msg_bytes_sent: u64,
}

impl NodeStats {
    pub fn total_sent(&self) -> u64 {
        self.bytes_sent.iter().sum()
    }

    pub fn total_received(&self) -> u64 {
        self.bytes_received.iter().sum()
    }

    pub fn sent(&self, kind: StatKind) -> u64 {
        self.bytes_sent[kind.index()]
    }

    pub fn received(&self, kind: StatKind) -> u64 {
        self.bytes_received[kind.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryRecord {
    pub node: NodeId,
    pub source: NodeId,
    pub h: SeqIndex,
    pub time: SimTime,
    pub depth: u32,
    pub payload: Digest,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BroadcastRecord {
    pub source: NodeId,
    pub h: SeqIndex,
    pub time: SimTime,
    pub payload: Digest,
    pub len: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    pub per_node: Vec<NodeStats>,
    pub deliveries: Vec<DeliveryRecord>,
    pub broadcasts: Vec<BroadcastRecord>,
    /// Digests named in main-instance `ACC(digest)` messages, by sender.
    pub acc_digests: BTreeMap<(NodeId, SeqIndex), BTreeMap<NodeId, BTreeSet<Digest>>>,
    pub bytes_in_flight: u64,
    pub events: u64,
    /// Time of the last processed event.
    pub duration: SimTime,
}

impl RunStats {
    pub fn new(n: usize) -> Self {
        RunStats { per_node: vec![NodeStats::default(); n], ..RunStats::default() }
    }

    pub fn total_sent(&self) -> u64 {
        self.per_node.iter().map(NodeStats::total_sent).sum()
    }

    pub fn total_received(&self) -> u64 {
        self.per_node.iter().map(NodeStats::total_received).sum()
    }

    pub fn msgs_sent(&self, kind: StatKind) -> u64 {
        self.per_node.iter().map(|s| s.msgs_sent[kind.index()]).sum()
    }

    pub fn total_msgs_sent(&self) -> u64 {
        StatKind::ALL.iter().map(|k| self.msgs_sent(*k)).sum()
    }

    pub fn delivery(&self, node: NodeId, source: NodeId, h: SeqIndex) -> Option<&DeliveryRecord> {
        self.deliveries.iter().find(|d| d.node == node && d.source == source && d.h == h)
    }

    /// Causal depth at `node`'s first delivery of `(s, h)`.
    pub fn causal_depth(&self, s: NodeId, h: SeqIndex, node: NodeId) -> Result<u32, SimError> {
        self.delivery(node, s, h).map(|d| d.depth).ok_or(SimError::NotDelivered { node, s, h })
    }

    /// Delivery latency of every delivery relative to its broadcast.
    pub fn latencies(&self) -> Vec<SimTime> {
        let start: BTreeMap<(NodeId, SeqIndex), SimTime> =
            self.broadcasts.iter().map(|b| ((b.source, b.h), b.time)).collect();
        self.deliveries.iter().filter_map(|d| start.get(&(d.source, d.h)).map(|t| d.time - t)).collect()
    }
}

/// Free-function form of [`RunStats::causal_depth`].
pub fn causal_depth(stats: &RunStats, s: NodeId, h: SeqIndex, node: NodeId) -> Result<u32, SimError> {
    stats.causal_depth(s, h, node)
}
