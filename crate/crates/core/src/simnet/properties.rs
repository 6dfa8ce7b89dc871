//! Post-run checks of the reliable-broadcast properties.
//!
//! 1. Non-faulty source: every non-faulty node delivers each broadcast of a
//!    non-faulty source.
//! 2. Validity: no non-faulty node delivers `(s, h)` for a non-faulty `s`
//!    that never broadcast it, or with a different payload.
//! 3. Agreement: non-faulty deliveries of `(s, h)` carry equal payloads.
//! 4. Integrity: each node delivers `(s, h)` at most once.
//! 5. Eventual termination: if one non-faulty node delivers `(s, h)`, all do.
//!
//! Plus the ACC-uniqueness invariant of the digest-ACC protocols: no two
//! non-faulty nodes send `ACC` for the same `(s, h)` with different digests.
//!
//! Liveness properties (1, 5) are only meaningful on a quiescent run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::hashing::Digest;
use crate::wire::{NodeId, SeqIndex};

use super::RunStats;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Termination { node: NodeId, source: NodeId, h: SeqIndex },
    Validity { node: NodeId, source: NodeId, h: SeqIndex },
    Agreement { source: NodeId, h: SeqIndex, a: NodeId, b: NodeId },
    Integrity { node: NodeId, source: NodeId, h: SeqIndex, count: usize },
    EventualTermination { node: NodeId, source: NodeId, h: SeqIndex },
    AccConflict { source: NodeId, h: SeqIndex, a: NodeId, b: NodeId },
}

impl Violation {
    /// Property number, with 0 for the ACC invariant.
    pub fn property(&self) -> u8 {
        match self {
            Violation::Termination { .. } => 1,
            Violation::Validity { .. } => 2,
            Violation::Agreement { .. } => 3,
            Violation::Integrity { .. } => 4,
            Violation::EventualTermination { .. } => 5,
            Violation::AccConflict { .. } => 0,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Termination { node, source, h } => {
                write!(f, "P1: node {node} never delivered non-faulty ({source}, {h})")
            }
            Violation::Validity { node, source, h } => {
                write!(f, "P2: node {node} delivered ({source}, {h}) not broadcast as such")
            }
            Violation::Agreement { source, h, a, b } => {
                write!(f, "P3: nodes {a} and {b} delivered different payloads for ({source}, {h})")
            }
            Violation::Integrity { node, source, h, count } => {
                write!(f, "P4: node {node} delivered ({source}, {h}) {count} times")
            }
            Violation::EventualTermination { node, source, h } => {
                write!(f, "P5: node {node} missed ({source}, {h}) delivered elsewhere")
            }
            Violation::AccConflict { source, h, a, b } => {
                write!(f, "ACC: nodes {a} and {b} sent ACC with different digests for ({source}, {h})")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PropertyCheck<'a> {
    pub n: usize,
    pub faulty: &'a BTreeSet<NodeId>,
    /// Whether the run drained to quiescence; liveness is skipped otherwise.
    pub quiescent: bool,
    /// Check the ACC-uniqueness invariant.
    pub acc_invariant: bool,
}

pub fn check_properties(stats: &RunStats, check: &PropertyCheck<'_>) -> Vec<Violation> {
    let faulty = check.faulty;
    let honest: Vec<NodeId> = (0..check.n).filter(|i| !faulty.contains(i)).collect();
    let mut out = Vec::new();

    let mut broadcast: BTreeMap<(NodeId, SeqIndex), Digest> = BTreeMap::new();
    for b in &stats.broadcasts {
        if !faulty.contains(&b.source) {
            broadcast.insert((b.source, b.h), b.payload);
        }
    }

    // (s, h) -> node -> delivered payloads
    let mut delivered: BTreeMap<(NodeId, SeqIndex), BTreeMap<NodeId, Vec<Digest>>> = BTreeMap::new();
    for d in &stats.deliveries {
        if !faulty.contains(&d.node) {
            delivered.entry((d.source, d.h)).or_default().entry(d.node).or_default().push(d.payload);
        }
    }

    for (&(s, h), by_node) in &delivered {
        for (&node, ps) in by_node {
            if ps.len() > 1 {
                out.push(Violation::Integrity { node, source: s, h, count: ps.len() });
            }
            if !faulty.contains(&s) && broadcast.get(&(s, h)) != Some(&ps[0]) {
                out.push(Violation::Validity { node, source: s, h });
            }
        }
        let mut first: Option<(NodeId, Digest)> = None;
        for (&node, ps) in by_node {
            match first {
                None => first = Some((node, ps[0])),
                Some((a, p)) if p != ps[0] => {
                    out.push(Violation::Agreement { source: s, h, a, b: node });
                }
                _ => {}
            }
        }
        if check.quiescent && !broadcast.contains_key(&(s, h)) {
            for &node in &honest {
                if !by_node.contains_key(&node) {
                    out.push(Violation::EventualTermination { node, source: s, h });
                }
            }
        }
    }

    if check.quiescent {
        for &(s, h) in broadcast.keys() {
            let by_node = delivered.get(&(s, h));
            for &node in &honest {
                if !by_node.is_some_and(|m| m.contains_key(&node)) {
                    out.push(Violation::Termination { node, source: s, h });
                }
            }
        }
    }

    if check.acc_invariant {
        for (&(s, h), by_node) in &stats.acc_digests {
            let mut first: Option<(NodeId, Digest)> = None;
            for (&node, ds) in by_node {
                if faulty.contains(&node) {
                    continue;
                }
                for &d in ds {
                    match first {
                        None => first = Some((node, d)),
                        Some((a, p)) if p != d => {
                            out.push(Violation::AccConflict { source: s, h, a, b: node });
                        }
                        _ => {}
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::digest;
    use crate::simnet::{BroadcastRecord, DeliveryRecord};

    fn rec(node: NodeId, m: &[u8]) -> DeliveryRecord {
        DeliveryRecord { node, source: 0, h: 0, time: 0, depth: 1, payload: digest(m), len: m.len() }
    }

    fn stats(deliveries: Vec<DeliveryRecord>) -> RunStats {
        let mut s = RunStats::new(4);
        s.broadcasts.push(BroadcastRecord { source: 0, h: 0, time: 0, payload: digest(b"m"), len: 1 });
        s.deliveries = deliveries;
        s
    }

    fn check(s: &RunStats, faulty: &BTreeSet<NodeId>) -> Vec<u8> {
        let c = PropertyCheck { n: 4, faulty, quiescent: true, acc_invariant: true };
        check_properties(s, &c).iter().map(Violation::property).collect()
    }

    #[test]
    fn clean_run() {
        let s = stats((0..4).map(|i| rec(i, b"m")).collect());
        assert!(check(&s, &BTreeSet::new()).is_empty());
    }

    #[test]
    fn each_property_detected() {
        let none = BTreeSet::new();
        assert_eq!(check(&stats((0..3).map(|i| rec(i, b"m")).collect()), &none), vec![1]);
        let mut dup: Vec<_> = (0..4).map(|i| rec(i, b"m")).collect();
        dup.push(rec(2, b"m"));
        assert_eq!(check(&stats(dup), &none), vec![4]);

        let byz: BTreeSet<NodeId> = [0].into();
        let split = vec![rec(1, b"a"), rec(2, b"b"), rec(3, b"a")];
        assert_eq!(check(&stats(split), &byz), vec![3]);
        assert_eq!(check(&stats(vec![rec(1, b"a")]), &byz), vec![5, 5]);

        let mut s = stats((0..4).map(|i| rec(i, b"x")).collect());
        s.broadcasts.clear();
        assert_eq!(check(&s, &none), vec![2, 2, 2, 2]);
    }

    #[test]
    fn acc_conflict() {
        let mut s = stats((0..4).map(|i| rec(i, b"m")).collect());
        let e = s.acc_digests.entry((0, 0)).or_default();
        e.entry(1).or_default().insert(digest(b"m"));
        e.entry(2).or_default().insert(digest(b"x"));
        assert_eq!(check(&s, &BTreeSet::new()), vec![0]);
        assert!(check(&s, &[2].into()).is_empty());
    }
}
