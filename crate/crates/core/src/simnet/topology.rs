//! Hop-count matrices for the emulated switch topologies.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::wire::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TopologyKind {
    /// All hosts on one switch: every pair is 2 hops apart.
    SingleSwitch,
    /// One host per switch, switches in a chain.
    Linear,
    /// Complete switch tree of the given depth and fanout with hosts under
    /// the bottom switches, `fanout` hosts per switch.
    Tree { depth: u32, fanout: u32 },
    /// One edge switch per host, all edge switches under one spine.
    FatTree,
}

impl TopologyKind {
    pub fn name(&self) -> String {
        match self {
            TopologyKind::SingleSwitch => "single-switch".into(),
            TopologyKind::Linear => "linear".into(),
            TopologyKind::Tree { depth, fanout } => format!("tree-{depth}x{fanout}"),
            TopologyKind::FatTree => "fat-tree".into(),
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    kind: TopologyKind,
    n: usize,
    hops: Vec<u32>,
}

impl Topology {
    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn hops(&self, i: NodeId, j: NodeId) -> u32 {
        self.hops[i * self.n + j]
    }
}

pub fn build_topology(kind: TopologyKind, n: usize) -> Result<Topology, SimError> {
    if n == 0 {
        return Err(SimError::InvalidTopology("n must be at least 1".into()));
    }
    if let TopologyKind::Tree { depth, fanout } = kind {
        if depth == 0 || fanout == 0 {
            return Err(SimError::InvalidTopology("tree depth and fanout must be positive".into()));
        }
        let leaves = (fanout as u128).checked_pow(depth).unwrap_or(u128::MAX);
        if (n as u128) > leaves {
            return Err(SimError::InvalidTopology(format!(
                "tree of depth {depth} and fanout {fanout} hosts at most {leaves} nodes, n={n}"
            )));
        }
    }
    let mut hops = vec![0u32; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            hops[i * n + j] = match kind {
                TopologyKind::SingleSwitch => 2,
                TopologyKind::Linear => i.abs_diff(j) as u32 + 2,
                TopologyKind::FatTree => 4,
                TopologyKind::Tree { fanout, .. } => {
                    let f = fanout as usize;
                    let (mut a, mut b) = (i / f, j / f);
                    let mut up = 0;
                    while a != b {
                        a /= f;
                        b /= f;
                        up += 1;
                    }
                    2 + 2 * up
                }
            };
        }
    }
    Ok(Topology { kind, n, hops })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_switch_is_a_star() {
        let t = build_topology(TopologyKind::SingleSwitch, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(t.hops(i, j), if i == j { 0 } else { 2 });
            }
        }
    }

    #[test]
    fn linear_end_to_end() {
        let t = build_topology(TopologyKind::Linear, 5).unwrap();
        // host0 - s0 - s1 - s2 - s3 - s4 - host4
        assert_eq!(t.hops(0, 4), 6);
        assert_eq!(t.hops(1, 2), 3);
    }

    #[test]
    fn tree_through_root() {
        let t = build_topology(TopologyKind::Tree { depth: 3, fanout: 2 }, 8).unwrap();
        assert_eq!(t.hops(0, 7), 6);
        assert_eq!(t.hops(0, 1), 2);
        assert_eq!(t.hops(0, 2), 4);
    }

    #[test]
    fn tree_too_small() {
        assert!(matches!(
            build_topology(TopologyKind::Tree { depth: 2, fanout: 2 }, 5),
            Err(SimError::InvalidTopology(_))
        ));
    }

    #[test]
    fn symmetric() {
        for kind in [
            TopologyKind::SingleSwitch,
            TopologyKind::Linear,
            TopologyKind::Tree { depth: 2, fanout: 3 },
            TopologyKind::FatTree,
        ] {
            let t = build_topology(kind, 7).unwrap();
            for i in 0..7 {
                for j in 0..7 {
                    assert_eq!(t.hops(i, j), t.hops(j, i));
                }
            }
        }
    }
}
