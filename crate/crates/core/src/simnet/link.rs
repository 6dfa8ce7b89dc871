//! Per-message delay: `hops * base + jitter + size / bandwidth`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::SimTime;
use crate::wire::NodeId;

/// Factor applied to the propagation delay of the perturbed link.
pub const SLOW_LINK_FACTOR: u64 = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkModel {
    pub base_delay_per_hop: SimTime,
    /// Half-width of the uniform jitter added to propagation delay.
    pub jitter: SimTime,
    /// Bytes per second on each directed link; `None` is unlimited.
    pub bandwidth: Option<u64>,
    /// Overrides `bandwidth` on links leaving a broadcasting source.
    pub source_bandwidth: Option<u64>,
    /// Directed link whose propagation delay is stretched 100x.
    pub slow_link: Option<(NodeId, NodeId)>,
}

impl Default for LinkModel {
    fn default() -> Self {
        LinkModel {
            base_delay_per_hop: 50 * super::US,
            jitter: 0,
            bandwidth: None,
            source_bandwidth: None,
            slow_link: None,
        }
    }
}

/// Time to push `size` bytes onto a link of `bw` bytes per second.
pub fn serialization_delay(size: usize, bw: Option<u64>) -> SimTime {
    match bw {
        None | Some(0) => 0,
        Some(bw) => ((size as u128 * 1_000_000_000).div_ceil(bw as u128)) as SimTime,
    }
}

impl LinkModel {
    /// Propagation delay for one message over `hops` hops; at least 1 ns.
    pub fn propagation(&self, from: NodeId, to: NodeId, hops: u32, rng: &mut ChaCha8Rng) -> SimTime {
        let base = hops as i128 * self.base_delay_per_hop as i128;
        let jitter = if self.jitter > 0 {
            let w = self.jitter as i128;
            rng.gen_range(-w..=w)
        } else {
            0
        };
        let mut d = (base + jitter).max(1) as SimTime;
        if self.slow_link == Some((from, to)) {
            d = d.saturating_mul(SLOW_LINK_FACTOR);
        }
        d
    }

    pub fn bandwidth_for(&self, is_source: bool) -> Option<u64> {
        if is_source {
            self.source_bandwidth.or(self.bandwidth)
        } else {
            self.bandwidth
        }
    }
}
