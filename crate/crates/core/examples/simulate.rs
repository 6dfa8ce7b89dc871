//! One simulated run: EC-BRB[3f+1] on a linear topology with jitter and a
//! bandwidth limit, followed by per-kind message and byte counts.

use rblab::protocols::ProtocolKind;
use rblab::simnet::{run, BroadcastSpec, SimConfig, TopologyKind, World, US};
use rblab::wire::{Payload, StatKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = SimConfig::new(ProtocolKind::EcBrb3f1, 7, 2);
    cfg.topology = TopologyKind::Linear;
    cfg.link.jitter = 30 * US;
    cfg.link.bandwidth = Some(12_500_000);
    cfg.seed = 42;

    let workload: Vec<BroadcastSpec> = (0..5)
        .map(|h| BroadcastSpec { at: h * 500 * US, source: 0, h, payload: Payload::from(vec![h as u8; 8192]) })
        .collect();
    let stats = run(World::new(&cfg)?, &workload)?;

    println!("{} deliveries in {} us of simulated time", stats.deliveries.len(), stats.duration / US);
    for kind in [StatKind::Msg, StatKind::Echo, StatKind::Acc, StatKind::Req, StatKind::Fwd] {
        println!("{:>5}: {:>4} messages", kind.name(), stats.msgs_sent(kind));
    }
    println!("source sent {} bytes, all nodes {} bytes", stats.per_node[0].total_sent(), stats.total_sent());
    let depth = (0..7).map(|i| stats.causal_depth(0, 0, i)).collect::<Result<Vec<_>, _>>()?;
    println!("causal depth of broadcast 0 per node: {depth:?}");
    Ok(())
}
