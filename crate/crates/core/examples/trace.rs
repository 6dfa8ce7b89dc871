//! Event tracing: runs a small Bracha broadcast with tracing on, prints the
//! first records and counts events by type.

use std::collections::BTreeMap;

use rblab::protocols::ProtocolKind;
use rblab::simnet::{trace, SimConfig, World};
use rblab::wire::Payload;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = SimConfig::new(ProtocolKind::Bracha, 4, 1);
    cfg.trace = true;
    let mut w = World::new(&cfg)?;
    w.schedule_broadcast(0, 2, 0, Payload::from("traced"))?;
    w.run()?;
    let records = w.trace().expect("tracing enabled");

    for line in trace::render(records).lines().take(8) {
        println!("{line}");
    }
    println!("...");
    let mut by_event: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *by_event.entry(r.event.name()).or_default() += 1;
    }
    println!("{by_event:?}");
    Ok(())
}
