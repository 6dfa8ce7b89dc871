//! Byzantine behaviour: an equivocating source and a corrupting relay
//! against H-BRB[3f+1], then the scripted executions against the strawman
//! witness protocol and the helper-message timeline.

use std::collections::BTreeMap;

use rblab::adversary::{exec1_world, helper4_world, AdversaryStrategy, PHASE};
use rblab::protocols::ProtocolKind;
use rblab::simnet::{SimConfig, World, US};
use rblab::wire::Payload;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = SimConfig::new(ProtocolKind::HBrb3f1, 7, 2);
    cfg.link.jitter = 50 * US;
    let mut w = World::new(&cfg)?;
    let partition = BTreeMap::from([(1, Payload::from("forged"))]);
    w.attach_adversary(0, AdversaryStrategy::EquivocatingSource { partition })?;
    w.attach_adversary(6, AdversaryStrategy::CorruptRelay { seed: 7 })?;
    w.schedule_broadcast(0, 0, 0, Payload::from("genuine"))?;
    w.run()?;
    for d in w.stats().deliveries.iter().filter(|d| !w.is_faulty(d.node)) {
        println!("node {} delivered a {}-byte payload, digest {}", d.node, d.len, &d.payload.to_hex()[..16]);
    }

    let (mut w, plan) = exec1_world(1)?;
    w.run()?;
    let sets = plan.sets.expect("exec1 partitions the nodes");
    for i in sets.s1().chain(sets.s4()) {
        let d = w.stats().delivery(i, plan.b, plan.h).expect("delivered");
        let which = if d.payload == w.hash()(plan.m1.as_bytes()) { "m1" } else { "m2" };
        println!("exec1: witness node {i} delivers {which}");
    }

    let (mut w, plan) = helper4_world()?;
    w.run()?;
    for i in 1..6 {
        let t = w.stats().delivery(i, plan.b, plan.h).expect("delivered").time;
        println!("helper4: node {i} delivers in phase {}", t / PHASE);
    }
    Ok(())
}
