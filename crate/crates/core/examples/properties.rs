//! Checking runs against the broadcast properties. A clean H-BRB[5f+1] run
//! with a silent node passes; the strawman witness protocol at a threshold
//! one below the safe bound loses agreement.

use rblab::adversary::{split_world, AdversaryStrategy};
use rblab::protocols::ProtocolKind;
use rblab::simnet::{check_properties, PropertyCheck, SimConfig, World};
use rblab::wire::Payload;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut w = World::new(&SimConfig::new(ProtocolKind::HBrb5f1, 11, 2))?;
    w.attach_adversary(3, AdversaryStrategy::Silent)?;
    w.attach_adversary(8, AdversaryStrategy::Crash { at_step: 5 })?;
    for h in 0..3 {
        w.schedule_broadcast(h * 1000, 0, h, Payload::from(format!("payload {h}").into_bytes()))?;
    }
    w.run()?;
    let check = PropertyCheck { n: w.n(), faulty: w.faulty(), quiescent: w.is_quiescent(), acc_invariant: false };
    println!("h-brb-5f1 n=11 f=2: {} violations", check_properties(w.stats(), &check).len());

    let f = 2;
    for threshold in [3 * f, 3 * f + 1] {
        let (mut w, _) = split_world(f, threshold)?;
        w.run()?;
        let check = PropertyCheck { n: w.n(), faulty: w.faulty(), quiescent: false, acc_invariant: false };
        let v = check_properties(w.stats(), &check);
        println!("witness protocol, threshold {threshold}: {} violations", v.len());
        if let Some(first) = v.first() {
            println!("  {first}");
        }
    }
    Ok(())
}
