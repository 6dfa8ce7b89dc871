//! Drives H-BRB[3f+1] automata by hand: a plain FIFO of pending messages
//! stands in for the network, so the example shows the automaton interface
//! without the simulator.

use std::collections::VecDeque;

use rblab::automaton::{Action, Event};
use rblab::protocols::{make_automaton, ProtocolConfig, ProtocolKind};
use rblab::wire::Payload;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, f) = (4, 1);
    let mut nodes = (0..n)
        .map(|me| make_automaton(ProtocolConfig::new(ProtocolKind::HBrb3f1, n, f, me)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut queue = VecDeque::new();
    let first = nodes[0].handle(Event::BroadcastRequest { payload: Payload::from("hello"), h: 0 });
    queue.extend(first.into_iter().map(|a| (0, a)));

    let mut sent = 0;
    while let Some((from, action)) = queue.pop_front() {
        match action {
            Action::Send { to, msg } => {
                sent += 1;
                let out = nodes[to].handle(Event::Receive { from, msg });
                queue.extend(out.into_iter().map(|a| (to, a)));
            }
            Action::Deliver { source, payload, h } => {
                println!("node {from} delivers ({source}, {h}): {:?}", String::from_utf8_lossy(payload.as_bytes()));
            }
        }
    }
    println!("{sent} messages exchanged");
    Ok(())
}
