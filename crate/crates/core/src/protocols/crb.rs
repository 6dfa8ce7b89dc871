//! Flooding crash-tolerant broadcast: the first copy of MSG is delivered and
//! relayed to everyone (except by the source itself). One round, O(n^2 L) bits.

use std::any::Any;
use std::collections::BTreeSet;

use crate::automaton::{Action, Automaton, Event};
use crate::wire::{Body, Instance, Kind, NodeId, SeqIndex, WireMessage};

use super::common::Ctx;

pub struct CrbFlood {
    ctx: Ctx,
    seen: BTreeSet<(NodeId, SeqIndex)>,
}

impl CrbFlood {
    pub(crate) fn new(ctx: Ctx) -> Self {
        CrbFlood { ctx, seen: BTreeSet::new() }
    }
}

impl Automaton for CrbFlood {
    fn id(&self) -> NodeId {
        self.ctx.me
    }

    fn handle(&mut self, event: Event) -> Vec<Action> {
        let mut out = Vec::new();
        match event {
            Event::BroadcastRequest { payload, h } => {
                let msg = WireMessage::new(Kind::Msg, self.ctx.me, h, Body::Payload(payload));
                self.ctx.send_all(msg, &mut out);
            }
            Event::Receive { msg, .. } => {
                if msg.kind != Kind::Msg || msg.instance != Instance::Main || msg.source >= self.ctx.n {
                    return out;
                }
                let Body::Payload(m) = &msg.body else {
                    return out;
                };
                if self.seen.insert((msg.source, msg.h)) {
                    out.push(Action::Deliver { source: msg.source, payload: m.clone(), h: msg.h });
                    // the source's own MSG already went to everyone
                    if msg.source != self.ctx.me {
                        self.ctx.send_all(msg, &mut out);
                    }
                }
            }
        }
        out
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{make_automaton, ProtocolConfig, ProtocolKind};

    fn node(me: NodeId) -> Box<dyn Automaton> {
        make_automaton(ProtocolConfig::new(ProtocolKind::CrbFlood, 4, 1, me)).unwrap()
    }

    #[test]
    fn source_sends_to_all() {
        let acts = node(0).handle(Event::BroadcastRequest { payload: "m".into(), h: 0 });
        assert_eq!(acts.len(), 4);
        assert!(acts.iter().all(|a| matches!(a, Action::Send { msg, .. } if msg.kind == Kind::Msg)));
    }

    #[test]
    fn first_msg_relays_and_delivers_then_idempotent() {
        let mut a = node(2);
        let msg = WireMessage::new(Kind::Msg, 0, 0, Body::Payload("m".into()));
        let acts = a.handle(Event::Receive { from: 0, msg: msg.clone() });
        assert_eq!(acts.iter().filter(|a| a.is_deliver()).count(), 1);
        assert_eq!(acts.len(), 5);
        assert!(a.handle(Event::Receive { from: 1, msg }).is_empty());
    }
}
