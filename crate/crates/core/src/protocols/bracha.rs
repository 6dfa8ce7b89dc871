//! Bracha's broadcast: MSG, then ECHO(m) and ACC(m) carrying the full
//! payload. Same thresholds as H-BRB[3f+1] without the REQ/FWD path, since
//! every ECHO and ACC already carries `m`.

use std::any::Any;

use crate::automaton::{Action, Automaton, Event, InstanceState, Instances};
use crate::wire::{Body, Instance, Kind, NodeId, Payload, SeqIndex, WireMessage};

use super::common::{deliver, Ctx};
use super::Thresholds;

/// Bracha state machine for one message namespace. Also used as the nested
/// hash broadcast of EC-BRB[4f+1].
pub(crate) struct BrachaCore {
    ctx: Ctx,
    instance: Instance,
    inst: Instances<InstanceState>,
}

impl BrachaCore {
    pub fn new(ctx: Ctx, instance: Instance) -> Self {
        BrachaCore { ctx, instance, inst: Instances::new() }
    }

    fn wire(&self, kind: Kind, s: NodeId, h: SeqIndex, m: Payload) -> WireMessage {
        WireMessage::new(kind, s, h, Body::Payload(m)).with_instance(self.instance)
    }

    pub fn broadcast(&self, m: Payload, h: SeqIndex, out: &mut Vec<Action>) {
        self.ctx.send_all(self.wire(Kind::Msg, self.ctx.me, h, m), out);
    }

    /// Processes one message of this namespace. Deliveries are appended to
    /// `out` as `Action::Deliver`.
    pub fn receive(&mut self, from: NodeId, msg: WireMessage, out: &mut Vec<Action>) {
        let (s, h) = (msg.source, msg.h);
        if msg.instance != self.instance || s >= self.ctx.n {
            return;
        }
        let Body::Payload(m) = msg.body else {
            return;
        };
        let ctx = self.ctx;
        let d = (ctx.hash)(m.as_bytes());
        let st = self.inst.entry((s, h)).or_default();
        match msg.kind {
            Kind::Msg if from == s => {
                if st.msg_received {
                    return;
                }
                st.msg_received = true;
                st.msg_set.entry(d).or_insert_with(|| m.clone());
                st.count_once(Kind::Echo, d, ctx.me);
                if st.mark_sent(Kind::Echo) {
                    let echo = WireMessage::new(Kind::Echo, s, h, Body::Payload(m)).with_instance(self.instance);
                    ctx.send_all(echo, out);
                }
            }
            Kind::Echo | Kind::Acc => {
                if !st.count_once(msg.kind, d, from) {
                    return;
                }
                st.msg_set.entry(d).or_insert(m);
                self.check(s, h, d, out);
            }
            _ => {}
        }
    }

    fn check(&mut self, s: NodeId, h: SeqIndex, d: crate::hashing::Digest, out: &mut Vec<Action>) {
        let ctx = self.ctx;
        let instance = self.instance;
        let st = self.inst.get_mut(&(s, h)).unwrap();
        let m = st.msg_set[&d].clone();
        let echoes = st.counter(Kind::Echo, &d);
        let accs = st.counter(Kind::Acc, &d);
        if echoes > ctx.f && st.mark_sent(Kind::Echo) {
            ctx.send_all(WireMessage::new(Kind::Echo, s, h, Body::Payload(m.clone())).with_instance(instance), out);
        }
        if (echoes >= ctx.quorum() || accs > ctx.f) && st.mark_sent(Kind::Acc) {
            ctx.send_all(WireMessage::new(Kind::Acc, s, h, Body::Payload(m.clone())).with_instance(instance), out);
        }
        if accs >= ctx.quorum() {
            deliver(st, s, h, &m, out);
        }
    }

    pub fn state(&self, s: NodeId, h: SeqIndex) -> Option<&InstanceState> {
        self.inst.get(&(s, h))
    }
}

pub struct Bracha {
    core: BrachaCore,
}

impl Bracha {
    pub(crate) fn new(ctx: Ctx) -> Self {
        Bracha { core: BrachaCore::new(ctx, Instance::Main) }
    }

    pub fn thresholds(&self) -> Thresholds {
        self.core.ctx.thresholds()
    }

    pub fn state(&self, s: NodeId, h: SeqIndex) -> Option<&InstanceState> {
        self.core.state(s, h)
    }
}

impl Automaton for Bracha {
    fn id(&self) -> NodeId {
        self.core.ctx.me
    }

    fn handle(&mut self, event: Event) -> Vec<Action> {
        let mut out = Vec::new();
        match event {
            Event::BroadcastRequest { payload, h } => self.core.broadcast(payload, h, &mut out),
            Event::Receive { from, msg } => self.core.receive(from, msg, &mut out),
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
        make_automaton(ProtocolConfig::new(ProtocolKind::Bracha, 4, 1, me)).unwrap()
    }

    fn msg(kind: Kind) -> WireMessage {
        WireMessage::new(kind, 0, 0, Body::Payload("m".into()))
    }

    fn sends(acts: &[Action], kind: Kind) -> usize {
        acts.iter().filter(|a| matches!(a, Action::Send { msg, .. } if msg.kind == kind)).count()
    }

    #[test]
    fn n_minus_f_echoes_trigger_acc() {
        let mut a = node(1);
        a.handle(Event::Receive { from: 0, msg: msg(Kind::Msg) });
        a.handle(Event::Receive { from: 0, msg: msg(Kind::Echo) });
        let acts = a.handle(Event::Receive { from: 2, msg: msg(Kind::Echo) });
        // self (counted on MSG) + 0 + 2 = 3 = n - f
        assert_eq!(sends(&acts, Kind::Acc), 4);
    }

    #[test]
    fn f_plus_1_accs_trigger_acc() {
        let mut a = node(1);
        a.handle(Event::Receive { from: 2, msg: msg(Kind::Acc) });
        let acts = a.handle(Event::Receive { from: 3, msg: msg(Kind::Acc) });
        assert_eq!(sends(&acts, Kind::Acc), 4);
        // ECHO amplification counts ECHOs only
        assert_eq!(sends(&acts, Kind::Echo), 0);
    }

    #[test]
    fn n_minus_f_accs_deliver() {
        let mut a = node(1);
        for j in [0, 2] {
            a.handle(Event::Receive { from: j, msg: msg(Kind::Acc) });
        }
        let acts = a.handle(Event::Receive { from: 3, msg: msg(Kind::Acc) });
        assert_eq!(acts.iter().filter(|a| a.is_deliver()).count(), 1);
    }
}
