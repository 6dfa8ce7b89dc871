//! H-BRB[5f+1]: a single digest-carrying ECHO phase. ECHO is amplified at
//! n-2f matching ECHOs, the payload is requested from the first f+1 ECHO
//! senders of an unknown digest, and a node delivers at n-f ECHOs.
//!
//! A node echoes at most one digest per instance. If a faulty source sends
//! one node both `MSG(m')` and `ECHO(H(m'))` while everyone else gets `m`,
//! that node collects only n-f-1 ECHOs for `H(m)` and never delivers even
//! though the others do.

use std::any::Any;

use crate::automaton::{Action, Automaton, Event, InstanceState, Instances};
use crate::hashing::Digest;
use crate::wire::{Body, Instance, Kind, NodeId, SeqIndex, WireMessage};

use super::common::{accept_forward, answer_request, deliver, request, Ctx};
use super::Thresholds;

pub struct HBrb5 {
    ctx: Ctx,
    inst: Instances<InstanceState>,
}

impl HBrb5 {
    pub(crate) fn new(ctx: Ctx) -> Self {
        HBrb5 { ctx, inst: Instances::new() }
    }

    pub fn thresholds(&self) -> Thresholds {
        self.ctx.thresholds()
    }

    pub fn state(&self, s: NodeId, h: SeqIndex) -> Option<&InstanceState> {
        self.inst.get(&(s, h))
    }

    fn check(&mut self, s: NodeId, h: SeqIndex, d: Digest, out: &mut Vec<Action>) {
        let ctx = self.ctx;
        let st = self.inst.get_mut(&(s, h)).unwrap();
        let Some(m) = st.msg_set.get(&d).cloned() else {
            return;
        };
        let echoes = st.counter(Kind::Echo, &d);
        if echoes >= ctx.n.saturating_sub(2 * ctx.f) && st.mark_sent(Kind::Echo) {
            ctx.send_all(WireMessage::new(Kind::Echo, s, h, Body::Digest(d)), out);
        }
        if st.counter(Kind::Echo, &d) >= ctx.quorum() {
            deliver(st, s, h, &m, out);
        }
    }

    fn receive(&mut self, from: NodeId, msg: WireMessage, out: &mut Vec<Action>) {
        let (s, h) = (msg.source, msg.h);
        if msg.instance != Instance::Main || s >= self.ctx.n {
            return;
        }
        let ctx = self.ctx;
        let st = self.inst.entry((s, h)).or_default();
        match (msg.kind, msg.body) {
            (Kind::Msg, Body::Payload(m)) if from == s => {
                if st.msg_received {
                    return;
                }
                st.msg_received = true;
                let d = (ctx.hash)(m.as_bytes());
                st.msg_set.entry(d).or_insert(m);
                st.count_once(Kind::Echo, d, ctx.me);
                if st.mark_sent(Kind::Echo) {
                    ctx.send_all(WireMessage::new(Kind::Echo, s, h, Body::Digest(d)), out);
                }
            }
            (Kind::Echo, Body::Digest(d)) => {
                if !st.count_once(Kind::Echo, d, from) {
                    return;
                }
                if st.counter(Kind::Echo, &d) == ctx.f + 1 && !st.knows(&d) {
                    let targets = st.supporters(Kind::Echo, &d).to_vec();
                    request(st, s, h, d, &targets, out);
                }
                self.check(s, h, d, out);
            }
            (Kind::Req, Body::Digest(d)) => {
                answer_request(st, s, h, from, d, |m, _| Body::Payload(m.clone()), out);
            }
            (Kind::Fwd, Body::Payload(m)) => {
                let d = (ctx.hash)(m.as_bytes());
                if accept_forward(st, from, m, d) {
                    self.check(s, h, d, out);
                }
            }
            _ => {}
        }
    }
}

impl Automaton for HBrb5 {
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
            Event::Receive { from, msg } => self.receive(from, msg, &mut out),
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
    use crate::hashing::digest;
    use crate::protocols::{make_automaton, ProtocolConfig, ProtocolKind};

    fn node(me: NodeId) -> Box<dyn Automaton> {
        make_automaton(ProtocolConfig::new(ProtocolKind::HBrb5f1, 6, 1, me)).unwrap()
    }

    fn recv(a: &mut Box<dyn Automaton>, from: NodeId, kind: Kind, body: Body) -> Vec<Action> {
        a.handle(Event::Receive { from, msg: WireMessage::new(kind, 0, 0, body) })
    }

    fn count(acts: &[Action], kind: Kind) -> usize {
        acts.iter().filter(|a| matches!(a, Action::Send { msg, .. } if msg.kind == kind)).count()
    }

    #[test]
    fn five_echoes_with_payload_deliver() {
        let mut a = node(1);
        recv(&mut a, 0, Kind::Msg, Body::Payload("m".into()));
        let d = digest(b"m");
        let mut delivered = 0;
        for j in [0, 2, 3, 4] {
            delivered += recv(&mut a, j, Kind::Echo, Body::Digest(d)).iter().filter(|x| x.is_deliver()).count();
        }
        assert_eq!(delivered, 1);
    }

    #[test]
    fn n_minus_2f_echoes_amplify() {
        let mut a = node(1);
        let d = digest(b"m");
        recv(&mut a, 2, Kind::Echo, Body::Digest(d));
        recv(&mut a, 3, Kind::Echo, Body::Digest(d));
        // REQ went out at f+1; the FWD makes the payload known
        recv(&mut a, 2, Kind::Fwd, Body::Payload("m".into()));
        recv(&mut a, 4, Kind::Echo, Body::Digest(d));
        let acts = recv(&mut a, 5, Kind::Echo, Body::Digest(d));
        assert_eq!(count(&acts, Kind::Echo), 6);
    }

    #[test]
    fn f_plus_1_echoes_for_unknown_digest_request() {
        let mut a = node(1);
        let d = digest(b"m");
        recv(&mut a, 4, Kind::Echo, Body::Digest(d));
        let acts = recv(&mut a, 5, Kind::Echo, Body::Digest(d));
        assert_eq!(count(&acts, Kind::Req), 2);
    }

    #[test]
    fn echoed_forgery_stalls_the_node() {
        // faulty source 0 shows node 1 m' with a matching ECHO, nodes 2..5 see m
        let mut a = node(1);
        recv(&mut a, 0, Kind::Msg, Body::Payload("m'".into()));
        recv(&mut a, 0, Kind::Echo, Body::Digest(digest(b"m'")));
        let d = digest(b"m");
        let mut acts = Vec::new();
        for j in 2..6 {
            acts.extend(recv(&mut a, j, Kind::Echo, Body::Digest(d)));
        }
        acts.extend(recv(&mut a, 2, Kind::Fwd, Body::Payload("m".into())));
        let st = a.as_any().downcast_ref::<HBrb5>().unwrap().state(0, 0).unwrap();
        assert!(st.knows(&d));
        assert_eq!(st.counter(Kind::Echo, &d), 4);
        assert!(!acts.iter().any(Action::is_deliver));
        assert_eq!(count(&acts, Kind::Echo), 0);
    }
}
