//! H-BRB[3f+1]: Bracha's three phases with ECHO and ACC carrying only the
//! digest. A node that sees f+1 ACCs for an unknown digest asks exactly
//! those f+1 nodes for the payload.

use std::any::Any;

use crate::automaton::{Action, Automaton, Event, InstanceState, Instances};
use crate::hashing::Digest;
use crate::wire::{Body, Instance, Kind, NodeId, SeqIndex, WireMessage};

use super::common::{accept_forward, answer_request, check_three_phase, request, Ctx};
use super::Thresholds;

pub struct HBrb3 {
    ctx: Ctx,
    inst: Instances<InstanceState>,
}

impl HBrb3 {
    pub(crate) fn new(ctx: Ctx) -> Self {
        HBrb3 { ctx, inst: Instances::new() }
    }

    pub fn thresholds(&self) -> Thresholds {
        self.ctx.thresholds()
    }

    pub fn state(&self, s: NodeId, h: SeqIndex) -> Option<&InstanceState> {
        self.inst.get(&(s, h))
    }

    fn check(&mut self, s: NodeId, h: SeqIndex, d: Digest, out: &mut Vec<Action>) {
        let st = self.inst.get_mut(&(s, h)).unwrap();
        check_three_phase(&self.ctx, st, s, h, d, |_| Some(Body::Digest(d)), out);
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
                if st.count_once(Kind::Echo, d, from) {
                    self.check(s, h, d, out);
                }
            }
            (Kind::Acc, Body::Digest(d)) => {
                if !st.count_once(Kind::Acc, d, from) {
                    return;
                }
                if st.counter(Kind::Acc, &d) == ctx.f + 1 && !st.knows(&d) {
                    let targets = st.supporters(Kind::Acc, &d).to_vec();
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

impl Automaton for HBrb3 {
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
    use crate::wire::Payload;

    fn node(me: NodeId) -> Box<dyn Automaton> {
        make_automaton(ProtocolConfig::new(ProtocolKind::HBrb3f1, 4, 1, me)).unwrap()
    }

    fn recv(a: &mut Box<dyn Automaton>, from: NodeId, kind: Kind, body: Body) -> Vec<Action> {
        a.handle(Event::Receive { from, msg: WireMessage::new(kind, 0, 0, body) })
    }

    fn sent_to(acts: &[Action], kind: Kind) -> Vec<NodeId> {
        acts.iter()
            .filter_map(|a| match a {
                Action::Send { to, msg } if msg.kind == kind => Some(*to),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn msg_from_source_echoes_digest() {
        let mut a = node(1);
        let acts = recv(&mut a, 0, Kind::Msg, Body::Payload("m".into()));
        assert_eq!(sent_to(&acts, Kind::Echo), vec![0, 1, 2, 3]);
        let h = a.as_any().downcast_ref::<HBrb3>().unwrap();
        let st = h.state(0, 0).unwrap();
        assert!(st.knows(&digest(b"m")));
        assert_eq!(st.counter(Kind::Echo, &digest(b"m")), 1);
        for act in &acts {
            if let Action::Send { msg, .. } = act {
                assert_eq!(msg.body, Body::Digest(digest(b"m")));
            }
        }
    }

    #[test]
    fn msg_not_from_source_dropped() {
        let mut a = node(1);
        assert!(recv(&mut a, 2, Kind::Msg, Body::Payload("m".into())).is_empty());
    }

    #[test]
    fn second_acc_for_unknown_digest_requests_from_those_two() {
        let mut a = node(1);
        let d = digest(b"m");
        assert!(recv(&mut a, 3, Kind::Acc, Body::Digest(d)).is_empty());
        let acts = recv(&mut a, 2, Kind::Acc, Body::Digest(d));
        assert_eq!(sent_to(&acts, Kind::Req), vec![3, 2]);
    }

    #[test]
    fn fwd_from_unasked_node_dropped() {
        let mut a = node(1);
        let d = digest(b"m");
        recv(&mut a, 3, Kind::Acc, Body::Digest(d));
        recv(&mut a, 2, Kind::Acc, Body::Digest(d));
        assert!(recv(&mut a, 0, Kind::Fwd, Body::Payload("m".into())).is_empty());
        let h = a.as_any().downcast_ref::<HBrb3>().unwrap();
        assert!(!h.state(0, 0).unwrap().knows(&d));
    }

    #[test]
    fn fwd_with_wrong_payload_dropped() {
        let mut a = node(1);
        let d = digest(b"m");
        recv(&mut a, 3, Kind::Acc, Body::Digest(d));
        recv(&mut a, 2, Kind::Acc, Body::Digest(d));
        assert!(recv(&mut a, 3, Kind::Fwd, Body::Payload("other".into())).is_empty());
        // f+1 ACCs plus the payload: relay ACC; one more ACC delivers
        let acts = recv(&mut a, 3, Kind::Fwd, Body::Payload("m".into()));
        assert_eq!(sent_to(&acts, Kind::Acc).len(), 4);
        let acts = recv(&mut a, 0, Kind::Acc, Body::Digest(d));
        assert!(acts.iter().any(|a| matches!(a, Action::Deliver { payload, .. } if *payload == Payload::from("m"))));
    }

    #[test]
    fn req_answered_once_per_sender() {
        let mut a = node(1);
        recv(&mut a, 0, Kind::Msg, Body::Payload("m".into()));
        let d = digest(b"m");
        assert_eq!(sent_to(&recv(&mut a, 2, Kind::Req, Body::Digest(d)), Kind::Fwd), vec![2]);
        assert!(recv(&mut a, 2, Kind::Req, Body::Digest(d)).is_empty());
    }
}
