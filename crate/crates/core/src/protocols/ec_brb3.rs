//! EC-BRB[3f+1]: H-BRB[3f+1] where each ECHO also carries the sender's
//! element of an [n, f+1] code. A node that sees f+1 ECHOs for a digest it
//! cannot match searches the (f+1)-subsets of the elements received with
//! that digest for one decoding to a payload with that digest.

use std::any::Any;
use std::collections::BTreeMap;

use crate::automaton::{Action, Automaton, Event, InstanceState, Instances};
use crate::codec::{encode, encode_element, CodeParams, CodedElement, SubsetSearch};
use crate::hashing::Digest;
use crate::wire::{Body, Instance, Kind, NodeId, Payload, SeqIndex, WireMessage};

use super::common::{accept_forward, answer_request, check_three_phase, request, Ctx};
use super::Thresholds;

#[derive(Default)]
struct State {
    base: InstanceState,
    searches: BTreeMap<Digest, SubsetSearch>,
}

pub struct EcBrb3 {
    ctx: Ctx,
    params: CodeParams,
    cap: u128,
    inst: Instances<State>,
    search_errors: usize,
}

impl EcBrb3 {
    pub(crate) fn new(ctx: Ctx, params: CodeParams, cap: u128) -> Self {
        EcBrb3 { ctx, params, cap, inst: Instances::new(), search_errors: 0 }
    }

    pub fn thresholds(&self) -> Thresholds {
        self.ctx.thresholds()
    }

    pub fn params(&self) -> CodeParams {
        self.params
    }

    pub fn state(&self, s: NodeId, h: SeqIndex) -> Option<&InstanceState> {
        self.inst.get(&(s, h)).map(|st| &st.base)
    }

    /// Subset searches abandoned because they exceeded the cap.
    pub fn search_errors(&self) -> usize {
        self.search_errors
    }

    fn check(&mut self, s: NodeId, h: SeqIndex, d: Digest, out: &mut Vec<Action>) {
        let (ctx, params) = (self.ctx, self.params);
        let st = &mut self.inst.get_mut(&(s, h)).unwrap().base;
        let own = |m: &Payload| match encode_element(m.as_bytes(), params, ctx.me + 1) {
            Ok(c) => Some(Body::DigestElement(d, c)),
            Err(e) => {
                log::warn!("node {}: cannot re-encode ({s},{h}): {e}", ctx.me);
                None
            }
        };
        check_three_phase(&ctx, st, s, h, d, own, out);
    }

    fn store(&mut self, s: NodeId, h: SeqIndex, d: Digest, c: CodedElement) {
        let (params, hash, cap) = (self.params, self.ctx.hash, self.cap);
        let st = self.inst.get_mut(&(s, h)).unwrap();
        st.searches.entry(d).or_insert_with(|| SubsetSearch::new(params, d, hash).with_cap(cap)).push(c);
    }

    fn search(&mut self, s: NodeId, h: SeqIndex, d: Digest) {
        let me = self.ctx.me;
        let st = self.inst.get_mut(&(s, h)).unwrap();
        let Some(search) = st.searches.get_mut(&d) else {
            return;
        };
        match search.search() {
            Ok(Some(m)) => {
                st.base.msg_set.entry(d).or_insert_with(|| Payload::from(m));
            }
            Ok(None) => {}
            Err(e) => {
                self.search_errors += 1;
                log::warn!("node {me}: subset search for ({s},{h}) abandoned: {e}");
            }
        }
    }

    fn receive(&mut self, from: NodeId, msg: WireMessage, out: &mut Vec<Action>) {
        let (s, h) = (msg.source, msg.h);
        if msg.instance != Instance::Main || s >= self.ctx.n {
            return;
        }
        let ctx = self.ctx;
        let st = &mut self.inst.entry((s, h)).or_default().base;
        match (msg.kind, msg.body) {
            (Kind::Msg, Body::DigestElement(d, c)) if from == s && c.index as usize == ctx.me + 1 => {
                if st.msg_received {
                    return;
                }
                st.msg_received = true;
                st.count_once(Kind::Echo, d, ctx.me);
                let echo = st.mark_sent(Kind::Echo);
                self.store(s, h, d, c.clone());
                if echo {
                    ctx.send_all(WireMessage::new(Kind::Echo, s, h, Body::DigestElement(d, c)), out);
                }
            }
            (Kind::Echo, Body::DigestElement(d, c)) if c.index as usize == from + 1 => {
                if !st.count_once(Kind::Echo, d, from) {
                    return;
                }
                let ready = st.counter(Kind::Echo, &d) > ctx.f && !st.knows(&d);
                self.store(s, h, d, c);
                if ready {
                    self.search(s, h, d);
                }
                self.check(s, h, d, out);
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

impl Automaton for EcBrb3 {
    fn id(&self) -> NodeId {
        self.ctx.me
    }

    fn handle(&mut self, event: Event) -> Vec<Action> {
        let mut out = Vec::new();
        match event {
            Event::BroadcastRequest { payload, h } => {
                let d = (self.ctx.hash)(payload.as_bytes());
                match encode(payload.as_bytes(), self.params) {
                    Ok(elements) => {
                        for (i, c) in elements.into_iter().enumerate() {
                            let msg = WireMessage::new(Kind::Msg, self.ctx.me, h, Body::DigestElement(d, c));
                            out.push(Action::Send { to: i, msg });
                        }
                    }
                    Err(e) => log::warn!("node {}: cannot encode broadcast {h}: {e}", self.ctx.me),
                }
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

    const M: &[u8] = b"erasure coded payload";

    fn node(me: NodeId) -> Box<dyn Automaton> {
        make_automaton(ProtocolConfig::new(ProtocolKind::EcBrb3f1, 4, 1, me)).unwrap()
    }

    fn elements() -> Vec<CodedElement> {
        encode(M, CodeParams::new(4, 2).unwrap()).unwrap()
    }

    fn echo(j: NodeId) -> WireMessage {
        WireMessage::new(Kind::Echo, 0, 0, Body::DigestElement(digest(M), elements()[j].clone()))
    }

    #[test]
    fn f_plus_1_echoes_recover_payload_and_echo_own_element() {
        let mut a = node(3);
        a.handle(Event::Receive { from: 0, msg: echo(0) });
        let acts = a.handle(Event::Receive { from: 1, msg: echo(1) });
        let st = a.as_any().downcast_ref::<EcBrb3>().unwrap().state(0, 0).unwrap();
        assert!(st.knows(&digest(M)));
        let echoes: Vec<_> = acts
            .iter()
            .filter_map(|x| match x {
                Action::Send { msg, .. } if msg.kind == Kind::Echo => Some(msg.body.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(echoes.len(), 4);
        assert_eq!(echoes[0], Body::DigestElement(digest(M), elements()[3].clone()));
    }

    #[test]
    fn element_at_wrong_position_ignored() {
        let mut a = node(3);
        let acts = a.handle(Event::Receive { from: 2, msg: echo(0) });
        assert!(acts.is_empty());
        let st = a.as_any().downcast_ref::<EcBrb3>().unwrap().state(0, 0).unwrap();
        assert_eq!(st.counter(Kind::Echo, &digest(M)), 0);
    }

    #[test]
    fn three_accs_with_known_payload_deliver() {
        let mut a = node(3);
        a.handle(Event::Receive { from: 0, msg: echo(0) });
        a.handle(Event::Receive { from: 1, msg: echo(1) });
        let acc = WireMessage::new(Kind::Acc, 0, 0, Body::Digest(digest(M)));
        let mut delivered = 0;
        for j in 0..3 {
            delivered +=
                a.handle(Event::Receive { from: j, msg: acc.clone() }).iter().filter(|x| x.is_deliver()).count();
        }
        assert_eq!(delivered, 1);
    }

    #[test]
    fn corrupted_elements_are_searched_around() {
        // n=7, f=2: three correct elements plus two corrupted ones
        let p = CodeParams::new(7, 3).unwrap();
        let els = encode(M, p).unwrap();
        let mut a = make_automaton(ProtocolConfig::new(ProtocolKind::EcBrb3f1, 7, 2, 6)).unwrap();
        for j in [0, 1, 2, 3, 4] {
            let mut c = els[j].clone();
            if j < 2 {
                c = crate::adversary::corrupt_element(&c, 11);
            }
            let msg = WireMessage::new(Kind::Echo, 0, 0, Body::DigestElement(digest(M), c));
            a.handle(Event::Receive { from: j, msg });
        }
        let st = a.as_any().downcast_ref::<EcBrb3>().unwrap().state(0, 0).unwrap();
        assert_eq!(st.msg_set.get(&digest(M)).map(|p| p.as_bytes()), Some(M));
    }
}
