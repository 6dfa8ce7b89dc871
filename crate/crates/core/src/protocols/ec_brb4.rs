//! EC-BRB[4f+1]: elements of an [n, n-3f] code are echoed by every node and
//! decoded with error correction once n-f have arrived; the digest travels
//! on a nested Bracha instance (instance tag `hash-rb`). A node sends
//! `ACC(H(m))` once it has both decoded `m` and accepted `H(m)` from the
//! nested instance, in either order.

use std::any::Any;
use std::collections::BTreeMap;

use crate::automaton::{Action, Automaton, Event, InstanceState, Instances};
use crate::codec::{decode_correcting, encode, CodeParams, CodedElement};
use crate::hashing::Digest;
use crate::wire::{Body, Instance, Kind, NodeId, Payload, SeqIndex, WireMessage};

use super::bracha::BrachaCore;
use super::common::{accept_forward, answer_request, deliver, request, Ctx};
use super::Thresholds;

#[derive(Default)]
struct State {
    base: InstanceState,
    code_set: BTreeMap<u8, CodedElement>,
    /// Digests for which REQ was sent from Check.
    requested: Vec<Digest>,
}

pub struct EcBrb4 {
    ctx: Ctx,
    params: CodeParams,
    hash_rb: BrachaCore,
    inst: Instances<State>,
    decode_attempts: u64,
}

/// Most common `claimed_len` among the elements; ties go to the smaller.
fn majority_len(code_set: &BTreeMap<u8, CodedElement>) -> usize {
    let mut votes: BTreeMap<u32, usize> = BTreeMap::new();
    for c in code_set.values() {
        *votes.entry(c.claimed_len).or_default() += 1;
    }
    votes.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map_or(0, |(len, _)| len as usize)
}

impl EcBrb4 {
    pub(crate) fn new(ctx: Ctx, params: CodeParams) -> Self {
        EcBrb4 {
            ctx,
            params,
            hash_rb: BrachaCore::new(ctx, Instance::HashRb),
            inst: Instances::new(),
            decode_attempts: 0,
        }
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

    pub fn decode_attempts(&self) -> u64 {
        self.decode_attempts
    }

    /// A decoded payload whose digest was accepted by the nested instance.
    fn matched(st: &InstanceState) -> Option<Digest> {
        st.hash_set.iter().find(|x| st.msg_set.contains_key(x)).copied()
    }

    fn try_decode(&mut self, s: NodeId, h: SeqIndex) {
        let (ctx, params) = (self.ctx, self.params);
        let st = self.inst.get_mut(&(s, h)).unwrap();
        if st.base.delivered || st.code_set.len() < ctx.quorum() || Self::matched(&st.base).is_some() {
            return;
        }
        // already decoded; a retry only helps once a different digest is accepted
        if st.base.hash_set.is_empty() && !st.base.msg_set.is_empty() {
            return;
        }
        let len = majority_len(&st.code_set);
        if len == 0 {
            return;
        }
        let elements: Vec<CodedElement> = st.code_set.values().cloned().collect();
        self.decode_attempts += 1;
        match decode_correcting(&elements, params, ctx.f, len) {
            Ok(m) => {
                let d = (ctx.hash)(&m);
                st.base.msg_set.entry(d).or_insert_with(|| Payload::from(m));
            }
            Err(e) => log::debug!("node {}: decode for ({s},{h}) pending: {e}", ctx.me),
        }
    }

    /// Sends ACC once a decoded payload matches an accepted digest.
    fn try_acc(&mut self, s: NodeId, h: SeqIndex, out: &mut Vec<Action>) {
        let st = &mut self.inst.get_mut(&(s, h)).unwrap().base;
        if let Some(d) = Self::matched(st) {
            if st.mark_sent(Kind::Acc) {
                self.ctx.send_all(WireMessage::new(Kind::Acc, s, h, Body::Digest(d)), out);
            }
        }
    }

    fn check(&mut self, s: NodeId, h: SeqIndex, out: &mut Vec<Action>) {
        let ctx = self.ctx;
        let st = self.inst.get_mut(&(s, h)).unwrap();
        let ready: Vec<Digest> =
            st.base.hash_set.iter().filter(|x| st.base.counter(Kind::Acc, x) >= ctx.quorum()).copied().collect();
        for x in ready {
            if let Some(m) = st.base.msg_set.get(&x).cloned() {
                deliver(&mut st.base, s, h, &m, out);
                return;
            }
            if !st.requested.contains(&x) {
                st.requested.push(x);
                let targets = st.base.supporters(Kind::Acc, &x).to_vec();
                request(&mut st.base, s, h, x, &targets, out);
            }
        }
    }

    fn on_hash_delivered(&mut self, s: NodeId, h: SeqIndex, p: &Payload, out: &mut Vec<Action>) {
        let Some(x) = Digest::from_slice(p.as_bytes()) else {
            return;
        };
        self.inst.entry((s, h)).or_default().base.hash_set.insert(x);
        self.try_decode(s, h);
        self.try_acc(s, h, out);
        self.check(s, h, out);
    }

    fn receive(&mut self, from: NodeId, msg: WireMessage, out: &mut Vec<Action>) {
        let (s, h) = (msg.source, msg.h);
        if s >= self.ctx.n {
            return;
        }
        if msg.instance == Instance::HashRb {
            let mut nested = Vec::new();
            self.hash_rb.receive(from, msg, &mut nested);
            for a in nested {
                match a {
                    Action::Deliver { source, payload, h } => self.on_hash_delivered(source, h, &payload, out),
                    send => out.push(send),
                }
            }
            return;
        }
        let ctx = self.ctx;
        let st = self.inst.entry((s, h)).or_default();
        match (msg.kind, msg.body) {
            (Kind::Msg, Body::Element(c)) if from == s && c.index as usize == ctx.me + 1 => {
                if st.base.msg_received {
                    return;
                }
                st.base.msg_received = true;
                st.code_set.entry(c.index).or_insert_with(|| c.clone());
                if st.base.mark_sent(Kind::Echo) {
                    ctx.send_all(WireMessage::new(Kind::Echo, s, h, Body::Element(c)), out);
                }
            }
            (Kind::Echo, Body::Element(c)) if c.index as usize == from + 1 => {
                if !st.base.count_once(Kind::Echo, Digest::default(), from) {
                    return;
                }
                st.code_set.entry(c.index).or_insert(c);
                self.try_decode(s, h);
                self.try_acc(s, h, out);
            }
            (Kind::Acc, Body::Digest(x)) => {
                if !st.base.count_once(Kind::Acc, x, from) {
                    return;
                }
                if st.base.counter(Kind::Acc, &x) == ctx.f + 1 && st.base.mark_sent(Kind::Acc) {
                    ctx.send_all(WireMessage::new(Kind::Acc, s, h, Body::Digest(x)), out);
                }
                self.check(s, h, out);
            }
            (Kind::Req, Body::Digest(x)) => {
                answer_request(&mut st.base, s, h, from, x, |m, d| Body::PayloadDigest(m.clone(), d), out);
            }
            (Kind::Fwd, Body::PayloadDigest(m, x)) => {
                if (ctx.hash)(m.as_bytes()) == x && accept_forward(&mut st.base, from, m, x) {
                    self.check(s, h, out);
                }
            }
            _ => {}
        }
    }
}

impl Automaton for EcBrb4 {
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
                        self.hash_rb.broadcast(Payload::from(d.as_bytes().to_vec()), h, &mut out);
                        for (i, c) in elements.into_iter().enumerate() {
                            let msg = WireMessage::new(Kind::Msg, self.ctx.me, h, Body::Element(c));
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
    use crate::adversary::corrupt_element;
    use crate::hashing::digest;
    use crate::protocols::{make_automaton, ProtocolConfig, ProtocolKind};

    const M: &[u8] = b"a payload long enough to split into four shards";

    fn node(me: NodeId) -> Box<dyn Automaton> {
        make_automaton(ProtocolConfig::new(ProtocolKind::EcBrb4f1, 13, 3, me)).unwrap()
    }

    fn acc_targets(acts: &[Action], kind: Kind) -> Vec<NodeId> {
        acts.iter()
            .filter_map(|a| match a {
                Action::Send { to, msg } if msg.kind == kind && msg.instance == Instance::Main => Some(*to),
                _ => None,
            })
            .collect()
    }

    /// Feeds the nested Bracha instance enough ACCs to accept `H(M)`.
    fn accept_hash(a: &mut Box<dyn Automaton>) -> Vec<Action> {
        let p = Payload::from(digest(M).as_bytes().to_vec());
        let mut acts = Vec::new();
        for j in 0..10 {
            let msg = WireMessage::new(Kind::Acc, 0, 0, Body::Payload(p.clone())).with_instance(Instance::HashRb);
            acts.extend(a.handle(Event::Receive { from: j, msg }));
        }
        acts
    }

    fn feed_elements(a: &mut Box<dyn Automaton>, corrupt: usize) -> Vec<Action> {
        let els = encode(M, CodeParams::new(13, 4).unwrap()).unwrap();
        let mut acts = Vec::new();
        for (j, c) in els.into_iter().enumerate().take(10) {
            let c = if j < corrupt { corrupt_element(&c, j as u64) } else { c };
            let msg = WireMessage::new(Kind::Echo, 0, 0, Body::Element(c));
            acts.extend(a.handle(Event::Receive { from: j, msg }));
        }
        acts
    }

    #[test]
    fn decode_with_three_corruptions_then_acc() {
        let mut a = node(12);
        accept_hash(&mut a);
        let acts = feed_elements(&mut a, 3);
        assert_eq!(acc_targets(&acts, Kind::Acc), (0..13).collect::<Vec<_>>());
    }

    #[test]
    fn acc_waits_for_nested_delivery() {
        let mut a = node(12);
        let acts = feed_elements(&mut a, 0);
        assert!(acc_targets(&acts, Kind::Acc).is_empty());
        let st = a.as_any().downcast_ref::<EcBrb4>().unwrap().state(0, 0).unwrap();
        assert!(st.knows(&digest(M)));
        let acts = accept_hash(&mut a);
        assert_eq!(acc_targets(&acts, Kind::Acc).len(), 13);
    }

    #[test]
    fn n_minus_f_accs_without_payload_request_from_them() {
        let mut a = node(12);
        accept_hash(&mut a);
        let mut acts = Vec::new();
        for j in 0..10 {
            let msg = WireMessage::new(Kind::Acc, 0, 0, Body::Digest(digest(M)));
            acts.extend(a.handle(Event::Receive { from: j, msg }));
        }
        assert_eq!(acc_targets(&acts, Kind::Req), (0..10).collect::<Vec<_>>());
        // answer from an asked node delivers
        let fwd = WireMessage::new(Kind::Fwd, 0, 0, Body::PayloadDigest(M.to_vec().into(), digest(M)));
        let acts = a.handle(Event::Receive { from: 4, msg: fwd });
        assert_eq!(acts.iter().filter(|x| x.is_deliver()).count(), 1);
    }

    #[test]
    fn majority_len_prefers_most_common() {
        let mut cs = BTreeMap::new();
        cs.insert(1, CodedElement::new(1, vec![0], 10));
        cs.insert(2, CodedElement::new(2, vec![0], 12));
        cs.insert(3, CodedElement::new(3, vec![0], 12));
        assert_eq!(majority_len(&cs), 12);
    }
}
