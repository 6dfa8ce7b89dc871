//! The witness strawman: a node witnesses `m` when it receives `m` from the
//! source (direct) or hears f+1 `witness(m)` (indirect), and delivers after
//! `deliver_threshold` witnesses. Witness messages travel as `ECHO(m)`.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};

use crate::automaton::{send_all, Action, Automaton, Event};
use crate::hashing::{digest, Digest, HashFn};
use crate::wire::{Body, Kind, NodeId, Payload, SeqIndex, WireMessage};

use super::AdversaryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WitnessConfig {
    pub n: usize,
    pub f: usize,
    pub deliver_threshold: usize,
    /// Allow witnessing more than one message per `(s, h)`.
    pub double_witness: bool,
}

impl WitnessConfig {
    pub fn new(n: usize, f: usize, deliver_threshold: usize) -> Result<Self, AdversaryError> {
        if deliver_threshold == 0 || deliver_threshold > n {
            return Err(AdversaryError::InvalidThreshold { threshold: deliver_threshold, n });
        }
        Ok(WitnessConfig { n, f, deliver_threshold, double_witness: false })
    }

    pub fn with_double_witness(mut self, on: bool) -> Self {
        self.double_witness = on;
        self
    }
}

#[derive(Debug, Default)]
struct State {
    witnesses: BTreeMap<Digest, BTreeSet<NodeId>>,
    witnessed: BTreeSet<Digest>,
    got_msg: bool,
    delivered: bool,
}

pub struct WitnessNode {
    cfg: WitnessConfig,
    me: NodeId,
    hash: HashFn,
    inst: BTreeMap<(NodeId, SeqIndex), State>,
}

impl WitnessNode {
    pub fn new(cfg: WitnessConfig, me: NodeId) -> Self {
        WitnessNode { cfg, me, hash: digest, inst: BTreeMap::new() }
    }

    /// Distinct senders of `witness(m)` for `(s, h)` received so far.
    pub fn witness_count(&self, s: NodeId, h: SeqIndex, m: &[u8]) -> usize {
        let d = (self.hash)(m);
        self.inst.get(&(s, h)).and_then(|st| st.witnesses.get(&d)).map_or(0, BTreeSet::len)
    }

    fn witness(&mut self, s: NodeId, h: SeqIndex, m: &Payload, out: &mut Vec<Action>) {
        let d = (self.hash)(m.as_bytes());
        let st = self.inst.entry((s, h)).or_default();
        if !self.cfg.double_witness && !st.witnessed.is_empty() {
            return;
        }
        if st.witnessed.insert(d) {
            send_all(self.cfg.n, &WireMessage::new(Kind::Echo, s, h, Body::Payload(m.clone())), out);
        }
    }
}

impl Automaton for WitnessNode {
    fn id(&self) -> NodeId {
        self.me
    }

    fn handle(&mut self, event: Event) -> Vec<Action> {
        let mut out = Vec::new();
        match event {
            Event::BroadcastRequest { payload, h } => {
                send_all(self.cfg.n, &WireMessage::new(Kind::Msg, self.me, h, Body::Payload(payload)), &mut out);
            }
            Event::Receive { from, msg } => {
                let (s, h) = (msg.source, msg.h);
                match (msg.kind, msg.body) {
                    (Kind::Msg, Body::Payload(m)) if from == s => {
                        let st = self.inst.entry((s, h)).or_default();
                        if !std::mem::replace(&mut st.got_msg, true) {
                            self.witness(s, h, &m, &mut out);
                        }
                    }
                    (Kind::Echo, Body::Payload(m)) => {
                        let d = (self.hash)(m.as_bytes());
                        let st = self.inst.entry((s, h)).or_default();
                        let senders = st.witnesses.entry(d).or_default();
                        if !senders.insert(from) {
                            return out;
                        }
                        let count = senders.len();
                        if count == self.cfg.f + 1 {
                            self.witness(s, h, &m, &mut out);
                        }
                        let st = self.inst.get_mut(&(s, h)).unwrap();
                        if count >= self.cfg.deliver_threshold && !st.delivered {
                            st.delivered = true;
                            out.push(Action::Deliver { source: s, payload: m, h });
                        }
                    }
                    _ => {}
                }
            }
        }
        out
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
