//! Erasure-coded crash-tolerant broadcast.
//!
//! The source sends coded element `c_i` to node `i`; every node echoes its
//! element to all. The first time a node holds `k` elements it decodes,
//! delivers, and sends `ACC(m)` to everyone so that a node whose elements
//! went missing with a crashed source still delivers.

use std::any::Any;
use std::collections::BTreeMap;

use crate::automaton::{Action, Automaton, Event, Instances};
use crate::codec::{decode_erasure, encode, CodeParams, CodedElement};
use crate::wire::{Body, Instance, Kind, NodeId, Payload, WireMessage};

use super::common::Ctx;

#[derive(Debug, Default)]
struct State {
    msg_received: bool,
    code_set: BTreeMap<u8, CodedElement>,
    decoded: bool,
    delivered: bool,
}

pub struct EcCrb {
    ctx: Ctx,
    params: CodeParams,
    inst: Instances<State>,
}

impl EcCrb {
    pub(crate) fn new(ctx: Ctx, params: CodeParams) -> Self {
        EcCrb { ctx, params, inst: Instances::new() }
    }

    pub fn params(&self) -> CodeParams {
        self.params
    }

    fn receive(&mut self, from: NodeId, msg: WireMessage, out: &mut Vec<Action>) {
        let (s, h) = (msg.source, msg.h);
        if msg.instance != Instance::Main || s >= self.ctx.n {
            return;
        }
        let me = self.ctx.me;
        let st = self.inst.entry((s, h)).or_default();
        match (msg.kind, msg.body) {
            (Kind::Msg, Body::Element(c)) if from == s && c.index as usize == me + 1 => {
                if st.msg_received {
                    return;
                }
                st.msg_received = true;
                st.code_set.entry(c.index).or_insert_with(|| c.clone());
                self.ctx.send_all(WireMessage::new(Kind::Echo, s, h, Body::Element(c)), out);
            }
            (Kind::Echo, Body::Element(c)) if c.index as usize == from + 1 => {
                st.code_set.entry(c.index).or_insert(c);
                if st.decoded || st.code_set.len() < self.params.k() {
                    return;
                }
                st.decoded = true;
                let elements: Vec<CodedElement> = st.code_set.values().cloned().collect();
                let len = elements[0].claimed_len as usize;
                match decode_erasure(&elements, self.params, len) {
                    Ok(m) if !m.is_empty() => {
                        let m = Payload::from(m);
                        st.delivered = true;
                        out.push(Action::Deliver { source: s, payload: m.clone(), h });
                        self.ctx.send_all(WireMessage::new(Kind::Acc, s, h, Body::Payload(m)), out);
                    }
                    Ok(_) => log::warn!("node {me}: empty decode for ({s},{h})"),
                    Err(e) => log::warn!("node {me}: decode failure for ({s},{h}): {e}"),
                }
            }
            (Kind::Acc, Body::Payload(m)) => {
                if !st.delivered {
                    st.delivered = true;
                    out.push(Action::Deliver { source: s, payload: m, h });
                }
            }
            _ => {}
        }
    }
}

impl Automaton for EcCrb {
    fn id(&self) -> NodeId {
        self.ctx.me
    }

    fn handle(&mut self, event: Event) -> Vec<Action> {
        let mut out = Vec::new();
        match event {
            Event::BroadcastRequest { payload, h } => match encode(payload.as_bytes(), self.params) {
                Ok(elements) => {
                    for (i, c) in elements.into_iter().enumerate() {
                        out.push(Action::Send {
                            to: i,
                            msg: WireMessage::new(Kind::Msg, self.ctx.me, h, Body::Element(c)),
                        });
                    }
                }
                Err(e) => log::warn!("node {}: cannot encode broadcast {h}: {e}", self.ctx.me),
            },
            Event::Receive { from, msg } => self.receive(from, msg, &mut out),
        }
        out
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
