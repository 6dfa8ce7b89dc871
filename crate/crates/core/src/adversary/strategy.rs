use std::collections::BTreeMap;

use bytes::Bytes;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{encode_element, CodeParams, CodedElement};
use crate::hashing::{Digest, HashFn};
use crate::wire::{Body, Instance, Kind, NodeId, Payload, WireMessage};

/// What a strategy may know about its node.
#[derive(Debug, Clone, Copy)]
pub struct AdversaryCtx {
    pub n: usize,
    pub f: usize,
    pub me: NodeId,
    pub code: Option<CodeParams>,
    pub hash: HashFn,
}

/// A filter over the outgoing messages of one faulty node. The node's
/// automaton keeps running; the strategy decides what leaves it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdversaryStrategy {
    /// Sends normally for the first `at_step` messages, then nothing.
    Crash {
        at_step: u64,
    },
    Silent,
    /// As source, sends the listed recipients `MSG`s built from an
    /// alternative payload; everything else is sent honestly.
    EquivocatingSource {
        partition: BTreeMap<NodeId, Payload>,
    },
    /// Mutates the body of every outgoing message.
    CorruptRelay {
        seed: u64,
    },
    /// Silent; a script injects this node's traffic directly.
    ColludingScript {
        script: String,
        role: String,
    },
}

impl AdversaryStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            AdversaryStrategy::Crash { .. } => "crash",
            AdversaryStrategy::Silent => "silent",
            AdversaryStrategy::EquivocatingSource { .. } => "equivocating-source",
            AdversaryStrategy::CorruptRelay { .. } => "corrupt-relay",
            AdversaryStrategy::ColludingScript { .. } => "colluding-script",
        }
    }

    /// Maps the `step`-th outgoing message of `ctx.me` to what is actually sent.
    pub fn apply(&self, ctx: &AdversaryCtx, step: u64, to: NodeId, msg: WireMessage) -> Option<WireMessage> {
        match self {
            AdversaryStrategy::Crash { at_step } => (step < *at_step).then_some(msg),
            AdversaryStrategy::Silent | AdversaryStrategy::ColludingScript { .. } => None,
            AdversaryStrategy::EquivocatingSource { partition } => {
                if msg.kind != Kind::Msg || msg.source != ctx.me {
                    return Some(msg);
                }
                match partition.get(&to) {
                    Some(alt) => Some(equivocate(ctx, msg, alt)),
                    None => Some(msg),
                }
            }
            AdversaryStrategy::CorruptRelay { seed } => {
                let s = seed ^ (to as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ step.rotate_left(32);
                Some(corrupt_body(msg, s))
            }
        }
    }
}

fn equivocate(ctx: &AdversaryCtx, mut msg: WireMessage, alt: &Payload) -> WireMessage {
    let element = |index: u8| ctx.code.and_then(|p| encode_element(alt.as_bytes(), p, index as usize).ok());
    msg.body = match (msg.instance, msg.body) {
        (Instance::HashRb, Body::Payload(_)) => {
            Body::Payload(Payload::new(Bytes::copy_from_slice((ctx.hash)(alt.as_bytes()).as_bytes())))
        }
        (_, Body::Payload(_)) => Body::Payload(alt.clone()),
        (_, Body::Element(e)) => Body::Element(element(e.index).unwrap_or(e)),
        (_, Body::DigestElement(d, e)) => match element(e.index) {
            Some(c) => Body::DigestElement((ctx.hash)(alt.as_bytes()), c),
            None => Body::DigestElement(d, e),
        },
        (_, body) => body,
    };
    msg
}

fn flip(bytes: &[u8], seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = bytes.to_vec();
    if !out.is_empty() {
        let i = rng.gen_range(0..out.len());
        out[i] ^= rng.gen_range(1..=255u8);
    }
    out
}

/// Deterministic payload mutation differing in one byte.
pub fn corrupt_payload(p: &Payload, seed: u64) -> Payload {
    Payload::from(flip(p.as_bytes(), seed))
}

/// Deterministic mutation of an element that keeps its index and differs
/// from the input.
pub fn corrupt_element(e: &CodedElement, seed: u64) -> CodedElement {
    if e.data.is_empty() {
        return CodedElement::new(e.index, Bytes::new(), e.claimed_len ^ 1);
    }
    CodedElement::new(e.index, flip(&e.data, seed), e.claimed_len)
}

fn corrupt_digest(d: &Digest, seed: u64) -> Digest {
    Digest::from_slice(&flip(d.as_bytes(), seed)).unwrap()
}

/// Mutates body bytes only; the header (kind, instance, source, h) and every
/// length field stay intact.
fn corrupt_body(mut msg: WireMessage, seed: u64) -> WireMessage {
    msg.body = match msg.body {
        Body::Payload(p) => Body::Payload(corrupt_payload(&p, seed)),
        Body::Digest(d) => Body::Digest(corrupt_digest(&d, seed)),
        Body::Element(e) => Body::Element(corrupt_element(&e, seed)),
        Body::DigestElement(d, e) => Body::DigestElement(d, corrupt_element(&e, seed)),
        Body::PayloadDigest(p, d) => Body::PayloadDigest(corrupt_payload(&p, seed), d),
    };
    msg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::encode;
    use crate::hashing::digest;
    use crate::wire::encode_envelope;
    use proptest::prelude::*;

    fn ctx(code: Option<CodeParams>) -> AdversaryCtx {
        AdversaryCtx { n: 4, f: 1, me: 0, code, hash: digest }
    }

    proptest! {
        #[test]
        fn corrupt_element_differs_and_is_deterministic(data in proptest::collection::vec(any::<u8>(), 0..64), idx in 1u8..20, seed in any::<u64>()) {
            let e = CodedElement::new(idx, data, 7);
            let c = corrupt_element(&e, seed);
            prop_assert_ne!(&c, &e);
            prop_assert_eq!(c.index, e.index);
            prop_assert_eq!(c.data.len(), e.data.len());
            prop_assert_eq!(corrupt_element(&e, seed), c);
        }
    }

    #[test]
    fn crash_after_steps() {
        let s = AdversaryStrategy::Crash { at_step: 2 };
        let m = WireMessage::new(Kind::Echo, 0, 0, Body::Digest(digest(b"x")));
        let sent: Vec<bool> = (0..4).map(|i| s.apply(&ctx(None), i, 1, m.clone()).is_some()).collect();
        assert_eq!(sent, [true, true, false, false]);
    }

    #[test]
    fn equivocation_rewrites_msg_bodies() {
        let p = CodeParams::new(4, 2).unwrap();
        let alt = Payload::from("alt");
        let s = AdversaryStrategy::EquivocatingSource { partition: [(2, alt.clone())].into() };
        let els = encode(b"orig", p).unwrap();
        let m = WireMessage::new(Kind::Msg, 0, 0, Body::DigestElement(digest(b"orig"), els[2].clone()));
        let out = s.apply(&ctx(Some(p)), 0, 2, m.clone()).unwrap();
        let want = encode_element(b"alt", p, 3).unwrap();
        assert_eq!(out.body, Body::DigestElement(digest(b"alt"), want));
        assert_eq!(s.apply(&ctx(Some(p)), 0, 1, m.clone()).unwrap(), m);

        let nested = WireMessage::new(Kind::Msg, 0, 0, Body::Payload(Payload::from(vec![0u8; 32])))
            .with_instance(Instance::HashRb);
        let out = s.apply(&ctx(Some(p)), 0, 2, nested).unwrap();
        assert_eq!(out.body, Body::Payload(Payload::from(digest(b"alt").0.to_vec())));
    }

    #[test]
    fn corrupt_relay_keeps_header() {
        let s = AdversaryStrategy::CorruptRelay { seed: 5 };
        let m = WireMessage::new(Kind::Acc, 3, 9, Body::Digest(digest(b"x")));
        let out = s.apply(&ctx(None), 0, 1, m.clone()).unwrap();
        assert_ne!(out, m);
        let (a, b) = (encode_envelope(&m), encode_envelope(&out));
        assert_eq!(a[..crate::wire::HEADER_LEN], b[..crate::wire::HEADER_LEN]);
        assert_eq!(a.len(), b.len());
    }
}
