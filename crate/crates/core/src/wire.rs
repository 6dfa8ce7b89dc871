//! Identifiers, payloads and the message envelope.
//!
//! Envelope layout (all integers little-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 1    | kind: MSG=0 ECHO=1 ACC=2 REQ=3 FWD=4    |
//! | 1      | 1    | body tag (see [`Body`])                 |
//! | 2      | 1    | instance tag: 0 main, 1 hash-rb         |
//! | 3      | 4    | source id                               |
//! | 7      | 8    | sequence index h                        |
//! | 15     | 4    | body length                             |
//! | 19     | ..   | body                                    |
//!
//! Body encodings: a payload is its raw bytes; a digest is 32 bytes; a coded
//! element is `index (1) | claimed_len (4) | data`; `(Digest, Element)` and
//! `(Payload, Digest)` put the digest first, then the other part.
//!
//! Kind code 5 is reserved for the nested hash-broadcast accounting category
//! ([`StatKind::HashRb`]) and never appears on the wire; nested traffic is
//! identified by the instance tag instead.

use std::fmt;

use bytes::Bytes;
use thiserror::Error;

use crate::codec::{CodedElement, ELEMENT_OVERHEAD};
use crate::hashing::{Digest, DIGEST_LEN};

pub type NodeId = usize;
pub type SeqIndex = u64;

/// Fixed envelope header size in bytes.
pub const HEADER_LEN: usize = 19;

/// Application message. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Payload(Bytes);

impl Payload {
    pub fn new(bytes: impl Into<Bytes>) -> Self {
        Payload(bytes.into())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn bytes(&self) -> &Bytes {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head: String = self.0.iter().take(8).map(|b| format!("{b:02x}")).collect();
        write!(f, "Payload({}B {head}..)", self.0.len())
    }
}

impl From<Vec<u8>> for Payload {
    fn from(v: Vec<u8>) -> Self {
        Payload(v.into())
    }
}

impl From<&'static [u8]> for Payload {
    fn from(v: &'static [u8]) -> Self {
        Payload(Bytes::from_static(v))
    }
}

impl From<&'static str> for Payload {
    fn from(v: &'static str) -> Self {
        Payload(Bytes::from_static(v.as_bytes()))
    }
}

/// Message kinds that travel on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Msg,
    Echo,
    Acc,
    Req,
    Fwd,
}

impl Kind {
    pub const ALL: [Kind; 5] = [Kind::Msg, Kind::Echo, Kind::Acc, Kind::Req, Kind::Fwd];

    pub fn code(self) -> u8 {
        match self {
            Kind::Msg => 0,
            Kind::Echo => 1,
            Kind::Acc => 2,
            Kind::Req => 3,
            Kind::Fwd => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Msg => "MSG",
            Kind::Echo => "ECHO",
            Kind::Acc => "ACC",
            Kind::Req => "REQ",
            Kind::Fwd => "FWD",
        }
    }
}

/// Accounting category: the wire kind, or `HashRb` for any message of a
/// nested hash-broadcast instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StatKind {
    Msg,
    Echo,
    Acc,
    Req,
    Fwd,
    HashRb,
}

impl StatKind {
    pub const ALL: [StatKind; 6] =
        [StatKind::Msg, StatKind::Echo, StatKind::Acc, StatKind::Req, StatKind::Fwd, StatKind::HashRb];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            StatKind::Msg => "MSG",
            StatKind::Echo => "ECHO",
            StatKind::Acc => "ACC",
            StatKind::Req => "REQ",
            StatKind::Fwd => "FWD",
            StatKind::HashRb => "HASH_RB",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Instance {
    #[default]
    Main,
    HashRb,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Body {
    Payload(Payload),
    Digest(Digest),
    Element(CodedElement),
    DigestElement(Digest, CodedElement),
    PayloadDigest(Payload, Digest),
}

impl Body {
    fn tag(&self) -> u8 {
        match self {
            Body::Payload(_) => 0,
            Body::Digest(_) => 1,
            Body::Element(_) => 2,
            Body::DigestElement(..) => 3,
            Body::PayloadDigest(..) => 4,
        }
    }

    pub fn encoded_len(&self) -> usize {
        match self {
            Body::Payload(p) => p.len(),
            Body::Digest(_) => DIGEST_LEN,
            Body::Element(e) => e.encoded_len(),
            Body::DigestElement(_, e) => DIGEST_LEN + e.encoded_len(),
            Body::PayloadDigest(p, _) => p.len() + DIGEST_LEN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WireMessage {
    pub kind: Kind,
    pub instance: Instance,
    pub source: NodeId,
    pub h: SeqIndex,
    pub body: Body,
}

impl WireMessage {
    pub fn new(kind: Kind, source: NodeId, h: SeqIndex, body: Body) -> Self {
        WireMessage { kind, instance: Instance::Main, source, h, body }
    }

    pub fn with_instance(mut self, instance: Instance) -> Self {
        self.instance = instance;
        self
    }

    /// Whether the body variant is allowed for this kind.
    pub fn is_legal(&self) -> bool {
        legal(self.kind, self.body.tag())
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.body.encoded_len()
    }

    pub fn stat_kind(&self) -> StatKind {
        match (self.instance, self.kind) {
            (Instance::HashRb, _) => StatKind::HashRb,
            (_, Kind::Msg) => StatKind::Msg,
            (_, Kind::Echo) => StatKind::Echo,
            (_, Kind::Acc) => StatKind::Acc,
            (_, Kind::Req) => StatKind::Req,
            (_, Kind::Fwd) => StatKind::Fwd,
        }
    }

    /// Digest carried in the body, if any.
    pub fn digest(&self) -> Option<&Digest> {
        match &self.body {
            Body::Digest(d) | Body::DigestElement(d, _) | Body::PayloadDigest(_, d) => Some(d),
            _ => None,
        }
    }
}

fn legal(kind: Kind, tag: u8) -> bool {
    matches!(
        (kind, tag),
        (Kind::Msg, 0 | 2 | 3) | (Kind::Echo, 0..=3) | (Kind::Acc, 0 | 1) | (Kind::Req, 1) | (Kind::Fwd, 0 | 4)
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvelopeError {
    #[error("malformed envelope: {0}")]
    MalformedEnvelope(&'static str),
}

fn put_element(out: &mut Vec<u8>, e: &CodedElement) {
    out.push(e.index);
    out.extend_from_slice(&e.claimed_len.to_le_bytes());
    out.extend_from_slice(&e.data);
}

/// Serializes `msg`. The caller must only pass legal kind/body pairs.
pub fn encode_envelope(msg: &WireMessage) -> Vec<u8> {
    debug_assert!(msg.is_legal(), "illegal kind/body pair {:?}", msg.kind);
    let body_len = msg.body.encoded_len();
    let mut out = Vec::with_capacity(HEADER_LEN + body_len);
    out.push(msg.kind.code());
    out.push(msg.body.tag());
    out.push(match msg.instance {
        Instance::Main => 0,
        Instance::HashRb => 1,
    });
    out.extend_from_slice(&(msg.source as u32).to_le_bytes());
    out.extend_from_slice(&msg.h.to_le_bytes());
    out.extend_from_slice(&(body_len as u32).to_le_bytes());
    match &msg.body {
        Body::Payload(p) => out.extend_from_slice(p.as_bytes()),
        Body::Digest(d) => out.extend_from_slice(d.as_bytes()),
        Body::Element(e) => put_element(&mut out, e),
        Body::DigestElement(d, e) => {
            out.extend_from_slice(d.as_bytes());
            put_element(&mut out, e);
        }
        Body::PayloadDigest(p, d) => {
            out.extend_from_slice(d.as_bytes());
            out.extend_from_slice(p.as_bytes());
        }
    }
    out
}

fn take_element(b: &[u8]) -> Result<CodedElement, EnvelopeError> {
    if b.len() < ELEMENT_OVERHEAD {
        return Err(EnvelopeError::MalformedEnvelope("coded element shorter than its header"));
    }
    let claimed = u32::from_le_bytes(b[1..5].try_into().unwrap());
    Ok(CodedElement::new(b[0], Bytes::copy_from_slice(&b[5..]), claimed))
}

fn take_digest(b: &[u8]) -> Result<Digest, EnvelopeError> {
    Digest::from_slice(b).ok_or(EnvelopeError::MalformedEnvelope("digest body must be 32 bytes"))
}

fn take_payload(b: &[u8]) -> Result<Payload, EnvelopeError> {
    if b.is_empty() {
        return Err(EnvelopeError::MalformedEnvelope("empty payload"));
    }
    Ok(Payload::new(Bytes::copy_from_slice(b)))
}

pub fn decode_envelope(bytes: &[u8]) -> Result<WireMessage, EnvelopeError> {
    use EnvelopeError::MalformedEnvelope as Bad;
    if bytes.len() < HEADER_LEN {
        return Err(Bad("truncated header"));
    }
    let kind = match bytes[0] {
        0 => Kind::Msg,
        1 => Kind::Echo,
        2 => Kind::Acc,
        3 => Kind::Req,
        4 => Kind::Fwd,
        5 => return Err(Bad("kind 5 is reserved for accounting")),
        _ => return Err(Bad("unknown kind")),
    };
    let tag = bytes[1];
    if tag > 4 {
        return Err(Bad("unknown body tag"));
    }
    if !legal(kind, tag) {
        return Err(Bad("body variant not allowed for kind"));
    }
    let instance = match bytes[2] {
        0 => Instance::Main,
        1 => Instance::HashRb,
        _ => return Err(Bad("unknown instance tag")),
    };
    let source = u32::from_le_bytes(bytes[3..7].try_into().unwrap()) as NodeId;
    let h = u64::from_le_bytes(bytes[7..15].try_into().unwrap());
    let body_len = u32::from_le_bytes(bytes[15..19].try_into().unwrap()) as usize;
    let b = &bytes[HEADER_LEN..];
    if b.len() != body_len {
        return Err(Bad("body length does not match header"));
    }
    let body = match tag {
        0 => Body::Payload(take_payload(b)?),
        1 => Body::Digest(take_digest(b)?),
        2 => Body::Element(take_element(b)?),
        3 => {
            if b.len() < DIGEST_LEN {
                return Err(Bad("truncated digest"));
            }
            Body::DigestElement(take_digest(&b[..DIGEST_LEN])?, take_element(&b[DIGEST_LEN..])?)
        }
        _ => {
            if b.len() < DIGEST_LEN {
                return Err(Bad("truncated digest"));
            }
            Body::PayloadDigest(take_payload(&b[DIGEST_LEN..])?, take_digest(&b[..DIGEST_LEN])?)
        }
    };
    Ok(WireMessage { kind, instance, source, h, body })
}
