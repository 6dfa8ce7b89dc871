//! The protocol-automaton interface and per-(source, index) bookkeeping.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};

use crate::hashing::Digest;
use crate::wire::{Kind, NodeId, Payload, SeqIndex, WireMessage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    /// Ask this node to reliably broadcast `payload` as source with index `h`.
    BroadcastRequest { payload: Payload, h: SeqIndex },
    /// `from` is the authenticated transport sender, not `msg.source`.
    Receive { from: NodeId, msg: WireMessage },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Send { to: NodeId, msg: WireMessage },
    Deliver { source: NodeId, payload: Payload, h: SeqIndex },
}

impl Action {
    pub fn is_deliver(&self) -> bool {
        matches!(self, Action::Deliver { .. })
    }
}

/// A deterministic, single-threaded protocol state machine.
pub trait Automaton: Send {
    fn id(&self) -> NodeId;
    fn handle(&mut self, event: Event) -> Vec<Action>;
    fn as_any(&self) -> &dyn Any;
}

/// `Send` actions for `msg` to nodes `0..n` in order, including the sender.
pub fn send_all(n: usize, msg: &WireMessage, out: &mut Vec<Action>) {
    for to in 0..n {
        out.push(Action::Send { to, msg: msg.clone() });
    }
}

/// State for one `(s, h)` instance.
///
/// `Counter[kind, s, H, h]` is the number of supporters recorded for
/// `(kind, H)`. A sender is counted at most once per kind, whatever digest
/// it names.
#[derive(Debug, Clone, Default)]
pub struct InstanceState {
    /// Payloads known for this instance, keyed by their digest.
    pub msg_set: BTreeMap<Digest, Payload>,
    pub hash_set: BTreeSet<Digest>,
    supporters: BTreeMap<(Kind, Digest), Vec<NodeId>>,
    counted: BTreeMap<Kind, BTreeSet<NodeId>>,
    sent: BTreeSet<Kind>,
    /// Digest -> nodes this node has sent REQ for it.
    pub pending_requests: BTreeMap<Digest, BTreeSet<NodeId>>,
    /// Nodes whose REQ has been processed.
    pub req_answered: BTreeSet<NodeId>,
    /// (sender, digest) pairs whose FWD has been accepted.
    pub fwd_from: BTreeSet<(NodeId, Digest)>,
    pub msg_received: bool,
    pub delivered: bool,
}

impl InstanceState {
    /// Counts `from` towards `(kind, digest)` unless it was already counted
    /// for `kind` (under any digest). Returns whether it was counted.
    pub fn count_once(&mut self, kind: Kind, digest: Digest, from: NodeId) -> bool {
        if !self.counted.entry(kind).or_default().insert(from) {
            return false;
        }
        self.supporters.entry((kind, digest)).or_default().push(from);
        true
    }

    pub fn counter(&self, kind: Kind, digest: &Digest) -> usize {
        self.supporters.get(&(kind, *digest)).map_or(0, Vec::len)
    }

    /// Counted senders for `(kind, digest)` in arrival order.
    pub fn supporters(&self, kind: Kind, digest: &Digest) -> &[NodeId] {
        self.supporters.get(&(kind, *digest)).map_or(&[], Vec::as_slice)
    }

    pub fn counted_senders(&self, kind: Kind) -> usize {
        self.counted.get(&kind).map_or(0, BTreeSet::len)
    }

    pub fn has_sent(&self, kind: Kind) -> bool {
        self.sent.contains(&kind)
    }

    /// Marks `kind` as sent; returns true the first time.
    pub fn mark_sent(&mut self, kind: Kind) -> bool {
        self.sent.insert(kind)
    }

    pub fn knows(&self, digest: &Digest) -> bool {
        self.msg_set.contains_key(digest)
    }

    pub fn requested_from(&self, digest: &Digest, node: NodeId) -> bool {
        self.pending_requests.get(digest).is_some_and(|s| s.contains(&node))
    }
}

/// Lazily created per-(s, h) states.
pub type Instances<S> = BTreeMap<(NodeId, SeqIndex), S>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::digest;

    #[test]
    fn count_once_fresh_and_repeat() {
        let mut st = InstanceState::default();
        let h = digest(b"m");
        assert!(st.count_once(Kind::Echo, h, 2));
        assert_eq!(st.counter(Kind::Echo, &h), 1);
        assert!(!st.count_once(Kind::Echo, h, 2));
        assert_eq!(st.counter(Kind::Echo, &h), 1);
    }

    #[test]
    fn equivocating_sender_counted_for_first_digest_only() {
        let mut st = InstanceState::default();
        let (h1, h2) = (digest(b"m1"), digest(b"m2"));
        assert!(st.count_once(Kind::Echo, h1, 4));
        assert!(!st.count_once(Kind::Echo, h2, 4));
        assert_eq!(st.counter(Kind::Echo, &h1), 1);
        assert_eq!(st.counter(Kind::Echo, &h2), 0);
        // kinds are independent
        assert!(st.count_once(Kind::Acc, h2, 4));
    }

    #[test]
    fn sent_flags_are_monotone() {
        let mut st = InstanceState::default();
        assert!(!st.has_sent(Kind::Acc));
        assert!(st.mark_sent(Kind::Acc));
        assert!(!st.mark_sent(Kind::Acc));
        assert!(st.has_sent(Kind::Acc));
    }

    #[test]
    fn supporters_keep_arrival_order() {
        let mut st = InstanceState::default();
        let h = digest(b"x");
        for j in [3, 0, 2] {
            st.count_once(Kind::Acc, h, j);
        }
        assert_eq!(st.supporters(Kind::Acc, &h), &[3, 0, 2]);
    }
}
