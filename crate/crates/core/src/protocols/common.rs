use crate::automaton::{send_all, Action, InstanceState};
use crate::hashing::{Digest, HashFn};
use crate::wire::{Body, Kind, NodeId, Payload, SeqIndex, WireMessage};

use super::{ProtocolConfig, Thresholds};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Ctx {
    pub n: usize,
    pub f: usize,
    pub me: NodeId,
    pub hash: HashFn,
}

impl Ctx {
    pub fn from_config(c: &ProtocolConfig) -> Self {
        Ctx { n: c.n, f: c.f, me: c.me, hash: c.hash }
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds::of(self.n, self.f)
    }

    /// `n - f`, saturating for over-fault experiments.
    pub fn quorum(&self) -> usize {
        self.n.saturating_sub(self.f).max(1)
    }

    pub fn send_all(&self, msg: WireMessage, out: &mut Vec<Action>) {
        send_all(self.n, &msg, out);
    }
}

pub(crate) fn deliver(st: &mut InstanceState, s: NodeId, h: SeqIndex, m: &Payload, out: &mut Vec<Action>) {
    if !st.delivered {
        st.delivered = true;
        out.push(Action::Deliver { source: s, payload: m.clone(), h });
    }
}

/// Sends `REQ(digest)` to each target not asked before.
pub(crate) fn request(
    st: &mut InstanceState,
    s: NodeId,
    h: SeqIndex,
    digest: Digest,
    targets: &[NodeId],
    out: &mut Vec<Action>,
) {
    let asked = st.pending_requests.entry(digest).or_default();
    for &to in targets {
        if asked.insert(to) {
            out.push(Action::Send { to, msg: WireMessage::new(Kind::Req, s, h, Body::Digest(digest)) });
        }
    }
}

/// Answers the first REQ from `from` for this instance if the payload is
/// known; `fwd` builds the FWD body.
pub(crate) fn answer_request(
    st: &mut InstanceState,
    s: NodeId,
    h: SeqIndex,
    from: NodeId,
    digest: Digest,
    fwd: impl FnOnce(&Payload, Digest) -> Body,
    out: &mut Vec<Action>,
) {
    if !st.req_answered.insert(from) {
        return;
    }
    if let Some(m) = st.msg_set.get(&digest) {
        out.push(Action::Send { to: from, msg: WireMessage::new(Kind::Fwd, s, h, fwd(m, digest)) });
    }
}

/// Accepts a forwarded payload from a node that was asked for `digest`.
pub(crate) fn accept_forward(st: &mut InstanceState, from: NodeId, m: Payload, digest: Digest) -> bool {
    if !st.requested_from(&digest, from) || !st.fwd_from.insert((from, digest)) {
        return false;
    }
    st.msg_set.entry(digest).or_insert(m);
    true
}

/// Check of the three-phase hash protocols: ECHO amplification at f+1, ACC
/// at n-f ECHOs or f+1 ACCs, Deliver at n-f ACCs, all gated on knowing the
/// payload for `digest`. `echo` builds this node's ECHO body.
pub(crate) fn check_three_phase(
    ctx: &Ctx,
    st: &mut InstanceState,
    s: NodeId,
    h: SeqIndex,
    digest: Digest,
    echo: impl FnOnce(&Payload) -> Option<Body>,
    out: &mut Vec<Action>,
) {
    let Some(m) = st.msg_set.get(&digest).cloned() else {
        return;
    };
    let echoes = st.counter(Kind::Echo, &digest);
    if echoes > ctx.f && !st.has_sent(Kind::Echo) {
        if let Some(body) = echo(&m) {
            st.mark_sent(Kind::Echo);
            ctx.send_all(WireMessage::new(Kind::Echo, s, h, body), out);
        }
    }
    let accs = st.counter(Kind::Acc, &digest);
    if (echoes >= ctx.quorum() || accs > ctx.f) && st.mark_sent(Kind::Acc) {
        ctx.send_all(WireMessage::new(Kind::Acc, s, h, Body::Digest(digest)), out);
    }
    // our own ACC loops back through the network, so only count what arrived
    if st.counter(Kind::Acc, &digest) >= ctx.quorum() {
        deliver(st, s, h, &m, out);
    }
}
