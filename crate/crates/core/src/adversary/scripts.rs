//! Scripted executions over `n = 5f` nodes partitioned as
//! `S1 = [0, f)`, `S2 = [f, 2f)`, `S3 = [2f, 3f)`, `S4 = [3f, 4f)` and the
//! faulty set `B = [4f, 5f)` with equivocating source `b = 4f`, plus the
//! six-node helper-message execution with `b = 0`.
//!
//! Time is measured in phases of [`PHASE`]; the broadcast starts at phase
//! `r = 0`. "Fast" messages take [`T_PRIME`] = `PHASE / 1000`.

use std::ops::Range;

use crate::hashing::Digest;
use crate::protocols::{make_automaton, HBrb3, ProtocolConfig, ProtocolKind};
use crate::simnet::{build_topology, DelayRule, LinkModel, SimTime, TopologyKind, World, MS};
use crate::wire::{Body, Kind, NodeId, Payload, SeqIndex, WireMessage};

use super::{AdversaryError, AdversaryStrategy, WitnessConfig, WitnessNode};

pub const PHASE: SimTime = MS;
pub const T_PRIME: SimTime = PHASE / 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sets {
    pub f: usize,
}

impl Sets {
    pub fn s1(&self) -> Range<NodeId> {
        0..self.f
    }
    pub fn s2(&self) -> Range<NodeId> {
        self.f..2 * self.f
    }
    pub fn s3(&self) -> Range<NodeId> {
        2 * self.f..3 * self.f
    }
    pub fn s4(&self) -> Range<NodeId> {
        3 * self.f..4 * self.f
    }
    pub fn byz(&self) -> Range<NodeId> {
        4 * self.f..5 * self.f
    }
    pub fn b(&self) -> NodeId {
        4 * self.f
    }
    /// `S2 ∪ S3`.
    pub fn middle(&self) -> Range<NodeId> {
        self.f..3 * self.f
    }
}

/// What a script installed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecPlan {
    pub b: NodeId,
    pub h: SeqIndex,
    pub m1: Payload,
    pub m2: Payload,
    pub sets: Option<Sets>,
}

const H: SeqIndex = 0;

fn payloads() -> (Payload, Payload) {
    (Payload::from("m1: first value"), Payload::from("m2: other value"))
}

fn single_switch(nodes: Vec<Box<dyn crate::automaton::Automaton>>, f: usize) -> World {
    let topo = build_topology(TopologyKind::SingleSwitch, nodes.len()).expect("n >= 1");
    World::from_automata(nodes, f, topo, LinkModel::default(), 0)
}

fn uniform(delay: SimTime) -> DelayRule {
    Box::new(move |_, _, _, _| Some(delay))
}

/// A `5f`-node world of witness nodes.
pub fn witness_world(f: usize, threshold: usize, double_witness: bool) -> Result<World, AdversaryError> {
    let n = 5 * f;
    let cfg = WitnessConfig::new(n, f, threshold)?.with_double_witness(double_witness);
    let nodes = (0..n).map(|i| Box::new(WitnessNode::new(cfg, i)) as Box<dyn crate::automaton::Automaton>).collect();
    Ok(single_switch(nodes, f))
}

fn hbrb3_world(n: usize, f: usize) -> World {
    let nodes = (0..n)
        .map(|i| make_automaton(ProtocolConfig::new(ProtocolKind::HBrb3f1, n, f, i)).expect("n >= 3f+1"))
        .collect();
    single_switch(nodes, f)
}

fn uses_digests(world: &World) -> bool {
    world.automaton(0).as_any().is::<HBrb3>()
}

/// `witness(m)` in the form the honest automata understand: `ECHO(m)` for
/// witness nodes, `ECHO(H(m))` and `ACC(H(m))` for the digest protocol.
fn witness_msgs(world: &World, m: &Payload, b: NodeId) -> Vec<WireMessage> {
    if uses_digests(world) {
        let d = world.hash()(m.as_bytes());
        vec![WireMessage::new(Kind::Echo, b, H, Body::Digest(d)), WireMessage::new(Kind::Acc, b, H, Body::Digest(d))]
    } else {
        vec![WireMessage::new(Kind::Echo, b, H, Body::Payload(m.clone()))]
    }
}

fn send_witness(
    world: &mut World,
    at: SimTime,
    from: NodeId,
    to: Range<NodeId>,
    m: &Payload,
    b: NodeId,
    delay: SimTime,
) -> Result<(), AdversaryError> {
    for msg in witness_msgs(world, m, b) {
        for t in to.clone() {
            world.schedule_send(at, from, t, msg.clone(), delay)?;
        }
    }
    Ok(())
}

fn send_msg(
    world: &mut World,
    b: NodeId,
    to: Range<NodeId>,
    m: &Payload,
    delay: SimTime,
) -> Result<(), AdversaryError> {
    for t in to {
        world.schedule_send(0, b, t, WireMessage::new(Kind::Msg, b, H, Body::Payload(m.clone())), delay)?;
    }
    Ok(())
}

fn five_f(world: &World, script: &'static str) -> Result<Sets, AdversaryError> {
    let (n, f) = (world.n(), world.f());
    if f == 0 || n != 5 * f {
        return Err(AdversaryError::ConfigMismatch { script, expected: "n = 5f, f >= 1", n, f });
    }
    Ok(Sets { f })
}

fn bind_byzantine(world: &mut World, sets: Sets, script: &str) -> Result<(), AdversaryError> {
    for x in sets.byz() {
        let role = if x == sets.b() { "b" } else { "B" };
        world.attach_adversary(x, AdversaryStrategy::ColludingScript { script: script.into(), role: role.into() })?;
    }
    Ok(())
}

/// Which of `(m1, m2)` a message names, by payload or digest.
fn names(msg: &WireMessage, d1: &Digest, d2: &Digest, hash: fn(&[u8]) -> Digest) -> Option<u8> {
    let d = match &msg.body {
        Body::Payload(p) => hash(p.as_bytes()),
        Body::Digest(d) => *d,
        _ => return None,
    };
    if &d == d1 {
        Some(1)
    } else if &d == d2 {
        Some(2)
    } else {
        None
    }
}

/// Installs Exec-1: `b` sends `m1` to `S1` and `m2` to `S4`; with double
/// witnessing and threshold `n - f`, `S1` delivers `m1` and `S4` delivers
/// `m2`. All of `B` (not only `B - {b}`) sends the `2t'` witness of `m2` so
/// the construction also works for `f = 1`.
pub fn script_exec1(world: &mut World) -> Result<ExecPlan, AdversaryError> {
    let sets = five_f(world, "exec1")?;
    bind_byzantine(world, sets, "exec1")?;
    let (m1, m2) = payloads();
    let b = sets.b();

    send_msg(world, b, sets.s1(), &m1, PHASE)?;
    send_msg(world, b, sets.s4(), &m2, PHASE)?;
    for x in sets.byz() {
        send_witness(world, PHASE, x, sets.s1(), &m1, b, T_PRIME)?;
        send_witness(world, PHASE, x, sets.s4(), &m2, b, T_PRIME)?;
        send_witness(world, PHASE, x, sets.middle(), &m2, b, 2 * T_PRIME)?;
    }
    send_witness(world, PHASE, b, sets.middle(), &m1, b, T_PRIME)?;

    let hash = world.hash();
    let (d1, d2) = (hash(m1.as_bytes()), hash(m2.as_bytes()));
    world.set_delay_rule(Box::new(move |from, to, msg, _| {
        let s = Sets { f: sets.f };
        Some(if s.s1().contains(&from) {
            T_PRIME
        } else if s.s4().contains(&from) {
            2 * T_PRIME
        } else if s.middle().contains(&from) {
            match names(msg, &d1, &d2, hash) {
                Some(1) if s.s1().contains(&to) => T_PRIME,
                Some(2) => T_PRIME,
                _ => PHASE,
            }
        } else {
            PHASE
        })
    }));
    Ok(ExecPlan { b, h: H, m1, m2, sets: Some(sets) })
}

/// Exec-1 world: witness nodes with double witnessing, delivering at `n - f`.
pub fn exec1_world(f: usize) -> Result<(World, ExecPlan), AdversaryError> {
    let mut w = witness_world(f, 4 * f, true)?;
    let plan = script_exec1(&mut w)?;
    Ok((w, plan))
}

/// Exec-1 timeline replayed against H-BRB[3f+1] nodes.
pub fn exec1_substitute(f: usize) -> Result<(World, ExecPlan), AdversaryError> {
    let mut w = hbrb3_world(5 * f, f);
    let plan = script_exec1(&mut w)?;
    Ok((w, plan))
}

/// Installs Exec-2 on a witness world: `b` sends `m1` to `S1` and `m2` to
/// `S2`; `B` witnesses `m1` to `S1 ∪ S3 ∪ S4` and `m2` to `S2`; `S3 ∪ S4`
/// witness `m1` with delay `1 - t'`, landing just before phase 3.
pub fn script_exec2(world: &mut World) -> Result<ExecPlan, AdversaryError> {
    let sets = five_f(world, "exec2")?;
    bind_byzantine(world, sets, "exec2")?;
    let (m1, m2) = payloads();
    let b = sets.b();

    send_msg(world, b, sets.s1(), &m1, PHASE)?;
    send_msg(world, b, sets.s2(), &m2, PHASE)?;
    for x in sets.byz() {
        send_witness(world, PHASE, x, sets.s1(), &m1, b, PHASE)?;
        send_witness(world, PHASE, x, 2 * sets.f..4 * sets.f, &m1, b, PHASE)?;
        send_witness(world, PHASE, x, sets.s2(), &m2, b, PHASE)?;
    }
    world.set_delay_rule(Box::new(move |from, _, _, _| {
        Some(if (2 * sets.f..4 * sets.f).contains(&from) { PHASE - T_PRIME } else { PHASE })
    }));
    Ok(ExecPlan { b, h: H, m1, m2, sets: Some(sets) })
}

/// Exec-2 world: witness nodes with single witnessing, delivering at
/// `floor((n+f)/2) + 1`.
pub fn exec2_world(f: usize) -> Result<(World, ExecPlan), AdversaryError> {
    let mut w = witness_world(f, 3 * f + 1, false)?;
    let plan = script_exec2(&mut w)?;
    Ok((w, plan))
}

/// Equivocation split: `b` sends `m1` to `S1 ∪ S2` and `m2` to `S3 ∪ S4`,
/// and `B` witnesses each value to the matching half. Uniform delay.
pub fn split_world(f: usize, threshold: usize) -> Result<(World, ExecPlan), AdversaryError> {
    let mut world = witness_world(f, threshold, false)?;
    let sets = five_f(&world, "equivocate-split")?;
    bind_byzantine(&mut world, sets, "equivocate-split")?;
    let (m1, m2) = payloads();
    let b = sets.b();
    send_msg(&mut world, b, 0..2 * sets.f, &m1, PHASE)?;
    send_msg(&mut world, b, 2 * sets.f..4 * sets.f, &m2, PHASE)?;
    for x in sets.byz() {
        send_witness(&mut world, PHASE, x, 0..2 * sets.f, &m1, b, PHASE)?;
        send_witness(&mut world, PHASE, x, 2 * sets.f..4 * sets.f, &m2, b, PHASE)?;
    }
    world.set_delay_rule(uniform(PHASE));
    Ok((world, ExecPlan { b, h: H, m1, m2, sets: Some(sets) }))
}

/// Installs the helper-message execution on six H-BRB[3f+1] nodes with
/// `b = 0`: `m'` (here `m1`) to node 1 and `m` (`m2`) to nodes 2..5, with
/// matching ECHOs, then `ACC(H(m))` to nodes 2..5. Every message takes one
/// phase.
pub fn script_helper4(world: &mut World) -> Result<ExecPlan, AdversaryError> {
    let (n, f) = (world.n(), world.f());
    if n != 6 || f != 1 || !uses_digests(world) {
        return Err(AdversaryError::ConfigMismatch {
            script: "helper4",
            expected: "n = 6, f = 1, H-BRB[3f+1] nodes",
            n,
            f,
        });
    }
    let b = 0;
    world.attach_adversary(b, AdversaryStrategy::ColludingScript { script: "helper4".into(), role: "b".into() })?;
    let (m_prime, m) = payloads();
    let hash = world.hash();
    let (dp, dm) = (hash(m_prime.as_bytes()), hash(m.as_bytes()));
    let send = |w: &mut World, at, to: Range<NodeId>, kind, body: Body| -> Result<(), AdversaryError> {
        for t in to {
            w.schedule_send(at, b, t, WireMessage::new(kind, b, H, body.clone()), PHASE)?;
        }
        Ok(())
    };
    send(world, 0, 1..2, Kind::Msg, Body::Payload(m_prime.clone()))?;
    send(world, 0, 2..6, Kind::Msg, Body::Payload(m.clone()))?;
    send(world, PHASE, 1..2, Kind::Echo, Body::Digest(dp))?;
    send(world, PHASE, 2..6, Kind::Echo, Body::Digest(dm))?;
    send(world, 2 * PHASE, 2..6, Kind::Acc, Body::Digest(dm))?;
    world.set_delay_rule(uniform(PHASE));
    Ok(ExecPlan { b, h: H, m1: m_prime, m2: m, sets: None })
}

pub fn helper4_world() -> Result<(World, ExecPlan), AdversaryError> {
    let mut w = hbrb3_world(6, 1);
    let plan = script_helper4(&mut w)?;
    Ok((w, plan))
}

/// The same six nodes with a non-faulty source broadcasting `m` at time 0.
pub fn helper4_honest() -> Result<(World, Payload), AdversaryError> {
    let mut w = hbrb3_world(6, 1);
    w.set_delay_rule(uniform(PHASE));
    let m = payloads().1;
    w.schedule_broadcast(0, 0, H, m.clone())?;
    Ok((w, m))
}
