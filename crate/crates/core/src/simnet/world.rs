use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adversary::{AdversaryCtx, AdversaryStrategy};
use crate::automaton::{Action, Automaton, Event};
use crate::codec::{CodeParams, DEFAULT_SUBSET_CAP};
use crate::hashing::{digest, HashFn};
use crate::protocols::{make_automaton, ProtocolConfig, ProtocolKind};
use crate::wire::{Body, Instance, Kind, NodeId, Payload, SeqIndex, WireMessage};

use super::link::{serialization_delay, LinkModel};
use super::stats::{BroadcastRecord, DeliveryRecord, RunStats};
use super::topology::{build_topology, Topology, TopologyKind};
use super::trace::{TraceEvent, TraceRecord};
use super::{SimError, SimTime};

pub const DEFAULT_STEPS_PER_BROADCAST: u64 = 1_000_000;

/// Overrides the link model for one message: `(from, to, msg, now)` to a
/// delay, or `None` to fall back to the link model. Overridden messages are
/// not ordered against the link's FIFO.
pub type DelayRule = Box<dyn FnMut(NodeId, NodeId, &WireMessage, SimTime) -> Option<SimTime> + Send>;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub protocol: ProtocolKind,
    pub n: usize,
    pub f: usize,
    pub k: Option<usize>,
    pub strict_resilience: bool,
    pub hash: HashFn,
    pub subset_cap: u128,
    pub topology: TopologyKind,
    pub link: LinkModel,
    pub seed: u64,
    pub trace: bool,
    pub steps_per_broadcast: u64,
    /// Events later than this are left unprocessed.
    pub time_cap: Option<SimTime>,
    pub allow_overfault: bool,
}

impl SimConfig {
    pub fn new(protocol: ProtocolKind, n: usize, f: usize) -> Self {
        SimConfig {
            protocol,
            n,
            f,
            k: None,
            strict_resilience: true,
            hash: digest,
            subset_cap: DEFAULT_SUBSET_CAP,
            topology: TopologyKind::SingleSwitch,
            link: LinkModel::default(),
            seed: 0,
            trace: false,
            steps_per_broadcast: DEFAULT_STEPS_PER_BROADCAST,
            time_cap: None,
            allow_overfault: false,
        }
    }

    pub fn protocol_config(&self, me: NodeId) -> ProtocolConfig {
        let mut c =
            ProtocolConfig::new(self.protocol, self.n, self.f, me).strict(self.strict_resilience).with_hash(self.hash);
        c.k = self.k;
        c.subset_cap = self.subset_cap;
        c
    }
}

/// One broadcast of a workload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BroadcastSpec {
    pub at: SimTime,
    pub source: NodeId,
    pub h: SeqIndex,
    pub payload: Payload,
}

enum Pending {
    Broadcast { source: NodeId, h: SeqIndex, payload: Payload },
    Arrive { from: NodeId, to: NodeId, msg: WireMessage, depth: u32, size: usize },
    Scripted { from: NodeId, to: NodeId, msg: WireMessage, delay: SimTime },
}

struct Binding {
    strategy: AdversaryStrategy,
    sends: u64,
}

pub struct World {
    n: usize,
    f: usize,
    nodes: Vec<Box<dyn Automaton>>,
    topology: Topology,
    link: LinkModel,
    rng: ChaCha8Rng,
    hash: HashFn,
    code: Option<CodeParams>,
    queue: BTreeMap<(SimTime, u64), Pending>,
    seq: u64,
    now: SimTime,
    faulty: BTreeSet<NodeId>,
    bindings: BTreeMap<NodeId, Binding>,
    allow_overfault: bool,
    delay_rule: Option<DelayRule>,
    stats: RunStats,
    trace: Option<Vec<TraceRecord>>,
    depth: HashMap<(NodeId, NodeId, SeqIndex), u32>,
    link_free_at: HashMap<(NodeId, Option<NodeId>), SimTime>,
    last_arrival: HashMap<(NodeId, NodeId), SimTime>,
    sources: BTreeSet<NodeId>,
    scheduled_broadcasts: u64,
    steps: u64,
    steps_per_broadcast: u64,
    time_cap: Option<SimTime>,
}

impl World {
    pub fn new(cfg: &SimConfig) -> Result<Self, SimError> {
        let code = cfg.protocol_config(0).validate()?;
        let nodes = (0..cfg.n).map(|me| make_automaton(cfg.protocol_config(me))).collect::<Result<Vec<_>, _>>()?;
        let topology = build_topology(cfg.topology, cfg.n)?;
        let mut w = World::from_automata(nodes, cfg.f, topology, cfg.link.clone(), cfg.seed);
        w.hash = cfg.hash;
        w.code = code;
        w.steps_per_broadcast = cfg.steps_per_broadcast;
        w.time_cap = cfg.time_cap;
        w.allow_overfault = cfg.allow_overfault;
        if cfg.trace {
            w.enable_trace();
        }
        Ok(w)
    }

    /// A world over arbitrary automata; node `i` must have id `i`.
    pub fn from_automata(
        nodes: Vec<Box<dyn Automaton>>,
        f: usize,
        topology: Topology,
        link: LinkModel,
        seed: u64,
    ) -> Self {
        let n = nodes.len();
        assert_eq!(topology.n(), n, "topology size must match node count");
        for (i, a) in nodes.iter().enumerate() {
            assert_eq!(a.id(), i, "automaton at position {i} has id {}", a.id());
        }
        World {
            n,
            f,
            nodes,
            topology,
            link,
            rng: ChaCha8Rng::seed_from_u64(seed),
            hash: digest,
            code: None,
            queue: BTreeMap::new(),
            seq: 0,
            now: 0,
            faulty: BTreeSet::new(),
            bindings: BTreeMap::new(),
            allow_overfault: false,
            delay_rule: None,
            stats: RunStats::new(n),
            trace: None,
            depth: HashMap::new(),
            link_free_at: HashMap::new(),
            last_arrival: HashMap::new(),
            sources: BTreeSet::new(),
            scheduled_broadcasts: 0,
            steps: 0,
            steps_per_broadcast: DEFAULT_STEPS_PER_BROADCAST,
            time_cap: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn f(&self) -> usize {
        self.f
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn hash(&self) -> HashFn {
        self.hash
    }

    pub fn code_params(&self) -> Option<CodeParams> {
        self.code
    }

    pub fn faulty(&self) -> &BTreeSet<NodeId> {
        &self.faulty
    }

    pub fn is_faulty(&self, node: NodeId) -> bool {
        self.faulty.contains(&node)
    }

    pub fn set_allow_overfault(&mut self, allow: bool) {
        self.allow_overfault = allow;
    }

    pub fn set_time_cap(&mut self, cap: Option<SimTime>) {
        self.time_cap = cap;
    }

    pub fn set_delay_rule(&mut self, rule: DelayRule) {
        self.delay_rule = Some(rule);
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> Option<&[TraceRecord]> {
        self.trace.as_deref()
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn into_stats(self) -> RunStats {
        self.stats
    }

    pub fn automaton(&self, node: NodeId) -> &dyn Automaton {
        self.nodes[node].as_ref()
    }

    pub fn ctx_for(&self, me: NodeId) -> AdversaryCtx {
        AdversaryCtx { n: self.n, f: self.f, me, code: self.code, hash: self.hash }
    }

    fn check_node(&self, node: NodeId) -> Result<(), SimError> {
        if node >= self.n {
            return Err(SimError::NodeOutOfRange { node, n: self.n });
        }
        Ok(())
    }

    /// Marks `node` faulty without filtering its sends; used by scripts that
    /// drive a node's traffic directly.
    pub fn mark_faulty(&mut self, node: NodeId) -> Result<(), SimError> {
        self.check_node(node)?;
        if !self.faulty.contains(&node) && !self.allow_overfault && self.faulty.len() >= self.f {
            return Err(SimError::FaultBudgetExceeded { faulty: self.faulty.len() + 1, f: self.f });
        }
        self.faulty.insert(node);
        Ok(())
    }

    /// Routes all future sends of `node` through `strategy`.
    pub fn attach_adversary(&mut self, node: NodeId, strategy: AdversaryStrategy) -> Result<&mut Self, SimError> {
        self.mark_faulty(node)?;
        self.bindings.insert(node, Binding { strategy, sends: 0 });
        Ok(self)
    }

    fn push(&mut self, at: SimTime, p: Pending) {
        self.queue.insert((at, self.seq), p);
        self.seq += 1;
    }

    pub fn schedule_broadcast(
        &mut self,
        at: SimTime,
        source: NodeId,
        h: SeqIndex,
        payload: Payload,
    ) -> Result<(), SimError> {
        self.check_node(source)?;
        if at < self.now {
            return Err(SimError::ScheduleInPast { at, now: self.now });
        }
        self.scheduled_broadcasts += 1;
        self.push(at, Pending::Broadcast { source, h, payload });
        Ok(())
    }

    /// Injects `msg` from `from` to `to`, sent at `at` and received
    /// `delay` later. Bypasses the link model and adversary strategies.
    pub fn schedule_send(
        &mut self,
        at: SimTime,
        from: NodeId,
        to: NodeId,
        msg: WireMessage,
        delay: SimTime,
    ) -> Result<(), SimError> {
        self.check_node(from)?;
        self.check_node(to)?;
        if at < self.now {
            return Err(SimError::ScheduleInPast { at, now: self.now });
        }
        self.push(at, Pending::Scripted { from, to, msg, delay });
        Ok(())
    }

    fn step_cap(&self) -> u64 {
        self.steps_per_broadcast.saturating_mul(self.scheduled_broadcasts.max(1))
    }

    /// Processes events until the queue is empty or the time cap is reached.
    pub fn run(&mut self) -> Result<(), SimError> {
        self.run_until(SimTime::MAX)
    }

    /// Processes events with time `<= until` (and within the time cap).
    pub fn run_until(&mut self, until: SimTime) -> Result<(), SimError> {
        let limit = self.time_cap.map_or(until, |c| c.min(until));
        while let Some(entry) = self.queue.first_entry() {
            let t = entry.key().0;
            if t > limit {
                break;
            }
            let pending = entry.remove();
            self.steps += 1;
            let cap = self.step_cap();
            if self.steps > cap {
                return Err(SimError::StepCapExceeded { cap });
            }
            self.now = t;
            self.stats.events = self.steps;
            self.stats.duration = t;
            self.process(pending);
        }
        Ok(())
    }

    pub fn is_quiescent(&self) -> bool {
        self.queue.is_empty()
    }

    fn record_trace(
        &mut self,
        event: TraceEvent,
        from: NodeId,
        to: NodeId,
        kind: &'static str,
        size: usize,
        source: NodeId,
        h: SeqIndex,
        depth: u32,
    ) {
        if let Some(t) = self.trace.as_mut() {
            t.push(TraceRecord { time: self.now, event, from, to, kind, size, source, h, depth });
        }
    }

    fn process(&mut self, pending: Pending) {
        match pending {
            Pending::Broadcast { source, h, payload } => {
                self.sources.insert(source);
                self.depth.entry((source, source, h)).or_insert(0);
                self.stats.broadcasts.push(BroadcastRecord {
                    source,
                    h,
                    time: self.now,
                    payload: (self.hash)(payload.as_bytes()),
                    len: payload.len(),
                });
                self.record_trace(TraceEvent::Bcast, source, source, "-", payload.len(), source, h, 0);
                let actions = self.nodes[source].handle(Event::BroadcastRequest { payload, h });
                self.apply(source, actions);
            }
            Pending::Arrive { from, to, msg, depth, size } => {
                let ns = &mut self.stats.per_node[to];
                let k = msg.stat_kind().index();
                ns.bytes_received[k] += size as u64;
                ns.msgs_received[k] += 1;
                self.stats.bytes_in_flight -= size as u64;
                self.record_trace(TraceEvent::Recv, from, to, msg.stat_kind().name(), size, msg.source, msg.h, depth);
                let d = self.depth.entry((to, msg.source, msg.h)).or_insert(0);
                *d = (*d).max(depth);
                let actions = self.nodes[to].handle(Event::Receive { from, msg });
                self.apply(to, actions);
            }
            Pending::Scripted { from, to, msg, delay } => {
                let depth = 1 + self.depth.get(&(from, msg.source, msg.h)).copied().unwrap_or(0);
                self.transmit(from, to, msg, depth, Some(delay));
            }
        }
    }

    fn apply(&mut self, node: NodeId, actions: Vec<Action>) {
        for action in actions {
            match action {
                Action::Send { to, msg } => {
                    debug_assert!(to < self.n, "send to {to} out of range");
                    let depth = 1 + self.depth.get(&(node, msg.source, msg.h)).copied().unwrap_or(0);
                    let msg = match self.bindings.get_mut(&node) {
                        Some(b) => {
                            let ctx = AdversaryCtx { n: self.n, f: self.f, me: node, code: self.code, hash: self.hash };
                            let step = b.sends;
                            b.sends += 1;
                            match b.strategy.apply(&ctx, step, to, msg) {
                                Some(m) => m,
                                None => continue,
                            }
                        }
                        None => msg,
                    };
                    self.transmit(node, to, msg, depth, None);
                }
                Action::Deliver { source, payload, h } => {
                    let depth = self.depth.get(&(node, source, h)).copied().unwrap_or(0);
                    self.stats.deliveries.push(DeliveryRecord {
                        node,
                        source,
                        h,
                        time: self.now,
                        depth,
                        payload: (self.hash)(payload.as_bytes()),
                        len: payload.len(),
                    });
                    self.record_trace(TraceEvent::Deliver, node, node, "-", payload.len(), source, h, depth);
                }
            }
        }
    }

    fn transmit(&mut self, from: NodeId, to: NodeId, msg: WireMessage, depth: u32, fixed_delay: Option<SimTime>) {
        let size = msg.encoded_len();
        let sk = msg.stat_kind();
        let ns = &mut self.stats.per_node[from];
        ns.bytes_sent[sk.index()] += size as u64;
        ns.msgs_sent[sk.index()] += 1;
        if msg.kind == Kind::Msg {
            ns.msg_bytes_sent += size as u64;
        }
        if let (Kind::Acc, Instance::Main, Body::Digest(d)) = (msg.kind, msg.instance, &msg.body) {
            self.stats.acc_digests.entry((msg.source, msg.h)).or_default().entry(from).or_default().insert(*d);
        }
        self.stats.bytes_in_flight += size as u64;
        self.record_trace(TraceEvent::Send, from, to, sk.name(), size, msg.source, msg.h, depth);

        let ruled = match (fixed_delay, from == to) {
            (Some(d), _) => Some(d),
            (None, true) => Some(0),
            (None, false) => self.delay_rule.as_mut().and_then(|r| r(from, to, &msg, self.now)),
        };
        let arrival = match ruled {
            Some(d) => self.now + d,
            None => self.link_arrival(from, to, size),
        };
        self.push(arrival, Pending::Arrive { from, to, msg, depth, size });
    }

    /// Serialization on the sender's queue, propagation, then FIFO.
    fn link_arrival(&mut self, from: NodeId, to: NodeId, size: usize) -> SimTime {
        let is_source = self.sources.contains(&from);
        let shared_egress = is_source && self.link.source_bandwidth.is_some();
        let bw = self.link.bandwidth_for(is_source);
        let queue_key = (from, if shared_egress { None } else { Some(to) });
        let free = self.link_free_at.get(&queue_key).copied().unwrap_or(0);
        let start = self.now.max(free);
        let done = start + serialization_delay(size, bw);
        if bw.is_some() {
            self.link_free_at.insert(queue_key, done);
        }
        let prop = self.link.propagation(from, to, self.topology.hops(from, to), &mut self.rng);
        let last = self.last_arrival.get(&(from, to)).copied().unwrap_or(0);
        let arrival = (done + prop).max(last);
        self.last_arrival.insert((from, to), arrival);
        arrival
    }
}

/// Schedules `workload` on `world`, runs to quiescence and returns the stats.
pub fn run(mut world: World, workload: &[BroadcastSpec]) -> Result<RunStats, SimError> {
    for b in workload {
        world.schedule_broadcast(b.at, b.source, b.h, b.payload.clone())?;
    }
    world.run()?;
    Ok(world.into_stats())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simnet::{MS, US};
    use crate::wire::StatKind;

    fn one(protocol: ProtocolKind, n: usize, f: usize) -> SimConfig {
        let mut c = SimConfig::new(protocol, n, f);
        c.link.base_delay_per_hop = 50 * US;
        c
    }

    #[test]
    fn empty_workload() {
        let w = World::new(&one(ProtocolKind::Bracha, 4, 1)).unwrap();
        let s = run(w, &[]).unwrap();
        assert_eq!(s.total_msgs_sent(), 0);
        assert!(s.deliveries.is_empty());
    }

    #[test]
    fn bandwidth_delay_by_hand() {
        let mut c = one(ProtocolKind::CrbFlood, 2, 0);
        c.link.base_delay_per_hop = MS / 2;
        c.link.bandwidth = Some(1000);
        let w = World::new(&c).unwrap();
        let payload = Payload::from(vec![7u8; 500 - crate::wire::HEADER_LEN]);
        let s = run(w, &[BroadcastSpec { at: 0, source: 0, h: 0, payload }]).unwrap();
        assert_eq!(s.delivery(1, 0, 0).unwrap().time, MS + 500 * MS);
    }

    #[test]
    fn bracha_message_count() {
        let w = World::new(&one(ProtocolKind::Bracha, 4, 0)).unwrap();
        let s = run(w, &[BroadcastSpec { at: 0, source: 0, h: 0, payload: "m".into() }]).unwrap();
        assert_eq!(s.total_msgs_sent(), 4 + 2 * 16);
        assert_eq!(s.msgs_sent(StatKind::Echo), 16);
        assert_eq!(s.deliveries.len(), 4);
    }

    #[test]
    fn bytes_conserved() {
        let mut c = one(ProtocolKind::HBrb3f1, 4, 1);
        c.link.jitter = 40 * US;
        c.seed = 9;
        let mut w = World::new(&c).unwrap();
        w.schedule_broadcast(0, 0, 0, "hello".into()).unwrap();
        w.run_until(120 * US).unwrap();
        let s = w.stats();
        assert!(s.bytes_in_flight > 0);
        assert_eq!(s.total_sent(), s.total_received() + s.bytes_in_flight);
        w.run().unwrap();
        let s = w.stats();
        assert_eq!(s.bytes_in_flight, 0);
        assert_eq!(s.total_sent(), s.total_received());
    }

    #[test]
    fn attach_out_of_range() {
        let mut w = World::new(&one(ProtocolKind::HBrb3f1, 4, 1)).unwrap();
        assert!(matches!(
            w.attach_adversary(4, AdversaryStrategy::Silent),
            Err(SimError::NodeOutOfRange { node: 4, n: 4 })
        ));
    }

    #[test]
    fn fault_budget() {
        let mut w = World::new(&one(ProtocolKind::HBrb3f1, 4, 1)).unwrap();
        w.attach_adversary(1, AdversaryStrategy::Silent).unwrap();
        assert!(matches!(
            w.attach_adversary(2, AdversaryStrategy::Silent),
            Err(SimError::FaultBudgetExceeded { faulty: 2, f: 1 })
        ));
        w.set_allow_overfault(true);
        assert!(w.attach_adversary(2, AdversaryStrategy::Silent).is_ok());
    }

    #[test]
    fn silent_node_still_lets_others_deliver() {
        let mut w = World::new(&one(ProtocolKind::HBrb3f1, 4, 1)).unwrap();
        w.attach_adversary(3, AdversaryStrategy::Silent).unwrap();
        let s = run(w, &[BroadcastSpec { at: 0, source: 0, h: 0, payload: "m".into() }]).unwrap();
        for node in 0..3 {
            assert!(s.delivery(node, 0, 0).is_some());
        }
        assert_eq!(s.per_node[3].total_sent(), 0);
    }

    #[test]
    fn link_is_fifo_under_jitter() {
        let mut c = one(ProtocolKind::CrbFlood, 2, 0);
        c.link.jitter = 45 * US;
        c.trace = true;
        let mut w = World::new(&c).unwrap();
        for h in 0..50 {
            w.schedule_broadcast(h * US, 0, h, "x".into()).unwrap();
        }
        w.run().unwrap();
        // the source's relay follows its own MSG on the same link
        let mut recv: Vec<_> = w
            .trace()
            .unwrap()
            .iter()
            .filter(|r| r.event == TraceEvent::Recv && r.from == 0 && r.to == 1)
            .map(|r| r.h)
            .collect();
        assert!(recv.windows(2).all(|p| p[0] <= p[1]));
        recv.dedup();
        assert_eq!(recv, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn step_cap_trips() {
        let mut c = one(ProtocolKind::Bracha, 4, 1);
        c.steps_per_broadcast = 10;
        let w = World::new(&c).unwrap();
        let err = run(w, &[BroadcastSpec { at: 0, source: 0, h: 0, payload: "m".into() }]).unwrap_err();
        assert_eq!(err, SimError::StepCapExceeded { cap: 10 });
    }
}
