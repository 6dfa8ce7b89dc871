use std::fmt;

use crate::adversary::{
    exec1_substitute, exec1_world, exec2_world, helper4_world, split_world, AdversaryStrategy, WitnessNode, PHASE,
};
use crate::protocols::ProtocolKind;
use crate::simnet::{check_properties, BroadcastSpec, PropertyCheck, SimConfig, Violation, World, US};

use super::BenchError;

pub const SCENARIOS: [&str; 6] = ["exec1", "exec2", "helper4", "equivocate-split", "corrupt-relay", "silent"];

#[derive(Debug, Clone, Default)]
pub struct ScenarioParams {
    pub f: Option<usize>,
    pub protocol: Option<ProtocolKind>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn verdict(name: &str, pass: bool, detail: String) -> Verdict {
    Verdict { name: name.into(), pass, detail }
}

fn violations(w: &World, quiescent: bool) -> Vec<Violation> {
    let check = PropertyCheck { n: w.n(), faulty: w.faulty(), quiescent, acc_invariant: false };
    check_properties(w.stats(), &check)
}

fn agreement_broken(w: &World) -> bool {
    violations(w, false).iter().any(|v| matches!(v, Violation::Agreement { .. }))
}

pub fn run_scenario(name: &str, p: &ScenarioParams) -> Result<Verdict, BenchError> {
    let f = p.f.unwrap_or(1);
    match name {
        "exec1" => match p.protocol {
            None => {
                let (mut w, plan) = exec1_world(f)?;
                w.run()?;
                let sets = plan.sets.expect("exec1 uses the 5f partition");
                let got = |i| w.stats().delivery(i, plan.b, plan.h).map(|d| d.payload);
                let (h1, h2) = (w.hash()(plan.m1.as_bytes()), w.hash()(plan.m2.as_bytes()));
                let split = sets.s1().all(|i| got(i) == Some(h1)) && sets.s4().all(|i| got(i) == Some(h2));
                Ok(verdict(
                    name,
                    split && agreement_broken(&w),
                    format!("witness protocol, n={}, f={f}: S1 delivers m1 and S4 delivers m2: {split}", 5 * f),
                ))
            }
            Some(ProtocolKind::HBrb3f1) => {
                let (mut w, _) = exec1_substitute(f)?;
                w.run()?;
                let broken = agreement_broken(&w);
                Ok(verdict(name, !broken, format!("h-brb-3f1, n={}, f={f}: agreement violated: {broken}", 5 * f)))
            }
            Some(other) => Err(BenchError::Validation(format!("exec1 can replay against h-brb-3f1 only, not {other}"))),
        },
        "exec2" => {
            let (mut w, plan) = exec2_world(f)?;
            w.run_until(3 * PHASE - 1)?;
            let sets = plan.sets.expect("exec2 uses the 5f partition");
            let mut counts = Vec::new();
            for i in sets.s2() {
                let node = w.automaton(i).as_any().downcast_ref::<WitnessNode>().expect("witness nodes");
                counts.push((
                    node.witness_count(plan.b, plan.h, plan.m1.as_bytes()),
                    node.witness_count(plan.b, plan.h, plan.m2.as_bytes()),
                ));
            }
            let pass = counts.iter().all(|&c| c == (3 * f, 2 * f));
            Ok(verdict(name, pass, format!("S2 witness counts (m1, m2) at the end of phase r+2: {counts:?}")))
        }
        "helper4" => {
            let (mut w, plan) = helper4_world()?;
            w.run()?;
            let at = |i| w.stats().delivery(i, plan.b, plan.h).map(|d| d.time / PHASE);
            let node1 = at(1);
            let others: Vec<_> = (2..6).map(at).collect();
            let pass = node1 == Some(5) && others.iter().all(Option::is_some);
            Ok(verdict(name, pass, format!("node 1 delivers in phase {node1:?}, nodes 2..5 in phases {others:?}")))
        }
        "equivocate-split" => {
            let low = (5 * f + f) / 2;
            let (mut a, _) = split_world(f, low)?;
            a.run()?;
            let (mut b, _) = split_world(f, low + 1)?;
            b.run()?;
            let (va, vb) = (agreement_broken(&a), agreement_broken(&b));
            Ok(verdict(
                name,
                va && !vb,
                format!("n={}, f={f}: violation at threshold {low}: {va}; at {}: {vb}", 5 * f, low + 1),
            ))
        }
        "corrupt-relay" | "silent" => {
            let kind =
                p.protocol.unwrap_or(if name == "silent" { ProtocolKind::HBrb3f1 } else { ProtocolKind::EcBrb4f1 });
            let n = kind.min_n(f);
            let mut cfg = SimConfig::new(kind, n, f);
            cfg.seed = p.seed;
            cfg.link.jitter = 40 * US;
            let mut w = World::new(&cfg)?;
            for node in n - f..n {
                let s = if name == "silent" {
                    AdversaryStrategy::Silent
                } else {
                    AdversaryStrategy::CorruptRelay { seed: p.seed ^ node as u64 }
                };
                w.attach_adversary(node, s)?;
            }
            for h in 0..3 {
                let payload = super::runner::alt_payload(p.seed.wrapping_add(h), 1024);
                let b = BroadcastSpec { at: h * 100 * US, source: 0, h, payload };
                w.schedule_broadcast(b.at, b.source, b.h, b.payload)?;
            }
            w.run()?;
            let v = violations(&w, true);
            let delivered = w.stats().deliveries.iter().filter(|d| !w.is_faulty(d.node)).count();
            Ok(verdict(
                name,
                v.is_empty() && delivered == 3 * (n - f),
                format!("{kind}, n={n}, f={f}: {delivered} non-faulty deliveries, {} violations", v.len()),
            ))
        }
        other => Err(BenchError::UnknownScenario(other.into())),
    }
}
