use std::path::PathBuf;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::protocols::ProtocolKind;
use crate::simnet::{check_properties, BroadcastSpec, PropertyCheck, RunStats, TraceRecord, World, US};
use crate::wire::{Payload, StatKind};

use super::config::{read_config, ExperimentConfig};
use super::report::ReportRow;
use super::BenchError;

fn random_payload(rng: &mut ChaCha8Rng, len: usize) -> Payload {
    let mut buf = vec![0u8; len];
    rng.fill_bytes(&mut buf);
    Payload::from(buf)
}

/// The broadcasts of a config: `broadcasts` seeded random payloads from the
/// workload source, `gap_us` apart, with `h = 0, 1, ...`.
pub fn workload(cfg: &ExperimentConfig) -> Vec<BroadcastSpec> {
    let w = &cfg.workload;
    let mut rng = ChaCha8Rng::seed_from_u64(w.seed);
    (0..w.broadcasts)
        .map(|h| BroadcastSpec {
            at: h * w.gap_us * US,
            source: w.source,
            h,
            payload: random_payload(&mut rng, w.payload_size),
        })
        .collect()
}

pub(crate) fn alt_payload(seed: u64, len: usize) -> Payload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa17e_4a7e_0000_0001);
    random_payload(&mut rng, len)
}

fn base_row(cfg: &ExperimentConfig) -> ReportRow {
    ReportRow {
        protocol: cfg.protocol.kind.clone().unwrap_or_default(),
        topology: cfg.network.topology.clone(),
        bandwidth: cfg.network.bandwidth.filter(|&b| b > 0),
        n: cfg.protocol.n,
        f: cfg.protocol.f,
        k: cfg.protocol.k,
        payload_size: cfg.workload.payload_size,
        seed: cfg.workload.seed,
        broadcasts: cfg.workload.broadcasts,
        ..ReportRow::default()
    }
}

/// Runs one config; returns the row, the stats and the trace if requested.
pub fn run_traced(
    cfg: &ExperimentConfig,
    trace: bool,
) -> Result<(ReportRow, RunStats, Option<Vec<TraceRecord>>), BenchError> {
    let mut sim = cfg.validate()?;
    sim.trace = trace;
    let kind = sim.protocol;
    let mut world = World::new(&sim)?;
    for b in &cfg.adversary.bindings {
        world.attach_adversary(b.node, cfg.strategy(b)?)?;
    }
    for spec in workload(cfg) {
        world.schedule_broadcast(spec.at, spec.source, spec.h, spec.payload)?;
    }
    world.run()?;

    let check = PropertyCheck {
        n: world.n(),
        faulty: world.faulty(),
        quiescent: world.is_quiescent(),
        acc_invariant: matches!(kind, ProtocolKind::HBrb3f1 | ProtocolKind::EcBrb3f1 | ProtocolKind::EcBrb4f1),
    };
    let violations = check_properties(world.stats(), &check).len() as u64;
    let faulty = world.faulty().clone();
    let trace_out = world.trace().map(<[TraceRecord]>::to_vec);
    let stats = world.into_stats();

    let mut row = base_row(cfg);
    row.k = sim.protocol_config(0).validate().ok().flatten().map(|p| p.k());
    row.deliveries = stats.deliveries.len() as u64;
    row.duration_ns = stats.duration;
    row.throughput = if stats.duration == 0 { 0.0 } else { row.deliveries as f64 * 1e9 / stats.duration as f64 };
    let lat = stats.latencies();
    if !lat.is_empty() {
        row.mean_latency_ns = lat.iter().sum::<u64>() / lat.len() as u64;
        row.max_latency_ns = *lat.iter().max().unwrap();
    }
    row.source_bytes_sent = stats.per_node[cfg.workload.source].msg_bytes_sent;
    row.total_bytes = stats.total_sent();
    row.msgs_msg = stats.msgs_sent(StatKind::Msg);
    row.msgs_echo = stats.msgs_sent(StatKind::Echo);
    row.msgs_acc = stats.msgs_sent(StatKind::Acc);
    row.msgs_req = stats.msgs_sent(StatKind::Req);
    row.msgs_fwd = stats.msgs_sent(StatKind::Fwd);
    row.msgs_hash_rb = stats.msgs_sent(StatKind::HashRb);
    row.causal_depth = stats
        .deliveries
        .iter()
        .filter(|d| d.source == cfg.workload.source && d.h == 0 && !faulty.contains(&d.node))
        .map(|d| d.depth)
        .max();
    row.violations = violations;
    Ok((row, stats, trace_out))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ReportRow, BenchError> {
    run_traced(cfg, false).map(|(row, _, _)| row)
}

/// Runs every config (sweeps expanded) in parallel. Failed runs become rows
/// with the `error` column set. Rows are sorted by protocol, topology and
/// bandwidth.
pub fn run_matrix(configs: &[ExperimentConfig]) -> Vec<ReportRow> {
    let all: Vec<ExperimentConfig> = configs.iter().flat_map(ExperimentConfig::expand).collect();
    let mut rows: Vec<ReportRow> = all
        .par_iter()
        .map(|c| {
            run_experiment(c).unwrap_or_else(|e| {
                let mut row = base_row(c);
                row.error = Some(e.to_string());
                row
            })
        })
        .collect();
    rows.sort_by(|a, b| (&a.protocol, &a.topology, a.bandwidth).cmp(&(&b.protocol, &b.topology, b.bandwidth)));
    rows
}

/// Configs named by `paths`: directories contribute their `*.toml` files in
/// name order. Files are parsed but not validated, so invalid configs turn
/// into error rows.
pub fn collect_configs(paths: &[PathBuf]) -> Result<Vec<ExperimentConfig>, BenchError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let rd = std::fs::read_dir(p).map_err(|source| BenchError::Io { path: p.clone(), source })?;
            let mut found: Vec<PathBuf> = rd
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "toml"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    files.iter().map(|f| read_config(f)).collect()
}
