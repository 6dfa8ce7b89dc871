//! Report rows. Columns, in order:
//!
//! | column             | meaning                                                   |
//! |--------------------|-----------------------------------------------------------|
//! | protocol           | protocol name                                             |
//! | topology           | topology name                                             |
//! | bandwidth          | per-link bytes/s, empty when unlimited                    |
//! | n, f, k            | system size, fault bound, code dimension (empty if none)  |
//! | payload_size       | L in bytes                                                |
//! | seed               | run seed                                                  |
//! | broadcasts         | broadcasts issued                                         |
//! | deliveries         | Deliver events at all nodes                               |
//! | duration_ns        | simulated time of the last event                          |
//! | throughput         | deliveries per simulated second                           |
//! | mean_latency_ns    | mean broadcast-to-Deliver latency                         |
//! | max_latency_ns     | max broadcast-to-Deliver latency                          |
//! | source_bytes_sent  | bytes of MSG-kind messages sent by the workload source    |
//! | total_bytes        | bytes sent by all nodes                                   |
//! | msgs_*             | messages sent, by kind (MSG, ECHO, ACC, REQ, FWD, HASH_RB)|
//! | causal_depth       | max causal depth of the first broadcast's deliveries      |
//! | violations         | property violations found                                 |
//! | error              | error message for rows that did not run                   |

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::BenchError;

pub const CSV_COLUMNS: [&str; 25] = [
    "protocol",
    "topology",
    "bandwidth",
    "n",
    "f",
    "k",
    "payload_size",
    "seed",
    "broadcasts",
    "deliveries",
    "duration_ns",
    "throughput",
    "mean_latency_ns",
    "max_latency_ns",
    "source_bytes_sent",
    "total_bytes",
    "msgs_msg",
    "msgs_echo",
    "msgs_acc",
    "msgs_req",
    "msgs_fwd",
    "msgs_hash_rb",
    "causal_depth",
    "violations",
    "error",
];

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportRow {
    pub protocol: String,
    pub topology: String,
    pub bandwidth: Option<u64>,
    pub n: usize,
    pub f: usize,
    pub k: Option<usize>,
    pub payload_size: usize,
    pub seed: u64,
    pub broadcasts: u64,
    pub deliveries: u64,
    pub duration_ns: u64,
    pub throughput: f64,
    pub mean_latency_ns: u64,
    pub max_latency_ns: u64,
    pub source_bytes_sent: u64,
    pub total_bytes: u64,
    pub msgs_msg: u64,
    pub msgs_echo: u64,
    pub msgs_acc: u64,
    pub msgs_req: u64,
    pub msgs_fwd: u64,
    pub msgs_hash_rb: u64,
    pub causal_depth: Option<u32>,
    pub violations: u64,
    pub error: Option<String>,
}

fn csv_err(e: impl std::fmt::Display) -> BenchError {
    BenchError::Output(e.to_string())
}

/// Writes rows as CSV. With `header` false the header line is omitted, for
/// appending to an existing file.
pub fn write_csv<W: Write>(out: W, rows: &[ReportRow], header: bool) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    if rows.is_empty() && header {
        w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

pub fn write_json<W: Write>(mut out: W, rows: &[ReportRow]) -> Result<(), BenchError> {
    serde_json::to_writer_pretty(&mut out, rows).map_err(csv_err)?;
    writeln!(out).map_err(csv_err)
}

/// Appends rows to a CSV file, writing the header only if the file is new
/// or empty.
pub fn append_csv(path: &Path, rows: &[ReportRow]) -> Result<(), BenchError> {
    let io = |source| BenchError::Io { path: path.to_path_buf(), source };
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    write_csv(file, rows, fresh)
}
