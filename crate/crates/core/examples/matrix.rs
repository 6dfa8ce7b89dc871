//! An experiment sweep built from an inline config: three protocols over
//! two topologies, run in parallel and written as CSV to stdout.

use std::path::Path;

use rblab::bench::{parse_config, run_matrix, write_csv};

const CONFIG: &str = r#"
[protocol]
n = 7
f = 2

[network]
base_delay_us = 20
bandwidth = 12500000

[workload]
broadcasts = 20
payload_size = 4096
gap_us = 200
seed = 3

[sweep]
protocols = ["bracha", "h-brb-3f1", "ec-brb-3f1"]
topologies = ["single-switch", "fat-tree"]
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = parse_config(CONFIG, Path::new("inline.toml"))?;
    let rows = run_matrix(&[cfg]);
    write_csv(std::io::stdout().lock(), &rows, true)?;
    eprintln!();
    for r in &rows {
        eprintln!(
            "{:>11} {:>13}: {:>9} bytes total, {:>8.0} deliveries/s",
            r.protocol, r.topology, r.total_bytes, r.throughput
        );
    }
    Ok(())
}
