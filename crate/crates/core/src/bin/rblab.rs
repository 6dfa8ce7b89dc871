use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use rblab::bench::{
    append_csv, collect_configs, read_config, run_matrix, run_scenario, run_traced, write_csv, write_json,
    ExperimentConfig, ReportRow, ScenarioParams, SCENARIOS,
};
use rblab::protocols::ProtocolKind;
use rblab::simnet::trace;

#[derive(Parser)]
#[command(name = "rblab", version, about = "Reliable-broadcast protocol lab")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Format {
    /// Write CSV (default).
    #[arg(long, conflicts_with = "json")]
    csv: bool,
    /// Write JSON.
    #[arg(long)]
    json: bool,
    /// Output file; CSV is appended to, JSON overwritten.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment and print its report row.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        allow_overfault: bool,
        #[command(flatten)]
        format: Format,
    },
    /// Run every config in the given files or directories.
    Matrix {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        allow_overfault: bool,
        #[command(flatten)]
        format: Format,
    },
    /// Run a named adversary scenario and print PASS or FAIL.
    Scenario {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SCENARIOS))]
        name: String,
        #[arg(long)]
        f: Option<usize>,
        #[arg(long)]
        protocol: Option<ProtocolKind>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one experiment and emit its event trace.
    Trace {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        allow_overfault: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn apply_overrides(cfg: &mut ExperimentConfig, seed: Option<u64>, allow_overfault: bool) {
    if let Some(s) = seed {
        cfg.workload.seed = s;
    }
    cfg.protocol.allow_overfault |= allow_overfault;
}

fn emit(rows: &[ReportRow], format: &Format, cfg_out: Option<&ExperimentConfig>) -> Result<()> {
    let json = format.json;
    let out = format.out.clone().or_else(|| {
        let o = &cfg_out?.output;
        if json {
            o.json.clone()
        } else {
            o.csv.clone()
        }
    });
    match (out, json) {
        (Some(p), true) => write_json(File::create(&p).with_context(|| p.display().to_string())?, rows)?,
        (Some(p), false) => append_csv(&p, rows)?,
        (None, true) => write_json(io::stdout().lock(), rows)?,
        (None, false) => write_csv(io::stdout().lock(), rows, true)?,
    }
    Ok(())
}

fn write_trace(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| p.display().to_string())?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Run { config, seed, allow_overfault, format } => {
            let mut cfg = read_config(&config)?;
            apply_overrides(&mut cfg, seed, allow_overfault);
            let (row, _, _) = run_traced(&cfg, false)?;
            emit(&[row], &format, Some(&cfg))?;
        }
        Cmd::Matrix { paths, seed, allow_overfault, format } => {
            let mut configs = collect_configs(&paths)?;
            for c in &mut configs {
                apply_overrides(c, seed, allow_overfault);
            }
            let rows = run_matrix(&configs);
            emit(&rows, &format, None)?;
        }
        Cmd::Scenario { name, f, protocol, seed } => {
            let v = run_scenario(&name, &ScenarioParams { f, protocol, seed })?;
            println!("{v}");
            if !v.pass {
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Trace { config, seed, allow_overfault, out } => {
            let mut cfg = read_config(&config)?;
            apply_overrides(&mut cfg, seed, allow_overfault);
            let (_, _, records) = run_traced(&cfg, true)?;
            let text = trace::render(records.as_deref().unwrap_or_default());
            write_trace(out.as_deref().or(cfg.output.trace.as_deref()), &text)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
