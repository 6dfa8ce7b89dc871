use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::AdversaryStrategy;
use crate::protocols::ProtocolKind;
use crate::simnet::{LinkModel, SimConfig, TopologyKind, MS, US};
use crate::wire::NodeId;

use super::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub network: NetworkSection,
    pub workload: WorkloadSection,
    #[serde(default)]
    pub adversary: AdversarySection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    /// Protocol name; may be omitted when a sweep lists protocols.
    #[serde(default)]
    pub kind: Option<String>,
    pub n: usize,
    pub f: usize,
    #[serde(default)]
    pub k: Option<usize>,
    /// Permit runs below the resilience bound and more than f faulty nodes.
    #[serde(default)]
    pub allow_overfault: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    /// `single-switch`, `linear`, `fat-tree` or `tree-<depth>x<fanout>`.
    pub topology: String,
    pub base_delay_us: u64,
    pub jitter_us: u64,
    /// Bytes per second per directed link; absent or 0 is unlimited.
    pub bandwidth: Option<u64>,
    /// Egress cap of a broadcasting source, shared by its links.
    pub source_bandwidth: Option<u64>,
    /// Directed link `[from, to]` stretched 100x.
    pub slow_link: Option<[NodeId; 2]>,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            topology: "single-switch".into(),
            base_delay_us: 50,
            jitter_us: 0,
            bandwidth: None,
            source_bandwidth: None,
            slow_link: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSection {
    pub broadcasts: u64,
    pub payload_size: usize,
    #[serde(default)]
    pub gap_us: u64,
    #[serde(default)]
    pub source: NodeId,
    pub seed: u64,
    #[serde(default)]
    pub time_cap_ms: Option<u64>,
    #[serde(default)]
    pub steps_per_broadcast: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySection {
    #[serde(default)]
    pub bindings: Vec<BindingSpec>,
}

/// One faulty node. `strategy` is `silent`, `crash` (uses `at_step`),
/// `equivocating-source` (uses `targets`) or `corrupt-relay` (uses `seed`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BindingSpec {
    pub node: NodeId,
    pub strategy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at_step: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<NodeId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
    #[serde(default)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub protocols: Vec<String>,
    #[serde(default)]
    pub topologies: Vec<String>,
    /// Bytes per second; 0 is unlimited.
    #[serde(default)]
    pub bandwidths: Vec<u64>,
}

pub fn parse_topology(s: &str) -> Result<TopologyKind, BenchError> {
    let bad = || BenchError::Validation(format!("unknown topology {s:?}"));
    Ok(match s {
        "single-switch" => TopologyKind::SingleSwitch,
        "linear" => TopologyKind::Linear,
        "fat-tree" => TopologyKind::FatTree,
        other => {
            let spec = other.strip_prefix("tree-").ok_or_else(bad)?;
            let (d, f) = spec.split_once('x').ok_or_else(bad)?;
            TopologyKind::Tree { depth: d.parse().map_err(|_| bad())?, fanout: f.parse().map_err(|_| bad())? }
        }
    })
}

/// Parses a config from TOML text; `path` is only used in messages.
pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig, BenchError> {
    toml::from_str(text).map_err(|e| BenchError::Parse {
        path: path.to_path_buf(),
        line: e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1),
        message: e.message().to_string(),
    })
}

/// Reads and parses a config file without validating it.
pub fn read_config(path: &Path) -> Result<ExperimentConfig, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text, path)
}

/// Reads a config file and validates every sweep point.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, BenchError> {
    let cfg = read_config(path)?;
    for c in cfg.expand() {
        c.validate()?;
    }
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn kind(&self) -> Result<ProtocolKind, BenchError> {
        let name =
            self.protocol.kind.as_deref().ok_or_else(|| BenchError::Validation("protocol.kind is required".into()))?;
        name.parse().map_err(|e: crate::protocols::ProtocolError| BenchError::Validation(e.to_string()))
    }

    pub fn topology(&self) -> Result<TopologyKind, BenchError> {
        parse_topology(&self.network.topology)
    }

    /// Expands the sweep, or returns the config itself.
    pub fn expand(&self) -> Vec<ExperimentConfig> {
        let Some(sweep) = &self.sweep else {
            return vec![self.clone()];
        };
        let mut base = self.clone();
        base.sweep = None;
        let protocols: Vec<Option<String>> = if sweep.protocols.is_empty() {
            vec![base.protocol.kind.clone()]
        } else {
            sweep.protocols.iter().cloned().map(Some).collect()
        };
        let topologies =
            if sweep.topologies.is_empty() { vec![base.network.topology.clone()] } else { sweep.topologies.clone() };
        let bandwidths: Vec<Option<u64>> = if sweep.bandwidths.is_empty() {
            vec![base.network.bandwidth]
        } else {
            sweep.bandwidths.iter().map(|&b| (b > 0).then_some(b)).collect()
        };
        let mut out = Vec::new();
        for t in &topologies {
            for b in &bandwidths {
                for p in &protocols {
                    let mut c = base.clone();
                    c.protocol.kind = p.clone();
                    c.network.topology = t.clone();
                    c.network.bandwidth = *b;
                    out.push(c);
                }
            }
        }
        out
    }

    /// Checks the config and builds the simulator config.
    pub fn validate(&self) -> Result<SimConfig, BenchError> {
        let kind = self.kind()?;
        let p = &self.protocol;
        let mut sim = SimConfig::new(kind, p.n, p.f);
        sim.k = p.k;
        sim.strict_resilience = !p.allow_overfault;
        sim.allow_overfault = p.allow_overfault;
        sim.topology = self.topology()?;
        let net = &self.network;
        sim.link = LinkModel {
            base_delay_per_hop: net.base_delay_us * US,
            jitter: net.jitter_us * US,
            bandwidth: net.bandwidth.filter(|&b| b > 0),
            source_bandwidth: net.source_bandwidth.filter(|&b| b > 0),
            slow_link: net.slow_link.map(|[a, b]| (a, b)),
        };
        let w = &self.workload;
        sim.seed = w.seed;
        sim.time_cap = w.time_cap_ms.map(|t| t * MS);
        if let Some(s) = w.steps_per_broadcast {
            sim.steps_per_broadcast = s;
        }
        sim.protocol_config(0).validate().map_err(|e| BenchError::Validation(e.to_string()))?;
        if w.payload_size == 0 {
            return Err(BenchError::Validation("workload.payload_size must be positive".into()));
        }
        if w.source >= p.n {
            return Err(BenchError::Validation(format!("workload.source {} out of range for n={}", w.source, p.n)));
        }
        if let Some([a, b]) = net.slow_link {
            if a >= p.n || b >= p.n {
                return Err(BenchError::Validation(format!("slow_link [{a}, {b}] out of range for n={}", p.n)));
            }
        }
        let mut seen = BTreeMap::new();
        for b in &self.adversary.bindings {
            if b.node >= p.n {
                return Err(BenchError::Validation(format!("adversary node {} out of range for n={}", b.node, p.n)));
            }
            if seen.insert(b.node, ()).is_some() {
                return Err(BenchError::Validation(format!("adversary node {} bound twice", b.node)));
            }
            self.strategy(b)?;
        }
        if !p.allow_overfault && self.adversary.bindings.len() > p.f {
            return Err(BenchError::Validation(format!(
                "{} adversary bindings exceed f={} (set allow_overfault)",
                self.adversary.bindings.len(),
                p.f
            )));
        }
        Ok(sim)
    }

    /// The strategy for a binding. Equivocation sends an alternative payload
    /// of the workload size to `targets`.
    pub fn strategy(&self, b: &BindingSpec) -> Result<AdversaryStrategy, BenchError> {
        let need = |what: &str| BenchError::Validation(format!("strategy {} needs `{what}`", b.strategy));
        Ok(match b.strategy.as_str() {
            "silent" => AdversaryStrategy::Silent,
            "crash" => AdversaryStrategy::Crash { at_step: b.at_step.ok_or_else(|| need("at_step"))? },
            "equivocating-source" => {
                let targets = b.targets.as_ref().ok_or_else(|| need("targets"))?;
                let alt = super::runner::alt_payload(self.workload.seed, self.workload.payload_size);
                AdversaryStrategy::EquivocatingSource { partition: targets.iter().map(|&t| (t, alt.clone())).collect() }
            }
            "corrupt-relay" => {
                AdversaryStrategy::CorruptRelay { seed: b.seed.unwrap_or(self.workload.seed ^ b.node as u64) }
            }
            other => return Err(BenchError::Validation(format!("unknown strategy {other:?}"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[protocol]
kind = "crb"
n = 4
f = 1

[workload]
broadcasts = 10
payload_size = 1024
seed = 1
"#;

    #[test]
    fn minimal_gets_defaults() {
        let cfg = parse_config(MINIMAL, Path::new("m.toml")).unwrap();
        let sim = cfg.validate().unwrap();
        assert_eq!(sim.topology, TopologyKind::SingleSwitch);
        assert_eq!(sim.link.jitter, 0);
        assert_eq!(sim.link.bandwidth, None);
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let text = MINIMAL.replace("f = 1", "f = 1\ncolour = 3");
        match parse_config(&text, Path::new("x.toml")) {
            Err(BenchError::Parse { line, message, .. }) => {
                assert_eq!(line, Some(6));
                assert!(message.contains("colour"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn resilience_bound_named() {
        let text = MINIMAL.replace("\"crb\"", "\"h-brb-5f1\"");
        let err = parse_config(&text, Path::new("x")).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("n >= 5f+1"), "{err}");
    }

    #[test]
    fn ecbrb4_k_must_be_n_minus_3f() {
        let text =
            MINIMAL.replace("\"crb\"", "\"ec-brb-4f1\"").replace("n = 4", "n = 13").replace("f = 1", "f = 3\nk = 5");
        let err = parse_config(&text, Path::new("x")).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("k must equal n-3f = 4"), "{err}");
    }

    #[test]
    fn sweep_is_cartesian() {
        let text = format!(
            "{MINIMAL}\n[sweep]\nprotocols = [\"crb\", \"bracha\", \"h-brb-3f1\"]\ntopologies = [\"linear\", \"tree-3x2\", \"fat-tree\"]\nbandwidths = [0, 5250000]\n"
        );
        let cfg = parse_config(&text, Path::new("x")).unwrap();
        let all = cfg.expand();
        assert_eq!(all.len(), 18);
        assert!(all.iter().all(|c| c.validate().is_ok()));
    }

    #[test]
    fn roundtrip_through_toml() {
        let cfg = parse_config(MINIMAL, Path::new("m")).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(parse_config(&text, Path::new("m")).unwrap(), cfg);
    }

    #[test]
    fn topology_names() {
        assert_eq!(parse_topology("tree-3x2").unwrap(), TopologyKind::Tree { depth: 3, fanout: 2 });
        assert!(parse_topology("ring").is_err());
        for t in [TopologyKind::SingleSwitch, TopologyKind::Linear, TopologyKind::FatTree] {
            assert_eq!(parse_topology(&t.name()).unwrap(), t);
        }
    }
}
