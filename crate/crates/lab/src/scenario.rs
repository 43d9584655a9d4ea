//! Kstore scenario files.
//!
//! A scenario is a TOML document with four optional sections. Every key has a
//! default, unknown keys are errors:
//!
//! ```toml
//! [ring]
//! nodes = 8
//! vnodes = 64
//! R = 3
//!
//! [workload]
//! ops = 200
//! insert_ratio = 0.2
//! get_ratio = 0.2
//! op_interval = 2
//! merge_fn = "maximum"     # or "union"
//! seed = 1
//!
//! [faults]
//! drop_rate = 0.05
//! delays = [1, 2, 3, 5, 8]
//! partitions = [{ start = 100, end = 220, side = [0, 1, 2] }]
//! byzantine = []
//! anti_entropy_period = 10
//! max_rounds = 200
//!
//! [clock]
//! n = 256
//! m = 3
//! layers = [4, 2, 1]
//! widths = [1, 2, 3]
//! decay = "complete"       # or "incomplete"
//! strategy = "maxima"      # "extending", "maxima" or "hybrid"
//! p = 2                    # track cap for hybrid
//! ```

use std::path::Path;

use anyhow::{Context, Result};
use dobc_core::kstore::{Partition, SimSpec};
use dobc_core::{DecayMode, DobcConfig, HashConfig, MergeStrategy};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub ring: RingSection,
    pub workload: WorkloadSection,
    pub faults: FaultSection,
    pub clock: ClockSection,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RingSection {
    pub nodes: u32,
    pub vnodes: u32,
    #[serde(rename = "R")]
    pub replicas: usize,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSection {
    pub ops: usize,
    pub insert_ratio: f64,
    pub get_ratio: f64,
    pub op_interval: u64,
    pub merge_fn: String,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultSection {
    pub drop_rate: f64,
    pub delays: Vec<u64>,
    pub partitions: Vec<PartitionEntry>,
    pub byzantine: Vec<u32>,
    pub anti_entropy_period: u64,
    pub max_rounds: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionEntry {
    pub start: u64,
    pub end: u64,
    pub side: Vec<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockSection {
    pub n: u32,
    pub m: u32,
    pub layers: Vec<u32>,
    pub widths: Vec<u8>,
    pub decay: Decay,
    pub strategy: Strategy,
    pub p: u32,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Decay {
    #[default]
    Complete,
    Incomplete,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Extending,
    #[default]
    Maxima,
    Hybrid,
}

impl Strategy {
    pub fn with_p(self, p: u32) -> MergeStrategy {
        match self {
            Strategy::Extending => MergeStrategy::Extending,
            Strategy::Maxima => MergeStrategy::Maxima,
            Strategy::Hybrid => MergeStrategy::Hybrid(p),
        }
    }
}

pub fn strategy_name(s: MergeStrategy) -> String {
    match s {
        MergeStrategy::Extending => "extending".into(),
        MergeStrategy::Maxima => "maxima".into(),
        MergeStrategy::Hybrid(p) => format!("hybrid({p})"),
    }
}

impl From<Decay> for DecayMode {
    fn from(d: Decay) -> Self {
        match d {
            Decay::Complete => DecayMode::Complete,
            Decay::Incomplete => DecayMode::Incomplete,
        }
    }
}

fn defaults() -> SimSpec {
    SimSpec::new(1)
}

impl Default for RingSection {
    fn default() -> Self {
        let d = defaults();
        Self { nodes: d.nodes, vnodes: d.vnodes, replicas: d.replicas }
    }
}

impl Default for WorkloadSection {
    fn default() -> Self {
        let d = defaults();
        Self {
            ops: d.ops,
            insert_ratio: d.insert_ratio,
            get_ratio: d.get_ratio,
            op_interval: d.op_interval,
            merge_fn: d.merge_fn,
            seed: d.seed,
        }
    }
}

impl Default for FaultSection {
    fn default() -> Self {
        let d = defaults();
        Self {
            drop_rate: d.drop_rate,
            delays: d.delays,
            partitions: Vec::new(),
            byzantine: Vec::new(),
            anti_entropy_period: d.anti_entropy_period,
            max_rounds: d.max_rounds,
        }
    }
}

impl Default for ClockSection {
    fn default() -> Self {
        Self {
            n: 256,
            m: 3,
            layers: vec![4, 2, 1],
            widths: vec![1, 2, 3],
            decay: Decay::Complete,
            strategy: Strategy::Maxima,
            p: 2,
        }
    }
}

impl ClockSection {
    pub fn config(&self, seed: u64) -> DobcConfig {
        DobcConfig::default_shape(HashConfig::new(self.n, self.m, seed))
            .with_layers(&self.layers, &self.widths)
            .with_decay(self.decay.into())
            .with_strategy(self.strategy.with_p(self.p))
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// The simulator spec for `seed`, which also seeds the clock's hashes.
    pub fn spec(&self, seed: u64) -> SimSpec {
        SimSpec {
            nodes: self.ring.nodes,
            vnodes: self.ring.vnodes,
            replicas: self.ring.replicas,
            ops: self.workload.ops,
            insert_ratio: self.workload.insert_ratio,
            get_ratio: self.workload.get_ratio,
            op_interval: self.workload.op_interval,
            merge_fn: self.workload.merge_fn.clone(),
            seed,
            drop_rate: self.faults.drop_rate,
            delays: self.faults.delays.clone(),
            partitions: self
                .faults
                .partitions
                .iter()
                .map(|p| Partition { start: p.start, end: p.end, side: p.side.clone() })
                .collect(),
            byzantine: self.faults.byzantine.clone(),
            anti_entropy_period: self.faults.anti_entropy_period,
            max_rounds: self.faults.max_rounds,
            clock: self.clock.config(seed),
        }
    }
}
