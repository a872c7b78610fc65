//! Run configuration: a JSON file with every field optional, overridden by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use portnav_core::agent::http::EndpointConfig;
use portnav_core::desk::DeskBenchmark;
use portnav_core::learner::StartMode;
use portnav_core::scan::uniform_room_mix;
use portnav_core::schedule::{DEFAULT_MAX_INTERVAL, DEFAULT_WAITING_PERIOD};
use portnav_core::{
    generate_synthetic_scan, BenchConfig, LearnerConfig, PortableObjectCatalog, ScanGraph, ScheduleConfig, Scheme,
    SchemePlan, TabularConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSource {
    /// Scan file; wins over the synthetic settings.
    pub path: Option<PathBuf>,
    /// Use the fixed desk benchmark house and its five objects.
    pub desk: bool,
    pub nodes: usize,
    pub seed: u64,
}

impl Default for ScanSource {
    fn default() -> Self {
        ScanSource { path: None, desk: false, nodes: 53, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Protocol {
    pub trials: usize,
    pub episodes: usize,
    pub horizon: u32,
    pub waiting_period: u32,
    pub max_interval: Option<u32>,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            trials: 10,
            episodes: 20,
            horizon: 30,
            waiting_period: DEFAULT_WAITING_PERIOD,
            max_interval: Some(DEFAULT_MAX_INTERVAL),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    /// `tabular` or `ppo`.
    pub learner: String,
    pub plan: String,
    pub episodes: usize,
    /// Node id, or `random` for a seeded random start every episode.
    pub start: String,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings { learner: "tabular".into(), plan: "semi-routine".into(), episodes: 1000, start: "random".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scan: ScanSource,
    /// Catalog file replacing the built-in 21-object table.
    pub catalog: Option<PathBuf>,
    /// Restrict the catalog to these objects.
    pub objects: Option<Vec<String>>,
    pub scheme: Scheme,
    /// `memoryless`, `complete`, `selective`, `ppo:CHECKPOINT` or `tabular:CHECKPOINT`.
    pub agent: String,
    /// `scripted`, `replay:PATH` or `endpoint`.
    pub oracle: String,
    /// Endpoint settings; the key is read from `endpoint.api_key_env`.
    pub endpoint: EndpointConfig,
    pub protocol: Protocol,
    pub train: TrainSettings,
    pub learner: LearnerConfig,
    pub tabular: TabularConfig,
    pub seed: u64,
    pub jobs: usize,
    pub check_bound: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scan: ScanSource::default(),
            catalog: None,
            objects: None,
            scheme: Scheme::FullyRoutine,
            agent: "selective".into(),
            oracle: "scripted".into(),
            endpoint: EndpointConfig::default(),
            protocol: Protocol::default(),
            train: TrainSettings::default(),
            learner: LearnerConfig::default(),
            tabular: TabularConfig::default(),
            seed: 0,
            jobs: 1,
            check_bound: true,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("config {}", path.display()))
    }

    /// Checks cross-field consistency; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.scan.path {
            if !p.exists() {
                bail!("scan.path: {} does not exist", p.display());
            }
        }
        if let Some(p) = &self.catalog {
            if !p.exists() {
                bail!("catalog: {} does not exist", p.display());
            }
        }
        if self.scan.path.is_none() && !self.scan.desk && self.scan.nodes == 0 {
            bail!("scan.nodes: must be positive");
        }
        if self.jobs == 0 {
            bail!("jobs: must be at least 1");
        }
        if self.protocol.trials == 0 || self.protocol.episodes == 0 {
            bail!("protocol: trials and episodes must be positive");
        }
        self.schedule_config().validate().context("protocol")?;
        if let Some(path) = self.oracle.strip_prefix("replay:") {
            if !Path::new(path).exists() {
                bail!("oracle: replay file {path} does not exist");
            }
        } else if !matches!(self.oracle.as_str(), "scripted" | "endpoint") {
            bail!("oracle: expected scripted, replay:PATH or endpoint, got {:?}", self.oracle);
        }
        for prefix in ["ppo:", "tabular:"] {
            if let Some(path) = self.agent.strip_prefix(prefix) {
                if !Path::new(path).exists() {
                    bail!("agent: checkpoint {path} does not exist");
                }
            }
        }
        if !matches!(self.train.learner.as_str(), "tabular" | "ppo") {
            bail!("train.learner: expected tabular or ppo, got {:?}", self.train.learner);
        }
        self.train.plan.parse::<SchemePlan>().context("train.plan")?;
        self.learner.validate().context("learner")?;
        self.tabular.validate().context("tabular")?;
        Ok(())
    }

    pub fn schedule_config(&self) -> ScheduleConfig {
        ScheduleConfig {
            horizon: self.protocol.horizon,
            waiting_period: self.protocol.waiting_period,
            max_interval: self.protocol.max_interval,
            base_seed: self.seed,
        }
    }

    pub fn bench_config(&self, agent: &str, scheme: Scheme) -> BenchConfig {
        BenchConfig {
            agent: agent.to_string(),
            scheme,
            trials: self.protocol.trials,
            episodes: self.protocol.episodes,
            horizon: self.protocol.horizon,
            seed: self.seed,
            waiting_period: self.protocol.waiting_period,
            max_interval: self.protocol.max_interval,
            check_bound: self.check_bound,
            jobs: self.jobs,
        }
    }

    pub fn start_mode(&self) -> StartMode {
        match self.train.start.as_str() {
            "random" => StartMode::Random,
            id => StartMode::Fixed(id.to_string()),
        }
    }

    /// Files this run reads, for the manifest.
    pub fn input_files(&self) -> Vec<PathBuf> {
        let mut out: Vec<PathBuf> = self.scan.path.iter().chain(&self.catalog).cloned().collect();
        if let Some(p) = self.oracle.strip_prefix("replay:") {
            out.push(p.into());
        }
        for prefix in ["ppo:", "tabular:"] {
            if let Some(p) = self.agent.strip_prefix(prefix) {
                out.push(p.into());
            }
        }
        out
    }
}

/// The scan and catalog a run operates on.
pub struct World {
    pub scan: ScanGraph,
    pub catalog: PortableObjectCatalog,
}

impl World {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let (scan, mut catalog) = if cfg.scan.desk {
            let desk = DeskBenchmark::new();
            (desk.scan, desk.catalog)
        } else if let Some(p) = &cfg.scan.path {
            (ScanGraph::load(p).with_context(|| format!("scan.path {}", p.display()))?, PortableObjectCatalog::builtin())
        } else {
            let scan = generate_synthetic_scan(cfg.scan.seed, cfg.scan.nodes, &uniform_room_mix()).context("scan")?;
            (scan, PortableObjectCatalog::builtin())
        };
        if let Some(p) = &cfg.catalog {
            catalog = PortableObjectCatalog::load(p).with_context(|| format!("catalog {}", p.display()))?;
        }
        if let Some(names) = &cfg.objects {
            catalog = catalog.subset(names).context("objects")?;
        }
        Ok(World { scan, catalog })
    }
}
