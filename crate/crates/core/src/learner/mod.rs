//! Learned navigation policies: a clipped-surrogate actor-critic and a
//! tabular Q-learning baseline, plus the shared training bookkeeping.

pub mod adam;
pub mod gae;
pub mod mlp;
pub mod ppo;
pub mod tabular;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::PortableObjectCatalog;
use crate::engine::{EngineError, StartSpec};
use crate::scan::ScanGraph;
use crate::schedule::{ScheduleConfig, ScheduleError, Scheme};
use crate::seeding;

pub use gae::compute_gae;
pub use ppo::{LearnerConfig, PpoAgent, TrajectoryBatch};
pub use tabular::{TabularAgent, TabularConfig};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum LearnerError {
    #[error("expected {} values for {rewards} rewards, got {values}", rewards + 1)]
    LengthMismatch { rewards: usize, values: usize },
    #[error("misaligned trajectory batch: {0}")]
    Batch(String),
    #[error("non-finite {what} during update {update}")]
    NonFinite { what: &'static str, update: usize },
    #[error("invalid learner config: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Scheme per training episode: the listed schemes split the run into equal
/// consecutive blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemePlan(pub Vec<Scheme>);

impl SchemePlan {
    pub fn constant(scheme: Scheme) -> Self {
        SchemePlan(vec![scheme])
    }

    /// Random, then semi-routine, then fully-routine, in thirds.
    pub fn ablation() -> Self {
        SchemePlan(vec![Scheme::Random, Scheme::SemiRoutine, Scheme::FullyRoutine])
    }

    pub fn scheme_for(&self, episode: usize, total: usize) -> Scheme {
        let k = self.0.len();
        self.0[(episode * k / total.max(1)).min(k - 1)]
    }
}

impl fmt::Display for SchemePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(|s| s.as_str()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for SchemePlan {
    type Err = ScheduleError;

    /// Comma-separated scheme names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let schemes = s.split(',').map(|p| p.trim().parse()).collect::<Result<Vec<Scheme>, _>>()?;
        Ok(SchemePlan(schemes))
    }
}

/// How each training episode picks its start node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartMode {
    Fixed(String),
    /// Uniform per episode from the `(seed, "start", episode)` stream.
    Random,
}

impl StartMode {
    pub fn spec(&self, seed: u64, episode: usize) -> StartSpec {
        match self {
            StartMode::Fixed(id) => StartSpec::Node(id.clone()),
            StartMode::Random => StartSpec::Random(seeding::derive_seed(seed, "start", episode as u64)),
        }
    }
}

/// Environment side of a training run.
#[derive(Debug, Clone)]
pub struct TrainSetup<'a> {
    pub scan: &'a ScanGraph,
    pub catalog: &'a PortableObjectCatalog,
    /// Horizon and placement seed; episode `e` uses schedule episode index `e`.
    pub schedule: ScheduleConfig,
    pub plan: SchemePlan,
    pub episodes: usize,
    pub start: StartMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub scheme: Scheme,
    pub start: String,
    pub unique_objects: usize,
    pub cumulative_reward: f64,
    pub nodes_visited_pct: f64,
    pub found: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateLog {
    pub update: usize,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeLog>,
    pub updates: Vec<UpdateLog>,
}

impl TrainingLog {
    pub fn unique_objects(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.unique_objects as f64).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,unique_objects,cumulative_reward,nodes_visited_pct\n");
        for e in &self.episodes {
            out.push_str(&format!("{},{},{},{:.4}\n", e.episode, e.unique_objects, e.cumulative_reward, e.nodes_visited_pct));
        }
        out
    }

    pub fn updates_csv(&self) -> String {
        let mut out = String::from("update,policy_loss,value_loss,entropy,approx_kl,clip_fraction\n");
        for u in &self.updates {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.4}\n",
                u.update, u.policy_loss, u.value_loss, u.entropy, u.approx_kl, u.clip_fraction
            ));
        }
        out
    }
}

pub(crate) fn episode_log(
    episode: usize,
    scheme: Scheme,
    scan: &ScanGraph,
    start: usize,
    state: &crate::engine::EpisodeState,
    reward: f64,
) -> EpisodeLog {
    let visited = state.visit_counts.iter().filter(|&&c| c > 0).count();
    EpisodeLog {
        episode,
        scheme,
        start: scan.id(start).to_string(),
        unique_objects: state.found.len(),
        cumulative_reward: reward,
        nodes_visited_pct: 100.0 * visited as f64 / scan.len() as f64,
        found: state.found.iter().cloned().collect(),
    }
}
