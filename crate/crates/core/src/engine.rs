//! The navigation MDP: node-hop actions, adjacency observations and the
//! per-transition reward `|new objects| - 1[action not adjacent]`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scan::{ScanError, ScanGraph};
use crate::schedule::{Occupancy, PlacementSchedule, ScheduleError};

pub type PolicyError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("action index {action} out of range for {n} nodes")]
    ActionOutOfRange { action: usize, n: usize },
    #[error("step called on a finished episode")]
    EpisodeDone,
    #[error("schedule has {0} objects; at most 64 are supported")]
    TooManyObjects(usize),
    #[error("invalid start spec {0:?}")]
    BadStart(String),
    #[error("policy failed at step {step}: {source}")]
    Policy {
        step: u32,
        #[source]
        source: PolicyError,
    },
}

/// Adjacency bits of the current node followed by the timestep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub adjacency: Vec<u8>,
    pub timestep: u32,
}

impl Observation {
    /// The `(n + 1)`-vector with the raw timestep as last element.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.adjacency.iter().map(|&b| b as f64).collect();
        v.push(self.timestep as f64);
        v
    }

    /// Network input: as [`Observation::to_vector`] with the timestep scaled to `t / T`.
    pub fn features(&self, horizon: u32) -> Vec<f64> {
        let mut v: Vec<f64> = self.adjacency.iter().map(|&b| b as f64).collect();
        v.push(self.timestep as f64 / horizon.max(1) as f64);
        v
    }

    pub fn ones(&self) -> usize {
        self.adjacency.iter().filter(|&&b| b == 1).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepResult {
    pub reward: i32,
    pub found_now: BTreeSet<String>,
    pub observation: Observation,
    pub done: bool,
    pub invalid_action: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeState {
    pub current: usize,
    pub t: u32,
    pub found: BTreeSet<String>,
    pub visit_counts: Vec<u32>,
    pub done: bool,
}

/// Where an episode begins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartSpec {
    Node(String),
    /// Uniform node drawn from a stream seeded by the value.
    Random(u64),
}

impl StartSpec {
    pub fn resolve(&self, scan: &ScanGraph) -> Result<usize, EngineError> {
        match self {
            StartSpec::Node(id) => Ok(scan.index_of(id)?),
            StartSpec::Random(seed) => Ok(ChaCha8Rng::seed_from_u64(*seed).random_range(0..scan.len())),
        }
    }
}

impl fmt::Display for StartSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StartSpec::Node(id) => f.write_str(id),
            StartSpec::Random(seed) => write!(f, "random(seed={seed})"),
        }
    }
}

impl FromStr for StartSpec {
    type Err = EngineError;

    /// Accepts a node id, `random(seed=N)` or `random(N)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("random(").and_then(|r| r.strip_suffix(')')) {
            let digits = inner.trim().trim_start_matches("seed").trim_start_matches('=').trim();
            return digits.parse().map(StartSpec::Random).map_err(|_| EngineError::BadStart(s.to_string()));
        }
        if s.is_empty() {
            return Err(EngineError::BadStart(s.to_string()));
        }
        Ok(StartSpec::Node(s.to_string()))
    }
}

/// What an agent sees at one adjacent viewpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub node: String,
    pub scene_objects: Vec<String>,
    pub portables: Vec<String>,
}

impl NodeSummary {
    pub fn contains(&self, object: &str) -> bool {
        self.scene_objects.iter().chain(&self.portables).any(|o| o == object)
    }
}

/// Read-only context handed to a [`Policy`] before each step.
pub struct AgentView<'a> {
    pub scan: &'a ScanGraph,
    pub observation: &'a Observation,
    pub current: usize,
    pub found: &'a BTreeSet<String>,
    pub horizon: u32,
    occupancy: &'a Occupancy,
}

impl<'a> AgentView<'a> {
    pub fn timestep(&self) -> u32 {
        self.observation.timestep
    }

    pub fn remaining(&self) -> u32 {
        self.horizon - self.observation.timestep
    }

    /// Scene objects and not-yet-found portables visible at node `idx` now.
    /// Before the first step the placement at `t = 1` is shown.
    pub fn node_summary(&self, idx: usize) -> NodeSummary {
        let t = self.observation.timestep.max(1);
        let mask = self.occupancy.mask_at(idx, t);
        let portables = self
            .occupancy
            .objects()
            .iter()
            .enumerate()
            .filter(|(k, o)| mask & (1 << k) != 0 && !self.found.contains(*o))
            .map(|(_, o)| o.clone())
            .collect();
        NodeSummary { node: self.scan.id(idx).to_string(), scene_objects: self.scan.scene_objects(idx), portables }
    }
}

/// Decision rule mapping the current view to a node index.
pub trait Policy {
    fn act(&mut self, view: &AgentView<'_>) -> Result<usize, PolicyError>;

    /// Called with the outcome of each step.
    fn observe(&mut self, _result: &StepResult) {}
}

impl<F> Policy for F
where
    F: FnMut(&AgentView<'_>) -> Result<usize, PolicyError>,
{
    fn act(&mut self, view: &AgentView<'_>) -> Result<usize, PolicyError> {
        self(view)
    }
}

/// One episode over a fixed scan and schedule.
pub struct Engine<'a> {
    scan: &'a ScanGraph,
    occupancy: Occupancy,
    found_mask: u64,
    state: EpisodeState,
    observation: Observation,
}

impl<'a> Engine<'a> {
    /// Builds the engine and resets it to `start`.
    pub fn new(scan: &'a ScanGraph, schedule: &PlacementSchedule, start: &StartSpec) -> Result<Self, EngineError> {
        if schedule.object_count() > 64 {
            return Err(EngineError::TooManyObjects(schedule.object_count()));
        }
        let occupancy = schedule.occupancy(scan)?;
        let mut engine = Engine {
            scan,
            occupancy,
            found_mask: 0,
            state: EpisodeState { current: 0, t: 0, found: BTreeSet::new(), visit_counts: vec![0; scan.len()], done: false },
            observation: Observation { adjacency: vec![0; scan.len()], timestep: 0 },
        };
        engine.reset(start)?;
        Ok(engine)
    }

    /// Starts a new episode at `t = 0`. Objects at the start node are not collected.
    pub fn reset(&mut self, start: &StartSpec) -> Result<Observation, EngineError> {
        let current = start.resolve(self.scan)?;
        self.found_mask = 0;
        self.state = EpisodeState {
            current,
            t: 0,
            found: BTreeSet::new(),
            visit_counts: vec![0; self.scan.len()],
            done: false,
        };
        self.state.visit_counts[current] = 1;
        self.observation = self.observe_now();
        Ok(self.observation.clone())
    }

    fn observe_now(&self) -> Observation {
        let mut adjacency = vec![0u8; self.scan.len()];
        for &j in self.scan.adjacent(self.state.current) {
            adjacency[j] = 1;
        }
        Observation { adjacency, timestep: self.state.t }
    }

    pub fn state(&self) -> &EpisodeState {
        &self.state
    }

    pub fn observation(&self) -> &Observation {
        &self.observation
    }

    pub fn horizon(&self) -> u32 {
        self.occupancy.horizon()
    }

    pub fn occupancy(&self) -> &Occupancy {
        &self.occupancy
    }

    pub fn view(&self) -> AgentView<'_> {
        AgentView {
            scan: self.scan,
            observation: &self.observation,
            current: self.state.current,
            found: &self.state.found,
            horizon: self.occupancy.horizon(),
            occupancy: &self.occupancy,
        }
    }

    /// Applies one action. Non-adjacent targets cost a timestep, keep the
    /// agent in place and yield -1.
    pub fn step(&mut self, action: usize) -> Result<StepResult, EngineError> {
        if self.state.done {
            return Err(EngineError::EpisodeDone);
        }
        let n = self.scan.len();
        if action >= n {
            return Err(EngineError::ActionOutOfRange { action, n });
        }
        self.state.t += 1;
        let t = self.state.t;
        let invalid = !self.scan.is_adjacent(self.state.current, action);
        let mut found_now = BTreeSet::new();
        let reward = if invalid {
            -1
        } else {
            self.state.current = action;
            let fresh = self.occupancy.mask_at(action, t) & !self.found_mask;
            self.found_mask |= fresh;
            for (k, o) in self.occupancy.objects().iter().enumerate() {
                if fresh & (1 << k) != 0 {
                    found_now.insert(o.clone());
                    self.state.found.insert(o.clone());
                }
            }
            found_now.len() as i32
        };
        self.state.visit_counts[self.state.current] += 1;
        let all = self.occupancy.objects().len();
        self.state.done = t >= self.occupancy.horizon() || self.state.found.len() == all;
        self.observation = self.observe_now();
        debug_assert_eq!(self.observation.ones(), self.scan.degree(self.state.current));
        Ok(StepResult {
            reward,
            found_now,
            observation: self.observation.clone(),
            done: self.state.done,
            invalid_action: invalid,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub t: u32,
    pub node: String,
    pub action: usize,
    pub reward: i32,
    pub invalid: bool,
    pub found_now: Vec<String>,
}

/// Full record of one rollout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub start: String,
    pub horizon: u32,
    pub steps: Vec<TraceStep>,
    pub found: BTreeSet<String>,
    pub visit_counts: Vec<u32>,
}

impl EpisodeTrace {
    pub fn total_reward(&self) -> i64 {
        self.steps.iter().map(|s| s.reward as i64).sum()
    }

    pub fn invalid_actions(&self) -> usize {
        self.steps.iter().filter(|s| s.invalid).count()
    }

    pub fn distinct_nodes(&self) -> usize {
        self.visit_counts.iter().filter(|&&c| c > 0).count()
    }

    /// Rows `t,node,action,reward,invalid,found_now` with `;`-joined finds.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,node,action,reward,invalid,found_now\n");
        for s in &self.steps {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.t,
                s.node,
                s.action,
                s.reward,
                s.invalid,
                s.found_now.join(";")
            ));
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "start": self.start,
            "horizon": self.horizon,
            "steps": self.steps.len(),
            "total_reward": self.total_reward(),
            "invalid_actions": self.invalid_actions(),
            "found": self.found,
            "unique_found": self.found.len(),
            "distinct_nodes": self.distinct_nodes(),
        })
    }
}

/// Rolls out `policy` from `start` until all objects are found or the
/// schedule's horizon is reached.
pub fn run_episode(
    scan: &ScanGraph,
    schedule: &PlacementSchedule,
    policy: &mut dyn Policy,
    start: &StartSpec,
) -> Result<EpisodeTrace, EngineError> {
    let mut engine = Engine::new(scan, schedule, start)?;
    let start_id = scan.id(engine.state().current).to_string();
    let mut steps = Vec::with_capacity(schedule.horizon() as usize);
    while !engine.state().done {
        let step = engine.state().t + 1;
        let action = policy.act(&engine.view()).map_err(|source| EngineError::Policy { step, source })?;
        let result = engine.step(action)?;
        policy.observe(&result);
        steps.push(TraceStep {
            t: step,
            node: scan.id(engine.state().current).to_string(),
            action,
            reward: result.reward,
            invalid: result.invalid_action,
            found_now: result.found_now.into_iter().collect(),
        });
    }
    let state = engine.state();
    Ok(EpisodeTrace {
        start: start_id,
        horizon: schedule.horizon(),
        steps,
        found: state.found.clone(),
        visit_counts: state.visit_counts.clone(),
    })
}
