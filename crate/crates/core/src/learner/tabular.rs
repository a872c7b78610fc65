//! ε-greedy Q-learning over `(node, time bucket)` states.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{episode_log, LearnerError, TrainSetup, TrainingLog, CHECKPOINT_VERSION};
use crate::engine::{AgentView, Engine, Policy, PolicyError};
use crate::schedule::build_schedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TabularConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Share of the run over which ε decays linearly; constant afterwards.
    pub decay_fraction: f64,
    /// Number of time buckets; 0 means one per timestep.
    pub time_buckets: usize,
    /// Only consider adjacent nodes when exploring and maximizing.
    pub mask_invalid: bool,
    pub seed: u64,
}

impl Default for TabularConfig {
    fn default() -> Self {
        TabularConfig {
            alpha: 0.1,
            gamma: 0.95,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            decay_fraction: 0.5,
            time_buckets: 0,
            mask_invalid: true,
            seed: 0,
        }
    }
}

impl TabularConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(LearnerError::Config("alpha must lie in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(LearnerError::Config("gamma must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return Err(LearnerError::Config("epsilon values must lie in [0, 1]".into()));
        }
        Ok(())
    }

    fn epsilon(&self, episode: usize, total: usize) -> f64 {
        let span = (self.decay_fraction * total as f64).max(1.0);
        let frac = (episode as f64 / span).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularAgent {
    nodes: usize,
    horizon: u32,
    buckets: usize,
    mask_invalid: bool,
    q: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    kind: String,
    agent: TabularAgent,
}

impl TabularAgent {
    pub fn new(nodes: usize, horizon: u32, cfg: &TabularConfig) -> Self {
        let buckets = if cfg.time_buckets == 0 { horizon.max(1) as usize } else { cfg.time_buckets };
        TabularAgent { nodes, horizon, buckets, mask_invalid: cfg.mask_invalid, q: vec![0.0; nodes * buckets * nodes] }
    }

    fn bucket(&self, t: u32) -> usize {
        ((t as usize * self.buckets) / self.horizon.max(1) as usize).min(self.buckets - 1)
    }

    fn row(&self, node: usize, t: u32) -> usize {
        (node * self.buckets + self.bucket(t)) * self.nodes
    }

    pub fn q(&self, node: usize, t: u32, action: usize) -> f64 {
        self.q[self.row(node, t) + action]
    }

    fn allowed(&self, adjacency: &[u8]) -> Vec<usize> {
        if self.mask_invalid {
            (0..self.nodes).filter(|&j| adjacency[j] == 1).collect()
        } else {
            (0..self.nodes).collect()
        }
    }

    /// Highest-valued allowed action; ties go to the smallest index.
    pub fn greedy(&self, node: usize, t: u32, adjacency: &[u8]) -> usize {
        let row = self.row(node, t);
        self.allowed(adjacency)
            .into_iter()
            .fold(None, |best: Option<usize>, j| match best {
                Some(b) if self.q[row + b] >= self.q[row + j] => Some(b),
                _ => Some(j),
            })
            .unwrap_or(0)
    }

    fn max_q(&self, node: usize, t: u32, adjacency: &[u8]) -> f64 {
        let row = self.row(node, t);
        let best = self.allowed(adjacency).into_iter().map(|j| self.q[row + j]).fold(f64::NEG_INFINITY, f64::max);
        if best.is_finite() {
            best
        } else {
            0.0
        }
    }

    fn choose<R: Rng>(&self, node: usize, t: u32, adjacency: &[u8], epsilon: f64, rng: &mut R) -> usize {
        let allowed = self.allowed(adjacency);
        if rng.random_bool(epsilon) {
            return *allowed.choose(rng).unwrap_or(&0);
        }
        let row = self.row(node, t);
        let best = allowed.iter().map(|&j| self.q[row + j]).fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = allowed.into_iter().filter(|&j| self.q[row + j] == best).collect();
        *ties.choose(rng).unwrap_or(&0)
    }

    pub fn to_checkpoint(&self) -> String {
        serde_json::to_string(&Checkpoint { version: CHECKPOINT_VERSION, kind: "tabular".into(), agent: self.clone() })
            .expect("checkpoint serializes")
    }

    pub fn from_checkpoint(text: &str) -> Result<Self, LearnerError> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| LearnerError::Checkpoint(e.to_string()))?;
        if ck.version != CHECKPOINT_VERSION || ck.kind != "tabular" {
            return Err(LearnerError::Checkpoint(format!("unsupported {} checkpoint v{}", ck.kind, ck.version)));
        }
        let a = ck.agent;
        if a.buckets == 0 || a.q.len() != a.nodes * a.buckets * a.nodes {
            return Err(LearnerError::Checkpoint("q-table size does not match its shape".into()));
        }
        Ok(a)
    }
}

impl Policy for TabularAgent {
    fn act(&mut self, view: &AgentView<'_>) -> Result<usize, PolicyError> {
        Ok(self.greedy(view.current, view.timestep(), &view.observation.adjacency))
    }
}

pub fn tabular_q_train(setup: &TrainSetup<'_>, cfg: &TabularConfig) -> Result<(TrainingLog, TabularAgent), LearnerError> {
    cfg.validate()?;
    let horizon = setup.schedule.horizon;
    let mut agent = TabularAgent::new(setup.scan.len(), horizon, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut log = TrainingLog::default();
    for ep in 0..setup.episodes {
        let scheme = setup.plan.scheme_for(ep, setup.episodes);
        let schedule = build_schedule(setup.scan, setup.catalog, &setup.schedule, scheme, ep as u64)?;
        let mut engine = Engine::new(setup.scan, &schedule, &setup.start.spec(setup.schedule.base_seed, ep))?;
        let start = engine.state().current;
        let epsilon = cfg.epsilon(ep, setup.episodes);
        let mut total = 0.0;
        while !engine.state().done {
            let (s, t) = (engine.state().current, engine.state().t);
            let a = agent.choose(s, t, &engine.observation().adjacency, epsilon, &mut rng);
            let r = engine.step(a)?;
            total += r.reward as f64;
            let target = if r.done {
                r.reward as f64
            } else {
                let s2 = engine.state().current;
                r.reward as f64 + cfg.gamma * agent.max_q(s2, r.observation.timestep, &r.observation.adjacency)
            };
            let i = agent.row(s, t) + a;
            agent.q[i] += cfg.alpha * (target - agent.q[i]);
        }
        log.episodes.push(episode_log(ep, scheme, setup.scan, start, engine.state(), total));
    }
    Ok((log, agent))
}
