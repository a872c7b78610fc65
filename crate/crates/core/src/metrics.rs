//! Benchmark protocol and its statistics: success rate, SRPL, coverage,
//! per-object find frequency and visit heatmaps.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::agent::{AgentDiagnostics, LgxAgent, Oracle};
use crate::catalog::PortableObjectCatalog;
use crate::engine::{run_episode, EngineError, Policy, StartSpec};
use crate::learner::{PpoAgent, TabularAgent};
use crate::scan::ScanGraph;
use crate::schedule::{build_schedule, ScheduleConfig, ScheduleError, Scheme, DEFAULT_MAX_INTERVAL, DEFAULT_WAITING_PERIOD};
use crate::seeding;
use crate::solver::{optimal_value, SolverError, SolverOptions, MAX_DP_OBJECTS};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("no trials or a trial without episodes")]
    Empty,
    #[error("path length {0} is below 2")]
    PathTooShort(f64),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("agent construction failed: {0}")]
    Agent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: usize,
    pub start: String,
    /// At least one portable object found.
    pub success: bool,
    pub steps: usize,
    /// Find events in the order they happened.
    pub found: Vec<String>,
    pub visit_counts: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimal_value: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialLog {
    pub trial: usize,
    pub seed: u64,
    pub episodes: Vec<EpisodeSummary>,
}

/// `(100 / trials) · Σ successful / total` over trials.
pub fn success_rate(trials: &[TrialLog]) -> Result<f64, MetricsError> {
    if trials.is_empty() || trials.iter().any(|t| t.episodes.is_empty()) {
        return Err(MetricsError::Empty);
    }
    let sum: f64 = trials.iter().map(trial_success_fraction).sum();
    Ok(100.0 * sum / trials.len() as f64)
}

fn trial_success_fraction(t: &TrialLog) -> f64 {
    t.episodes.iter().filter(|e| e.success).count() as f64 / t.episodes.len() as f64
}

/// Success rate divided by the natural log of the cumulative step count.
pub fn srpl(sr: f64, path_length: f64) -> Result<f64, MetricsError> {
    if path_length.is_nan() || path_length < 2.0 {
        return Err(MetricsError::PathTooShort(path_length));
    }
    Ok(sr / path_length.ln())
}

pub fn cumulative_steps(trials: &[TrialLog]) -> usize {
    trials.iter().flat_map(|t| &t.episodes).map(|e| e.steps).sum()
}

/// Mean per-episode coverage and coverage of the union over all episodes,
/// both as percentages of `n_nodes`.
pub fn coverage_stats(trials: &[TrialLog], n_nodes: usize) -> (f64, f64) {
    let episodes: Vec<&EpisodeSummary> = trials.iter().flat_map(|t| &t.episodes).collect();
    if episodes.is_empty() || n_nodes == 0 {
        return (0.0, 0.0);
    }
    let mut union = vec![false; n_nodes];
    let mut per_episode = 0.0;
    for e in &episodes {
        let visited = e.visit_counts.iter().filter(|&&c| c > 0).count();
        per_episode += visited as f64 / n_nodes as f64;
        for (u, &c) in union.iter_mut().zip(&e.visit_counts) {
            *u |= c > 0;
        }
    }
    let total = union.iter().filter(|&&u| u).count() as f64 / n_nodes as f64;
    (100.0 * per_episode / episodes.len() as f64, 100.0 * total)
}

/// Find events per object; every name in `objects` appears, possibly with 0.
pub fn object_frequency<'a>(trials: &[TrialLog], objects: impl IntoIterator<Item = &'a str>) -> BTreeMap<String, usize> {
    let mut freq: BTreeMap<String, usize> = objects.into_iter().map(|o| (o.to_string(), 0)).collect();
    for e in trials.iter().flat_map(|t| &t.episodes) {
        for o in &e.found {
            *freq.entry(o.clone()).or_default() += 1;
        }
    }
    freq
}

/// Episode × node visit counts, rows ordered by trial then episode.
pub fn heatmap(trials: &[TrialLog]) -> Vec<Vec<u32>> {
    trials.iter().flat_map(|t| t.episodes.iter().map(|e| e.visit_counts.clone())).collect()
}

pub fn heatmap_csv(trials: &[TrialLog], scan: &ScanGraph) -> String {
    let mut out = String::from("trial,episode");
    for v in 0..scan.len() {
        out.push(',');
        out.push_str(scan.id(v));
    }
    out.push('\n');
    for t in trials {
        for e in &t.episodes {
            out.push_str(&format!("{},{}", t.trial, e.episode));
            for c in &e.visit_counts {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
    }
    out
}

/// Extra counters an agent can contribute to a report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentReport {
    pub oracle_requests: usize,
    pub oracle_fallbacks: usize,
    pub fallback_moves: usize,
    pub plans_offered: usize,
    pub plans_accepted: usize,
    pub plans_completed: usize,
}

impl AgentReport {
    fn add(&mut self, o: &AgentReport) {
        self.oracle_requests += o.oracle_requests;
        self.oracle_fallbacks += o.oracle_fallbacks;
        self.fallback_moves += o.fallback_moves;
        self.plans_offered += o.plans_offered;
        self.plans_accepted += o.plans_accepted;
        self.plans_completed += o.plans_completed;
    }
}

/// A policy that can be benchmarked: one instance lives for one trial.
pub trait BenchAgent: Policy + Send {
    fn report(&self) -> AgentReport {
        AgentReport::default()
    }
}

impl<O: Oracle> BenchAgent for LgxAgent<O> {
    fn report(&self) -> AgentReport {
        let d: AgentDiagnostics = self.diagnostics();
        let s = self.oracle().stats();
        AgentReport {
            oracle_requests: s.requests,
            oracle_fallbacks: s.fallbacks,
            fallback_moves: d.fallback_moves,
            plans_offered: d.plans_offered,
            plans_accepted: d.plans_accepted,
            plans_completed: d.plans_completed,
        }
    }
}

impl BenchAgent for PpoAgent {}
impl BenchAgent for TabularAgent {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub agent: String,
    pub scheme: Scheme,
    pub trials: usize,
    pub episodes: usize,
    pub horizon: u32,
    pub seed: u64,
    pub waiting_period: u32,
    pub max_interval: Option<u32>,
    /// Compare every episode against the exact optimum.
    pub check_bound: bool,
    pub jobs: usize,
}

impl Default for BenchConfig {
    /// The standard protocol: 10 trials of 20 episodes of 30 steps.
    fn default() -> Self {
        BenchConfig {
            agent: String::new(),
            scheme: Scheme::FullyRoutine,
            trials: 10,
            episodes: 20,
            horizon: 30,
            seed: 0,
            waiting_period: DEFAULT_WAITING_PERIOD,
            max_interval: Some(DEFAULT_MAX_INTERVAL),
            check_bound: true,
            jobs: 1,
        }
    }
}

impl BenchConfig {
    pub fn schedule_config(&self) -> ScheduleConfig {
        ScheduleConfig {
            horizon: self.horizon,
            waiting_period: self.waiting_period,
            max_interval: self.max_interval,
            base_seed: self.seed,
        }
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        seeding::derive_seed(self.seed, "trial", trial as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub agent: String,
    pub scheme: Scheme,
    pub trials: usize,
    pub episodes: usize,
    pub horizon: u32,
    pub seed: u64,
    pub sr: f64,
    pub srpl: f64,
    pub cumulative_steps: usize,
    pub trial_success_rates: Vec<f64>,
    pub mean_objects_found: f64,
    pub object_frequency: BTreeMap<String, usize>,
    pub mean_coverage: f64,
    pub total_coverage: f64,
    pub bound_checked: usize,
    pub bound_violations: usize,
    pub agent_report: AgentReport,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn csv_header() -> &'static str {
        "agent,scheme,trials,episodes,horizon,sr,srpl,cumulative_steps,mean_objects_found,mean_coverage,total_coverage,bound_violations\n"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.4},{:.4},{},{:.4},{:.4},{:.4},{}\n",
            self.agent,
            self.scheme,
            self.trials,
            self.episodes,
            self.horizon,
            self.sr,
            self.srpl,
            self.cumulative_steps,
            self.mean_objects_found,
            self.mean_coverage,
            self.total_coverage,
            self.bound_violations
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOutcome {
    pub report: BenchReport,
    pub trials: Vec<TrialLog>,
}

/// Runs one trial: a fresh agent, `cfg.episodes` episodes with random starts.
/// Agent state carries over between the trial's episodes.
pub fn run_trial(
    scan: &ScanGraph,
    catalog: &PortableObjectCatalog,
    cfg: &BenchConfig,
    trial: usize,
    agent: &mut dyn BenchAgent,
) -> Result<TrialLog, MetricsError> {
    let seed = cfg.trial_seed(trial);
    let sched_cfg = cfg.schedule_config();
    let mut episodes = Vec::with_capacity(cfg.episodes);
    for ep in 0..cfg.episodes {
        let index = (trial * cfg.episodes + ep) as u64;
        let schedule = build_schedule(scan, catalog, &sched_cfg, cfg.scheme, index)?;
        let start = StartSpec::Random(seeding::derive_seed(seed, "start", ep as u64));
        let trace = run_episode(scan, &schedule, agent, &start)?;
        let optimal = if cfg.check_bound && schedule.object_count() <= MAX_DP_OBJECTS {
            let opts = SolverOptions { allow_wait: true };
            Some(optimal_value(scan, &schedule, &trace.start, cfg.horizon, opts)?.optimal_value)
        } else {
            None
        };
        episodes.push(EpisodeSummary {
            episode: ep,
            success: !trace.found.is_empty(),
            steps: trace.steps.len(),
            found: trace.steps.iter().flat_map(|s| s.found_now.iter().cloned()).collect(),
            visit_counts: trace.visit_counts,
            optimal_value: optimal,
            start: trace.start,
        });
    }
    Ok(TrialLog { trial, seed, episodes })
}

pub type AgentFactory<'a> = dyn Fn(usize, u64) -> Result<Box<dyn BenchAgent>, MetricsError> + Sync + 'a;

/// Full protocol. `make_agent(trial, trial_seed)` builds each trial's agent.
/// Trials are spread over `cfg.jobs` threads and reassembled in order.
pub fn run_benchmark(
    scan: &ScanGraph,
    catalog: &PortableObjectCatalog,
    cfg: &BenchConfig,
    make_agent: &AgentFactory<'_>,
) -> Result<BenchOutcome, MetricsError> {
    if cfg.trials == 0 || cfg.episodes == 0 {
        return Err(MetricsError::Empty);
    }
    let one = |trial: usize| -> Result<(TrialLog, AgentReport), MetricsError> {
        let mut agent = make_agent(trial, cfg.trial_seed(trial))?;
        let log = run_trial(scan, catalog, cfg, trial, agent.as_mut())?;
        Ok((log, agent.report()))
    };
    let jobs = cfg.jobs.clamp(1, cfg.trials);
    let results: Vec<Result<(TrialLog, AgentReport), MetricsError>> = if jobs == 1 {
        (0..cfg.trials).map(one).collect()
    } else {
        let mut slots: Vec<Option<Result<(TrialLog, AgentReport), MetricsError>>> = (0..cfg.trials).map(|_| None).collect();
        let chunk = cfg.trials.div_ceil(jobs);
        std::thread::scope(|scope| {
            for (c, part) in slots.chunks_mut(chunk).enumerate() {
                let one = &one;
                scope.spawn(move || {
                    for (i, slot) in part.iter_mut().enumerate() {
                        *slot = Some(one(c * chunk + i));
                    }
                });
            }
        });
        slots.into_iter().map(|s| s.expect("every trial ran")).collect()
    };
    let mut trials = Vec::with_capacity(cfg.trials);
    let mut agent_report = AgentReport::default();
    for r in results {
        let (log, rep) = r?;
        agent_report.add(&rep);
        trials.push(log);
    }
    let report = summarize(scan, catalog, cfg, &trials, agent_report)?;
    Ok(BenchOutcome { report, trials })
}

/// Recomputes the report fields from trial logs.
pub fn summarize(
    scan: &ScanGraph,
    catalog: &PortableObjectCatalog,
    cfg: &BenchConfig,
    trials: &[TrialLog],
    agent_report: AgentReport,
) -> Result<BenchReport, MetricsError> {
    let sr = success_rate(trials)?;
    let steps = cumulative_steps(trials);
    let (mean_coverage, total_coverage) = coverage_stats(trials, scan.len());
    let all: Vec<&EpisodeSummary> = trials.iter().flat_map(|t| &t.episodes).collect();
    let checked: Vec<(usize, usize)> = all
        .iter()
        .filter_map(|e| e.optimal_value.map(|o| (e.found.iter().collect::<BTreeSet<_>>().len(), o)))
        .collect();
    Ok(BenchReport {
        agent: cfg.agent.clone(),
        scheme: cfg.scheme,
        trials: trials.len(),
        episodes: cfg.episodes,
        horizon: cfg.horizon,
        seed: cfg.seed,
        sr,
        srpl: if steps >= 2 { srpl(sr, steps as f64)? } else { 0.0 },
        cumulative_steps: steps,
        trial_success_rates: trials.iter().map(|t| 100.0 * trial_success_fraction(t)).collect(),
        mean_objects_found: all.iter().map(|e| e.found.len() as f64).sum::<f64>() / all.len().max(1) as f64,
        object_frequency: object_frequency(trials, catalog.names()),
        mean_coverage,
        total_coverage,
        bound_checked: checked.len(),
        bound_violations: checked.iter().filter(|(f, o)| f > o).count(),
        agent_report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(successes: usize, total: usize) -> TrialLog {
        TrialLog {
            trial: 0,
            seed: 0,
            episodes: (0..total)
                .map(|i| EpisodeSummary {
                    episode: i,
                    start: "n00".into(),
                    success: i < successes,
                    steps: 30,
                    found: if i < successes { vec!["mug".into()] } else { vec![] },
                    visit_counts: vec![1, 0, 0],
                    optimal_value: None,
                })
                .collect(),
        }
    }

    #[test]
    fn success_rate_examples() {
        assert_eq!(success_rate(&[trial(7, 20)]).unwrap(), 35.0);
        assert_eq!(success_rate(&[trial(20, 20), trial(5, 5)]).unwrap(), 100.0);
        assert_eq!(success_rate(&[trial(10, 20), trial(0, 20)]).unwrap(), 25.0);
        assert!(success_rate(&[]).is_err());
        assert!(success_rate(&[trial(0, 0)]).is_err());
    }

    #[test]
    fn srpl_examples() {
        assert!((srpl(25.24, 6000.0).unwrap() - 2.9017).abs() < 1e-3);
        assert_eq!(srpl(0.0, 123.0).unwrap(), 0.0);
        let e2 = std::f64::consts::E.powi(2);
        assert!((srpl(10.0, e2).unwrap() - 5.0).abs() < 1e-12);
        assert!(srpl(10.0, 1.0).is_err());
        assert!(srpl(10.0, 100.0).unwrap() > srpl(10.0, 1000.0).unwrap());
    }

    #[test]
    fn coverage_examples() {
        let mut t = trial(0, 2);
        for e in &mut t.episodes {
            e.visit_counts = vec![1, 1, 1];
        }
        assert_eq!(coverage_stats(&[t.clone()], 3), (100.0, 100.0));
        let stationary = trial(0, 4);
        let (per, total) = coverage_stats(&[stationary], 3);
        assert!((per - 100.0 / 3.0).abs() < 1e-12);
        assert!((total - 100.0 / 3.0).abs() < 1e-12);
        let mut camp = trial(0, 3);
        for (i, e) in camp.episodes.iter_mut().enumerate() {
            e.visit_counts = vec![0; 53];
            e.visit_counts[i] = 30;
        }
        assert!((coverage_stats(&[camp], 53).1 - 300.0 / 53.0).abs() < 1e-12);
    }

    #[test]
    fn frequency_accounting() {
        let t = trial(3, 5);
        let f = object_frequency(std::slice::from_ref(&t), ["mug", "hat"]);
        assert_eq!(f["mug"], 3);
        assert_eq!(f["hat"], 0);
        let ends: usize = t.episodes.iter().map(|e| e.found.len()).sum();
        assert_eq!(f.values().sum::<usize>(), ends);
        assert!(object_frequency(&[trial(0, 3)], ["mug"]).values().all(|&c| c == 0));
    }
}
