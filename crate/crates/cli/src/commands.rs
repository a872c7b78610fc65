use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use portnav_core::agent::http::{ChatClient, LlmOracle, RateLimiter};
use portnav_core::agent::oracle::RecordingOracle;
use portnav_core::agent::{LgxAgent, Oracle, OracleError, ReplayOracle, ScriptedOracle, Variant};
use portnav_core::learner::ppo::train_ppo;
use portnav_core::learner::tabular::tabular_q_train;
use portnav_core::learner::{PpoAgent, TabularAgent, TrainSetup};
use portnav_core::metrics::{heatmap_csv, summarize, AgentReport, BenchAgent, MetricsError};
use portnav_core::solver::optimum_variance;
use portnav_core::stats::mean;
use portnav_core::{
    build_schedule, optimal_value, run_benchmark, BenchConfig, BenchReport, PlacementSchedule, SchemePlan, SolverOptions,
    TrialLog,
};

use crate::config::{RunConfig, World};
use crate::output::OutDir;

/// Trial logs plus what is needed to recompute their report.
#[derive(Debug, Serialize, Deserialize)]
pub struct TrialsFile {
    pub config: BenchConfig,
    pub agent_report: AgentReport,
    pub trials: Vec<TrialLog>,
}

pub fn gen_scan(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    let world = World::load(cfg)?;
    let mut dir = OutDir::create(out)?;
    dir.seed("scan_seed", cfg.scan.seed);
    dir.write("scan.json", world.scan.to_json())?;
    dir.write("catalog.json", world.catalog.to_json())?;
    dir.finish("gen-scan", cfg)
}

pub fn gen_schedule(cfg: &RunConfig, episodes: &[u64], out: &Path) -> Result<()> {
    cfg.validate()?;
    let world = World::load(cfg)?;
    let mut dir = OutDir::create(out)?;
    dir.seed("seed", cfg.seed);
    for &ep in episodes {
        let s = build_schedule(&world.scan, &world.catalog, &cfg.schedule_config(), cfg.scheme, ep)
            .with_context(|| format!("episode {ep}"))?;
        dir.write(&format!("schedule_ep{ep}.json"), s.to_json())?;
    }
    dir.finish("gen-schedule", cfg)
}

#[derive(Serialize)]
struct TrainSummary {
    learner: String,
    plan: String,
    episodes: usize,
    first_100_mean_objects: f64,
    last_100_mean_objects: f64,
}

pub fn train(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    let world = World::load(cfg)?;
    let plan: SchemePlan = cfg.train.plan.parse().context("train.plan")?;
    let setup = TrainSetup {
        scan: &world.scan,
        catalog: &world.catalog,
        schedule: cfg.schedule_config(),
        plan,
        episodes: cfg.train.episodes,
        start: cfg.start_mode(),
    };
    let mut dir = OutDir::create(out)?;
    dir.seed("seed", cfg.seed);
    let log = match cfg.train.learner.as_str() {
        "ppo" => {
            dir.seed("learner_seed", cfg.learner.seed);
            let (log, agent) = train_ppo(&setup, cfg.learner.clone())?;
            dir.write("checkpoint.json", agent.to_checkpoint())?;
            dir.write("updates.csv", log.updates_csv())?;
            log
        }
        _ => {
            dir.seed("learner_seed", cfg.tabular.seed);
            let (log, agent) = tabular_q_train(&setup, &cfg.tabular)?;
            dir.write("checkpoint.json", agent.to_checkpoint())?;
            log
        }
    };
    dir.write("training.csv", log.to_csv())?;
    let curve = log.unique_objects();
    let window = curve.len().min(100);
    let summary = TrainSummary {
        learner: cfg.train.learner.clone(),
        plan: cfg.train.plan.clone(),
        episodes: curve.len(),
        first_100_mean_objects: if window > 0 { mean(&curve[..window]) } else { 0.0 },
        last_100_mean_objects: if window > 0 { mean(&curve[curve.len() - window..]) } else { 0.0 },
    };
    log::info!("last {window} episodes: {:.3} objects on average", summary.last_100_mean_objects);
    dir.write_json("summary.json", &summary)?;
    dir.finish("train", cfg)
}

/// Oracle for one trial of run `label`.
fn build_oracle(
    cfg: &RunConfig,
    limiter: &RateLimiter,
    label: &str,
    trial: usize,
    record_to: Option<&Path>,
) -> Result<Box<dyn Oracle>, OracleError> {
    let inner: Box<dyn Oracle> = match cfg.oracle.as_str() {
        "scripted" => Box::new(ScriptedOracle::default()),
        "endpoint" => {
            let client = ChatClient::from_env(cfg.endpoint.clone())?.with_limiter(limiter.clone());
            Box::new(LlmOracle::new(client, ScriptedOracle::default()))
        }
        other => {
            let path = PathBuf::from(other.strip_prefix("replay:").unwrap_or(other));
            let file = if path.is_dir() { path.join(label).join(format!("trial_{trial}.jsonl")) } else { path };
            Box::new(ReplayOracle::load(file)?)
        }
    };
    match record_to {
        Some(root) => {
            let dir = root.join(label);
            std::fs::create_dir_all(&dir)
                .map_err(|source| OracleError::Io { path: dir.display().to_string(), source })?;
            Ok(Box::new(RecordingOracle::create(inner, dir.join(format!("trial_{trial}.jsonl")))?))
        }
        None => Ok(inner),
    }
}

enum AgentKind {
    Lgx(Variant),
    Ppo(String),
    Tabular(String),
}

fn agent_kind(spec: &str, nodes: usize) -> Result<AgentKind> {
    if let Some(p) = spec.strip_prefix("ppo:") {
        let text = std::fs::read_to_string(p).with_context(|| format!("agent: reading {p}"))?;
        let agent = PpoAgent::from_checkpoint(&text).with_context(|| format!("agent: {p}"))?;
        if agent.nodes() != nodes {
            bail!("agent: checkpoint {p} was trained on {} nodes, scan has {nodes}", agent.nodes());
        }
        return Ok(AgentKind::Ppo(text));
    }
    if let Some(p) = spec.strip_prefix("tabular:") {
        let text = std::fs::read_to_string(p).with_context(|| format!("agent: reading {p}"))?;
        TabularAgent::from_checkpoint(&text).with_context(|| format!("agent: {p}"))?;
        return Ok(AgentKind::Tabular(text));
    }
    Ok(AgentKind::Lgx(spec.parse().map_err(|e| anyhow!("agent: {e}"))?))
}

struct RunOutput {
    report: BenchReport,
    trials: TrialsFile,
}

fn run_one(cfg: &RunConfig, world: &World, bench: BenchConfig, record_to: Option<&Path>) -> Result<RunOutput> {
    let kind = agent_kind(&bench.agent, world.scan.len())?;
    let label = format!("{}_{}", bench.agent.replace([':', '/', '\\'], "_"), bench.scheme);
    let limiter = RateLimiter::per_minute(cfg.endpoint.requests_per_minute);
    let agent_err = |e: &dyn std::fmt::Display| MetricsError::Agent(e.to_string());
    let factory = |trial: usize, seed: u64| -> Result<Box<dyn BenchAgent>, MetricsError> {
        Ok(match &kind {
            AgentKind::Lgx(v) => {
                let oracle = build_oracle(cfg, &limiter, &label, trial, record_to).map_err(|e| agent_err(&e))?;
                Box::new(LgxAgent::new(*v, oracle, seed))
            }
            AgentKind::Ppo(text) => Box::new(PpoAgent::from_checkpoint(text).map_err(|e| agent_err(&e))?),
            AgentKind::Tabular(text) => Box::new(TabularAgent::from_checkpoint(text).map_err(|e| agent_err(&e))?),
        })
    };
    let outcome = run_benchmark(&world.scan, &world.catalog, &bench, &factory)
        .with_context(|| format!("{} under {}", bench.agent, bench.scheme))?;
    let trials = TrialsFile { config: bench, agent_report: outcome.report.agent_report, trials: outcome.trials };
    Ok(RunOutput { report: outcome.report, trials })
}

fn register_traffic(dir: &mut OutDir) -> Result<()> {
    let root = dir.path("traffic");
    if !root.exists() {
        return Ok(());
    }
    let mut files = Vec::new();
    for sub in std::fs::read_dir(&root)? {
        for f in std::fs::read_dir(sub?.path())? {
            files.push(f?.path());
        }
    }
    files.sort();
    for f in files {
        let rel = f.strip_prefix(dir.path("")).expect("under output dir").to_string_lossy().replace('\\', "/");
        dir.register(&rel)?;
    }
    Ok(())
}

pub fn eval(cfg: &RunConfig, record: bool, out: &Path) -> Result<()> {
    cfg.validate()?;
    let world = World::load(cfg)?;
    let mut dir = OutDir::create(out)?;
    dir.seed("seed", cfg.seed);
    let traffic = dir.path("traffic");
    let run = run_one(cfg, &world, cfg.bench_config(&cfg.agent, cfg.scheme), record.then_some(traffic.as_path()))?;
    dir.write("report.json", run.report.to_json())?;
    dir.write("report.csv", format!("{}{}", BenchReport::csv_header(), run.report.csv_row()))?;
    dir.write("heatmap.csv", heatmap_csv(&run.trials.trials, &world.scan))?;
    dir.write_json("trials.json", &run.trials)?;
    register_traffic(&mut dir)?;
    if run.report.bound_violations > 0 {
        log::warn!("{} episodes beat the computed optimum", run.report.bound_violations);
    }
    dir.finish("eval", cfg)
}

pub fn bench(cfg: &RunConfig, record: bool, out: &Path) -> Result<()> {
    cfg.validate()?;
    let world = World::load(cfg)?;
    let mut dir = OutDir::create(out)?;
    dir.seed("seed", cfg.seed);
    let traffic = dir.path("traffic");
    let mut csv = String::from(BenchReport::csv_header());
    let mut reports = Vec::new();
    for scheme in portnav_core::Scheme::ALL {
        for variant in Variant::ALL {
            let name = format!("{variant}_{scheme}");
            log::info!("running {name}");
            let run = run_one(cfg, &world, cfg.bench_config(variant.as_str(), scheme), record.then_some(traffic.as_path()))?;
            dir.write(&format!("reports/{name}.json"), run.report.to_json())?;
            dir.write_json(&format!("trials/{name}.json"), &run.trials)?;
            csv.push_str(&run.report.csv_row());
            reports.push(run.report);
        }
    }
    dir.write("bench.csv", csv)?;
    dir.write_json("bench.json", &reports)?;
    register_traffic(&mut dir)?;
    dir.finish("bench", cfg)
}

pub struct OracleRequest {
    pub episodes: u64,
    pub episode: u64,
    pub schedule_file: Option<PathBuf>,
    pub start: Option<String>,
    pub wait: bool,
}

pub fn oracle(cfg: &RunConfig, req: &OracleRequest, out: &Path) -> Result<()> {
    cfg.validate()?;
    let world = World::load(cfg)?;
    let start = req.start.clone().unwrap_or_else(|| world.scan.id(0).to_string());
    let opts = SolverOptions { allow_wait: req.wait };
    let schedule = match &req.schedule_file {
        Some(p) => PlacementSchedule::load(p).with_context(|| format!("schedule {}", p.display()))?,
        None => build_schedule(&world.scan, &world.catalog, &cfg.schedule_config(), cfg.scheme, req.episode)?,
    };
    let horizon = schedule.horizon();
    let mut dir = OutDir::create(out)?;
    dir.seed("seed", cfg.seed);
    let result = optimal_value(&world.scan, &schedule, &start, horizon, opts)?;
    dir.write_json("optimal.json", &result)?;
    if req.episodes > 0 {
        let report = optimum_variance(
            &world.scan,
            &world.catalog,
            &cfg.schedule_config(),
            cfg.scheme,
            &start,
            req.episodes,
            opts,
            cfg.jobs,
        )?;
        dir.write_json("variance.json", &report)?;
    }
    dir.finish("oracle", cfg)
}

pub fn stats(cfg: &RunConfig, trials_path: &Path, out: &Path) -> Result<()> {
    cfg.validate()?;
    let world = World::load(cfg)?;
    let text = std::fs::read_to_string(trials_path).with_context(|| format!("reading {}", trials_path.display()))?;
    let file: TrialsFile = serde_json::from_str(&text).with_context(|| format!("trials file {}", trials_path.display()))?;
    if let Some(bad) = file.trials.iter().flat_map(|t| &t.episodes).find(|e| e.visit_counts.len() != world.scan.len()) {
        bail!("trials file episode {} has {} nodes, scan has {}", bad.episode, bad.visit_counts.len(), world.scan.len());
    }
    let report = summarize(&world.scan, &world.catalog, &file.config, &file.trials, file.agent_report)?;
    let mut dir = OutDir::create(out)?;
    dir.write("report.json", report.to_json())?;
    dir.write("report.csv", format!("{}{}", BenchReport::csv_header(), report.csv_row()))?;
    dir.write("heatmap.csv", heatmap_csv(&file.trials, &world.scan))?;
    let mut cfg = cfg.clone();
    cfg.agent = file.config.agent.clone();
    dir.finish("stats", &cfg)
}
