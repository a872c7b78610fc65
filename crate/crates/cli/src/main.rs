mod commands;
mod config;
mod output;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;
use portnav_core::Scheme;

#[derive(Parser)]
#[command(name = "portnav", version, about = "Navigation benchmarks with moving portable objects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for trials or episodes.
    #[arg(long)]
    jobs: Option<usize>,
    /// Base seed for placements, starts and agents.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone, Default)]
struct WorldArgs {
    /// Scan graph file.
    #[arg(long)]
    scan: Option<PathBuf>,
    /// Use the fixed 20-node desk house and its five objects.
    #[arg(long)]
    desk: bool,
    /// Node count of the synthetic scan.
    #[arg(long)]
    nodes: Option<usize>,
    /// Seed of the synthetic scan.
    #[arg(long)]
    scan_seed: Option<u64>,
    /// Catalog file replacing the built-in object table.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Comma-separated subset of catalog objects.
    #[arg(long, value_delimiter = ',')]
    objects: Option<Vec<String>>,
}

#[derive(Args, Clone, Default)]
struct ScheduleArgs {
    /// Episode length T.
    #[arg(long)]
    horizon: Option<u32>,
    /// Minimum steps an object stays put.
    #[arg(long)]
    waiting_period: Option<u32>,
    /// Soft cap on interval length; 0 disables it.
    #[arg(long)]
    max_interval: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolName {
    /// 10 trials x 20 episodes x 30 steps on the configured scan.
    Standard,
    /// The same protocol on the desk house.
    Desk,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic (or the desk) scan graph and its catalog.
    GenScan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        world: WorldArgs,
    },
    /// Write placement schedules for the given episode indices.
    GenSchedule {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        world: WorldArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(long)]
        scheme: Option<Scheme>,
        /// Comma-separated episode indices.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        episodes: Vec<u64>,
    },
    /// Train a tabular or PPO learner and log per-episode statistics.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        world: WorldArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// tabular or ppo.
        #[arg(long)]
        learner: Option<String>,
        /// Scheme, or comma-separated schemes applied in equal blocks of episodes.
        #[arg(long)]
        plan: Option<String>,
        #[arg(long)]
        episodes: Option<usize>,
        /// Start node id, or `random`.
        #[arg(long)]
        start: Option<String>,
    },
    /// Benchmark one agent and write its report.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        world: WorldArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        scheme: Option<Scheme>,
        /// memoryless, complete, selective, ppo:CHECKPOINT or tabular:CHECKPOINT.
        #[arg(long)]
        agent: Option<String>,
    },
    /// Run every memory variant under every placement scheme.
    Bench {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        world: WorldArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "standard")]
        protocol: ProtocolName,
    },
    /// Exact optimum for one schedule and its spread over many episodes.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        world: WorldArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(long)]
        scheme: Option<Scheme>,
        /// Episodes for the variance report; 0 skips it.
        #[arg(long, default_value_t = 0)]
        episodes: u64,
        /// Episode whose schedule is solved.
        #[arg(long, default_value_t = 0)]
        episode: u64,
        /// Solve this schedule file instead of building one.
        #[arg(long)]
        schedule_file: Option<PathBuf>,
        /// Start node id; defaults to the first node.
        #[arg(long)]
        start: Option<String>,
        /// Allow standing still, as an agent's invalid move does.
        #[arg(long)]
        wait: bool,
    },
    /// Recompute a report from a trials file written by eval or bench.
    Stats {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        world: WorldArgs,
        /// trials JSON file.
        #[arg(long)]
        trials: PathBuf,
    },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    #[arg(long)]
    trials: Option<usize>,
    /// Episodes per trial.
    #[arg(long)]
    episodes: Option<usize>,
    /// scripted, replay:PATH (file or directory of per-trial files) or endpoint.
    #[arg(long)]
    oracle: Option<String>,
    /// Record oracle traffic under OUT/traffic.
    #[arg(long)]
    record: bool,
    /// Skip the per-episode optimum check.
    #[arg(long)]
    no_bound: bool,
}

fn base_config(common: &Common, world: &WorldArgs, schedule: &ScheduleArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(j) = common.jobs {
        cfg.jobs = j;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
        cfg.learner.seed = s;
        cfg.tabular.seed = s;
    }
    if let Some(p) = &world.scan {
        cfg.scan.path = Some(p.clone());
    }
    cfg.scan.desk |= world.desk;
    if let Some(n) = world.nodes {
        cfg.scan.nodes = n;
    }
    if let Some(s) = world.scan_seed {
        cfg.scan.seed = s;
    }
    if let Some(p) = &world.catalog {
        cfg.catalog = Some(p.clone());
    }
    if let Some(o) = &world.objects {
        cfg.objects = Some(o.clone());
    }
    if let Some(h) = schedule.horizon {
        cfg.protocol.horizon = h;
    }
    if let Some(w) = schedule.waiting_period {
        cfg.protocol.waiting_period = w;
    }
    if let Some(m) = schedule.max_interval {
        cfg.protocol.max_interval = (m > 0).then_some(m);
    }
    Ok(cfg)
}

fn apply_run(cfg: &mut RunConfig, run: &RunArgs) {
    if let Some(t) = run.trials {
        cfg.protocol.trials = t;
    }
    if let Some(e) = run.episodes {
        cfg.protocol.episodes = e;
    }
    if let Some(o) = &run.oracle {
        cfg.oracle = o.clone();
    }
    if run.no_bound {
        cfg.check_bound = false;
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::GenScan { common, world } => {
            let cfg = base_config(&common, &world, &ScheduleArgs::default())?;
            commands::gen_scan(&cfg, &common.out)
        }
        Command::GenSchedule { common, world, schedule, scheme, episodes } => {
            let mut cfg = base_config(&common, &world, &schedule)?;
            if let Some(s) = scheme {
                cfg.scheme = s;
            }
            commands::gen_schedule(&cfg, &episodes, &common.out)
        }
        Command::Train { common, world, schedule, learner, plan, episodes, start } => {
            let mut cfg = base_config(&common, &world, &schedule)?;
            if let Some(l) = learner {
                cfg.train.learner = l;
            }
            if let Some(p) = plan {
                cfg.train.plan = p;
            }
            if let Some(e) = episodes {
                cfg.train.episodes = e;
            }
            if let Some(s) = start {
                cfg.train.start = s;
            }
            commands::train(&cfg, &common.out)
        }
        Command::Eval { common, world, schedule, run, scheme, agent } => {
            let mut cfg = base_config(&common, &world, &schedule)?;
            apply_run(&mut cfg, &run);
            if let Some(s) = scheme {
                cfg.scheme = s;
            }
            if let Some(a) = agent {
                cfg.agent = a;
            }
            commands::eval(&cfg, run.record, &common.out)
        }
        Command::Bench { common, world, schedule, run, protocol } => {
            let mut cfg = base_config(&common, &world, &schedule)?;
            apply_run(&mut cfg, &run);
            if matches!(protocol, ProtocolName::Desk) {
                cfg.scan.desk = true;
            }
            commands::bench(&cfg, run.record, &common.out)
        }
        Command::Oracle { common, world, schedule, scheme, episodes, episode, schedule_file, start, wait } => {
            let mut cfg = base_config(&common, &world, &schedule)?;
            if let Some(s) = scheme {
                cfg.scheme = s;
            }
            let req = commands::OracleRequest { episodes, episode, schedule_file, start, wait };
            commands::oracle(&cfg, &req, &common.out)
        }
        Command::Stats { common, world, trials } => {
            let cfg = base_config(&common, &world, &ScheduleArgs::default())?;
            commands::stats(&cfg, &trials, &common.out)
        }
    }
}
