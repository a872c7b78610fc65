//! Object-search navigation over 3D scan graphs with time-varying placement
//! of portable objects.

pub mod agent;
pub mod catalog;
pub mod desk;
pub mod engine;
pub mod learner;
pub mod metrics;
pub mod scan;
pub mod schedule;
pub mod seeding;
pub mod solver;
pub mod stats;

pub use agent::{LgxAgent, Oracle, ScriptedOracle, Variant};
pub use catalog::{CatalogError, PortableObjectCatalog};
pub use desk::DeskBenchmark;
pub use engine::{
    run_episode, AgentView, Engine, EngineError, EpisodeState, EpisodeTrace, NodeSummary, Observation, Policy,
    PolicyError, StartSpec, StepResult,
};
pub use learner::{LearnerConfig, SchemePlan, TabularConfig, TrainingLog};
pub use metrics::{run_benchmark, BenchConfig, BenchReport, TrialLog};
pub use scan::{generate_synthetic_scan, EdgeRecord, NodeRecord, RoomLabel, ScanError, ScanGraph};
pub use schedule::{build_schedule, Interval, PlacementSchedule, ScheduleConfig, ScheduleError, Scheme};
pub use solver::{enumerate_all_paths_value, optimal_value, OptimalResult, SolverError, SolverOptions};
