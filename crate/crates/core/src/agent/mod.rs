//! Oracle-driven agents that pick a visible object and hop towards it.

pub mod http;
pub mod lgx;
pub mod memory;
pub mod oracle;
pub mod prompts;

pub use lgx::{AgentDiagnostics, LgxAgent, Variant};
pub use memory::{find_nearest_path, find_nearest_portable_path, MemoryBuffer, MemoryEntry, MemoryTree, TracebackPlan};
pub use oracle::{Answer, Mode, Oracle, OracleError, OracleRequest, OracleStats, ReplayOracle, ScriptedOracle};
