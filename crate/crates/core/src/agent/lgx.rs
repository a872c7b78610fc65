//! Object-list navigation agents driven by an [`Oracle`], with optional
//! complete (log) or selective (tree) memory.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::memory::{find_nearest_path, MemoryBuffer, MemoryEntry, MemoryTree, TracebackPlan, DEFAULT_MEMORY_HORIZON};
use super::oracle::{Answer, Mode, Oracle, OracleRequest, RequestContext};
use super::prompts;
use crate::catalog::PortableObjectCatalog;
use crate::engine::{AgentView, NodeSummary, Policy, PolicyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Memoryless,
    Complete,
    Selective,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Memoryless, Variant::Complete, Variant::Selective];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Memoryless => "memoryless",
            Variant::Complete => "complete",
            Variant::Selective => "selective",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown agent variant {0:?} (expected memoryless, complete or selective)")]
pub struct UnknownVariant(String);

impl FromStr for Variant {
    type Err = UnknownVariant;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "memoryless" | "lgx" | "none" => Ok(Variant::Memoryless),
            "complete" | "complete-memory" => Ok(Variant::Complete),
            "selective" | "selective-memory" => Ok(Variant::Selective),
            _ => Err(UnknownVariant(s.to_string())),
        }
    }
}

/// Counters kept by an agent across its lifetime.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentDiagnostics {
    pub decisions: usize,
    /// Moves made at random because the chosen object could not be placed.
    pub fallback_moves: usize,
    pub plans_offered: usize,
    pub plans_accepted: usize,
    pub plans_completed: usize,
    pub plans_aborted: usize,
}

#[derive(Debug, Clone)]
struct ActivePlan {
    plan: TracebackPlan,
    next: usize,
}

pub struct LgxAgent<O> {
    variant: Variant,
    oracle: O,
    portables: PortableObjectCatalog,
    buffer: MemoryBuffer,
    tree: MemoryTree,
    plan: Option<ActivePlan>,
    /// `(object, scan node)` targets already traced to this episode.
    tried: BTreeSet<(String, String)>,
    rng: ChaCha8Rng,
    diagnostics: AgentDiagnostics,
}

impl<O: Oracle> LgxAgent<O> {
    pub fn new(variant: Variant, oracle: O, seed: u64) -> Self {
        Self::with_options(variant, oracle, PortableObjectCatalog::builtin(), DEFAULT_MEMORY_HORIZON, seed)
    }

    /// `portables` decides which seen names count as portable in memory.
    pub fn with_options(
        variant: Variant,
        oracle: O,
        portables: PortableObjectCatalog,
        memory_horizon: usize,
        seed: u64,
    ) -> Self {
        LgxAgent {
            variant,
            oracle,
            portables,
            buffer: MemoryBuffer::new(memory_horizon),
            tree: MemoryTree::new(),
            plan: None,
            tried: BTreeSet::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            diagnostics: AgentDiagnostics::default(),
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn oracle(&self) -> &O {
        &self.oracle
    }

    pub fn diagnostics(&self) -> AgentDiagnostics {
        self.diagnostics
    }

    pub fn buffer(&self) -> &MemoryBuffer {
        &self.buffer
    }

    pub fn tree(&self) -> &MemoryTree {
        &self.tree
    }

    /// Forgets everything learned so far (between trials).
    pub fn reset_memory(&mut self) {
        self.buffer.clear();
        self.tree = MemoryTree::new();
        self.plan = None;
        self.tried.clear();
    }

    fn begin_episode(&mut self, view: &AgentView<'_>) {
        self.plan = None;
        self.tried.clear();
        if self.variant == Variant::Selective {
            self.tree.anchor(view.scan.id(view.current), view.timestep());
        }
    }

    fn random_adjacent(&mut self, view: &AgentView<'_>) -> usize {
        self.diagnostics.fallback_moves += 1;
        *view.scan.adjacent(view.current).choose(&mut self.rng).expect("scan nodes have neighbours")
    }

    /// Continues an accepted traceback by one hop, if it is still walkable.
    fn follow_plan(&mut self, view: &AgentView<'_>) -> Option<usize> {
        let active = self.plan.as_mut()?;
        let target = view.scan.index_of(&active.plan.node_chain[active.next]).ok();
        match target {
            Some(u) if view.scan.is_adjacent(view.current, u) => {
                self.tree.set_current(active.plan.tree_path[active.next]);
                active.next += 1;
                if active.next == active.plan.node_chain.len() {
                    let done = self.plan.take().expect("active plan");
                    self.tried.insert((done.plan.target_object().to_string(), done.plan.target_node().to_string()));
                    self.diagnostics.plans_completed += 1;
                }
                Some(u)
            }
            _ => {
                self.plan = None;
                self.diagnostics.plans_aborted += 1;
                None
            }
        }
    }

    fn offer_plan(&mut self, view: &AgentView<'_>) -> Result<bool, PolicyError> {
        let here = view.scan.id(view.current);
        let mut sources: Vec<usize> = self.tree.nodes_at(here).to_vec();
        sources.push(self.tree.current());
        let tried = &self.tried;
        let plan = find_nearest_path(&self.tree, &sources, |n, _| {
            n.portable
                && n.graph_node != here
                && !view.found.contains(&n.object)
                && !tried.contains(&(n.object.clone(), n.graph_node.clone()))
        });
        let Some(plan) = plan else { return Ok(false) };
        self.diagnostics.plans_offered += 1;
        let request = OracleRequest {
            system: prompts::selective_system(&plan),
            user: prompts::FOLLOW_QUESTION.to_string(),
            candidates: Vec::new(),
            mode: Mode::YesNo,
            context: RequestContext {
                history: None,
                traceback_cost: Some(plan.cost),
                remaining_steps: view.remaining(),
            },
        };
        if self.oracle.respond(&request)? == Answer::Yes {
            self.diagnostics.plans_accepted += 1;
            self.plan = Some(ActivePlan { plan, next: 0 });
            return Ok(true);
        }
        Ok(false)
    }

    fn choose_object(&mut self, view: &AgentView<'_>, summaries: &[NodeSummary]) -> Result<usize, PolicyError> {
        let candidates: Vec<String> = summaries
            .iter()
            .flat_map(|s| s.scene_objects.iter().chain(&s.portables))
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if candidates.is_empty() {
            return Ok(self.random_adjacent(view));
        }
        let (system, history) = match self.variant {
            Variant::Complete => {
                (prompts::complete_system(self.buffer.entries()), Some(self.buffer.entries().cloned().collect()))
            }
            _ => (prompts::BASE_SYSTEM.to_string(), None),
        };
        let request = OracleRequest {
            system,
            user: prompts::choose_user(&candidates),
            candidates: candidates.clone(),
            mode: Mode::ChooseObject,
            context: RequestContext { history, traceback_cost: None, remaining_steps: view.remaining() },
        };
        let choice = match self.oracle.respond(&request)? {
            Answer::Object(o) => o,
            other => return Err(format!("oracle answered {other:?} to an object question").into()),
        };
        if self.variant == Variant::Complete {
            self.buffer.push(MemoryEntry { objects: candidates, action: choice.clone() });
        }
        // Summaries are ordered by node id already.
        let hit = summaries.iter().find(|s| s.contains(&choice));
        let next = match hit {
            Some(s) => view.scan.index_of(&s.node)?,
            None => return Ok(self.random_adjacent(view)),
        };
        if self.variant == Variant::Selective {
            self.tree.descend(&choice, view.scan.id(next));
        }
        Ok(next)
    }
}

impl<O: Oracle> Policy for LgxAgent<O> {
    fn act(&mut self, view: &AgentView<'_>) -> Result<usize, PolicyError> {
        if view.timestep() == 0 {
            self.begin_episode(view);
        }
        self.diagnostics.decisions += 1;
        let mut adjacent: Vec<usize> = view.scan.adjacent(view.current).to_vec();
        adjacent.sort_by(|&a, &b| view.scan.id(a).cmp(view.scan.id(b)));
        let summaries: Vec<NodeSummary> = adjacent.iter().map(|&u| view.node_summary(u)).collect();

        if self.variant == Variant::Selective {
            let portables = &self.portables;
            let seen: Vec<(&str, &str, bool)> = summaries
                .iter()
                .flat_map(|s| {
                    s.scene_objects
                        .iter()
                        .chain(&s.portables)
                        .map(move |o| (o.as_str(), s.node.as_str(), portables.contains(o)))
                })
                .collect();
            self.tree.record(view.timestep(), seen);
            if let Some(next) = self.follow_plan(view) {
                return Ok(next);
            }
            if self.offer_plan(view)? {
                if let Some(next) = self.follow_plan(view) {
                    return Ok(next);
                }
            }
        }
        self.choose_object(view, &summaries)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::agent::oracle::ScriptedOracle;
    use crate::engine::{run_episode, StartSpec};
    use crate::scan::{EdgeRecord, NodeRecord, RoomLabel, ScanGraph};
    use crate::schedule::{Interval, PlacementSchedule, ScheduleMeta, Scheme};

    fn graph(nodes: &[(&str, &[&str])], edges: &[(&str, &str)]) -> ScanGraph {
        ScanGraph::new(
            nodes
                .iter()
                .map(|(id, scene)| NodeRecord {
                    id: id.to_string(),
                    room: RoomLabel::Lounge,
                    pos: None,
                    scene: scene.iter().map(|s| s.to_string()).collect(),
                })
                .collect(),
            edges.iter().map(|(a, b)| EdgeRecord { a: a.to_string(), b: b.to_string(), dist: 1.0 }).collect(),
        )
        .unwrap()
    }

    fn fixed(horizon: u32, placements: &[(&str, &str)]) -> PlacementSchedule {
        let mut ts = BTreeMap::new();
        let mut ns = BTreeMap::new();
        for (o, n) in placements {
            ts.insert(o.to_string(), vec![Interval::new(1, horizon)]);
            ns.insert(o.to_string(), vec![n.to_string()]);
        }
        PlacementSchedule::from_parts(ts, ns, ScheduleMeta { scheme: Scheme::FullyRoutine, episode: 0, seed: 0, horizon, w: 1 })
            .unwrap()
    }

    #[test]
    fn memoryless_walks_to_visible_portable() {
        let g = graph(&[("A", &["sofa"]), ("B", &["lamp"])], &[("A", "B")]);
        let s = fixed(3, &[("mug", "B")]);
        let mut agent = LgxAgent::new(Variant::Memoryless, ScriptedOracle::default(), 0);
        let trace = run_episode(&g, &s, &mut agent, &StartSpec::Node("A".into())).unwrap();
        assert_eq!(trace.steps[0].node, "B");
        assert_eq!(trace.steps[0].found_now, vec!["mug".to_string()]);
        assert_eq!(trace.invalid_actions(), 0);
    }

    #[test]
    fn selective_offers_depth_two_plan() {
        // A - B - C; the mug sits at C. Episode 1 discovers it through B.
        let g = graph(&[("A", &["sofa"]), ("B", &["treadmill"]), ("C", &["toilet"])], &[("A", "B"), ("B", "C")]);
        let s = fixed(10, &[("mug", "C"), ("hat", "A")]);
        let mut agent = LgxAgent::new(Variant::Selective, ScriptedOracle::default(), 0);
        run_episode(&g, &s, &mut agent, &StartSpec::Node("A".into())).unwrap();
        assert!(!agent.tree().occurrences("mug").is_empty());

        let before = agent.diagnostics().plans_accepted;
        let trace = run_episode(&g, &s, &mut agent, &StartSpec::Node("A".into())).unwrap();
        assert!(agent.diagnostics().plans_accepted > before);
        assert!(trace.found.contains("mug"));
        assert_eq!(trace.invalid_actions(), 0);
    }

    #[test]
    fn complete_memory_fills_buffer() {
        let g = graph(&[("A", &["sofa"]), ("B", &["lamp"]), ("C", &["bed"])], &[("A", "B"), ("B", "C")]);
        let s = fixed(6, &[("mug", "C")]);
        let mut agent = LgxAgent::with_options(Variant::Complete, ScriptedOracle::default(), PortableObjectCatalog::builtin(), 3, 0);
        run_episode(&g, &s, &mut agent, &StartSpec::Node("A".into())).unwrap();
        assert!(agent.buffer().len() <= 3);
        assert!(!agent.buffer().is_empty());
    }

    #[test]
    fn variant_names() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("gpt".parse::<Variant>().is_err());
    }
}
