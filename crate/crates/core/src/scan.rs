//! Topological house graphs: room-labelled viewpoints joined by weighted edges.
//!
//! A [`ScanGraph`] is immutable once built. Nodes keep their file order; that
//! order defines the action/observation index used by the episode engine.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Room type attached to every viewpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RoomLabel {
    Bedroom,
    Garage,
    Dining,
    Office,
    Bathroom,
    Kitchen,
    Lounge,
    Gym,
    Outdoor,
    Recreation,
    Other,
}

impl RoomLabel {
    pub const ALL: [RoomLabel; 11] = [
        RoomLabel::Bedroom,
        RoomLabel::Garage,
        RoomLabel::Dining,
        RoomLabel::Office,
        RoomLabel::Bathroom,
        RoomLabel::Kitchen,
        RoomLabel::Lounge,
        RoomLabel::Gym,
        RoomLabel::Outdoor,
        RoomLabel::Recreation,
        RoomLabel::Other,
    ];

    /// The ten rooms that host portable objects.
    pub const NAMED: [RoomLabel; 10] = [
        RoomLabel::Bedroom,
        RoomLabel::Garage,
        RoomLabel::Dining,
        RoomLabel::Office,
        RoomLabel::Bathroom,
        RoomLabel::Kitchen,
        RoomLabel::Lounge,
        RoomLabel::Gym,
        RoomLabel::Outdoor,
        RoomLabel::Recreation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoomLabel::Bedroom => "Bedroom",
            RoomLabel::Garage => "Garage",
            RoomLabel::Dining => "Dining",
            RoomLabel::Office => "Office",
            RoomLabel::Bathroom => "Bathroom",
            RoomLabel::Kitchen => "Kitchen",
            RoomLabel::Lounge => "Lounge",
            RoomLabel::Gym => "Gym",
            RoomLabel::Outdoor => "Outdoor",
            RoomLabel::Recreation => "Recreation",
            RoomLabel::Other => "Other",
        }
    }

    pub fn parse(s: &str) -> Option<RoomLabel> {
        RoomLabel::ALL.iter().copied().find(|r| r.as_str() == s)
    }

    /// Furniture labels a detector would typically report in this room.
    /// Labels are unique across rooms so a label identifies its room.
    pub fn furniture(self) -> &'static [&'static str] {
        match self {
            RoomLabel::Bedroom => &[
                "bed", "nightstand", "wardrobe", "dresser", "pillow", "duvet", "alarm clock", "vanity",
            ],
            RoomLabel::Garage => &[
                "car", "workbench", "toolbox", "bicycle", "ladder", "tire", "lawnmower", "garage shelf",
            ],
            RoomLabel::Dining => &[
                "dining table", "dining chair", "sideboard", "chandelier", "china cabinet", "placemat",
                "centerpiece", "candle",
            ],
            RoomLabel::Office => &[
                "desk", "office chair", "monitor", "printer", "filing cabinet", "keyboard", "whiteboard",
                "desk lamp",
            ],
            RoomLabel::Bathroom => &[
                "toilet", "bathtub", "shower", "towel", "bathroom sink", "medicine cabinet", "bath mat",
                "toilet paper",
            ],
            RoomLabel::Kitchen => &[
                "refrigerator", "stove", "oven", "microwave", "dishwasher", "kitchen counter", "toaster",
                "kettle",
            ],
            RoomLabel::Lounge => &[
                "sofa", "coffee table", "television", "armchair", "fireplace", "bookshelf", "floor lamp",
                "rug",
            ],
            RoomLabel::Gym => &[
                "treadmill", "exercise bike", "weight rack", "yoga mat", "bench press", "rowing machine",
                "kettlebell", "wall mirror",
            ],
            RoomLabel::Outdoor => &[
                "patio chair", "grill", "potted plant", "fence", "parasol", "garden bench", "hose",
                "picnic table",
            ],
            RoomLabel::Recreation => &[
                "pool table", "ping pong table", "arcade machine", "dartboard", "bar stool", "foosball table",
                "jukebox", "card table",
            ],
            RoomLabel::Other => &[
                "door", "stairs", "window", "painting", "coat rack", "umbrella stand", "shoe rack", "radiator",
            ],
        }
    }

    /// Inverse of [`RoomLabel::furniture`].
    pub fn of_furniture(label: &str) -> Option<RoomLabel> {
        RoomLabel::ALL
            .iter()
            .copied()
            .find(|r| r.furniture().contains(&label))
    }
}

impl fmt::Display for RoomLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    pub room: RoomLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<[f64; 3]>,
    /// Static scene objects visible at this viewpoint.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scene: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub a: String,
    pub b: String,
    pub dist: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ScanError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("scan has no nodes")]
    Empty,
    #[error("duplicate node id {0:?}")]
    DuplicateId(String),
    #[error("dangling edge: {a:?} -- {b:?} references unknown node")]
    DanglingEdge { a: String, b: String },
    #[error("self-loop on node {0:?}")]
    SelfLoop(String),
    #[error("duplicate edge {a:?} -- {b:?}")]
    DuplicateEdge { a: String, b: String },
    #[error("non-positive distance {dist} on edge {a:?} -- {b:?}")]
    NonPositiveDistance { a: String, b: String, dist: f64 },
    #[error("disconnected: {unreached} of {total} nodes unreachable from {root:?}")]
    Disconnected { root: String, unreached: usize, total: usize },
    #[error("unknown node id {0:?}")]
    UnknownNode(String),
    #[error("invalid generator arguments: {0}")]
    InvalidArguments(String),
}

#[derive(Serialize, Deserialize)]
struct ScanFile {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
}

/// Undirected, connected topological graph of one house.
#[derive(Debug, Clone)]
pub struct ScanGraph {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<usize>>,
}

impl PartialEq for ScanGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl ScanGraph {
    /// Validates the records and builds the adjacency map.
    pub fn new(nodes: Vec<NodeRecord>, edges: Vec<EdgeRecord>) -> Result<Self, ScanError> {
        if nodes.is_empty() {
            return Err(ScanError::Empty);
        }
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id.clone(), i).is_some() {
                return Err(ScanError::DuplicateId(n.id.clone()));
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut seen = BTreeSet::new();
        for e in &edges {
            let (Some(&ia), Some(&ib)) = (index.get(&e.a), index.get(&e.b)) else {
                return Err(ScanError::DanglingEdge { a: e.a.clone(), b: e.b.clone() });
            };
            if ia == ib {
                return Err(ScanError::SelfLoop(e.a.clone()));
            }
            if e.dist <= 0.0 || !e.dist.is_finite() {
                return Err(ScanError::NonPositiveDistance { a: e.a.clone(), b: e.b.clone(), dist: e.dist });
            }
            if !seen.insert((ia.min(ib), ia.max(ib))) {
                return Err(ScanError::DuplicateEdge { a: e.a.clone(), b: e.b.clone() });
            }
            adjacency[ia].push(ib);
            adjacency[ib].push(ia);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }

        let mut reached = vec![false; nodes.len()];
        let mut queue = VecDeque::from([0usize]);
        reached[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adjacency[v] {
                if !reached[w] {
                    reached[w] = true;
                    queue.push_back(w);
                }
            }
        }
        let unreached = reached.iter().filter(|r| !**r).count();
        if unreached > 0 {
            return Err(ScanError::Disconnected { root: nodes[0].id.clone(), unreached, total: nodes.len() });
        }

        Ok(ScanGraph { nodes, edges, index, adjacency })
    }

    pub fn from_json(text: &str) -> Result<Self, ScanError> {
        let file: ScanFile = serde_json::from_str(text)?;
        ScanGraph::new(file.nodes, file.edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScanError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ScanError::Io { path: path.display().to_string(), source })?;
        ScanGraph::from_json(&text)
    }

    /// Serializes with one node or edge record per line.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\"nodes\":[\n");
        for (i, n) in self.nodes.iter().enumerate() {
            out.push_str(&serde_json::to_string(n).expect("node record serializes"));
            out.push_str(if i + 1 < self.nodes.len() { ",\n" } else { "\n" });
        }
        out.push_str("],\n\"edges\":[\n");
        for (i, e) in self.edges.iter().enumerate() {
            out.push_str(&serde_json::to_string(e).expect("edge record serializes"));
            out.push_str(if i + 1 < self.edges.len() { ",\n" } else { "\n" });
        }
        out.push_str("]}\n");
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScanError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|source| ScanError::Io { path: path.display().to_string(), source })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn node(&self, idx: usize) -> &NodeRecord {
        &self.nodes[idx]
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.nodes[idx].id
    }

    pub fn index_of(&self, id: &str) -> Result<usize, ScanError> {
        self.index.get(id).copied().ok_or_else(|| ScanError::UnknownNode(id.to_string()))
    }

    /// Neighbor indices of `idx`, ascending.
    pub fn adjacent(&self, idx: usize) -> &[usize] {
        &self.adjacency[idx]
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.adjacency[idx].len()
    }

    pub fn neighbors(&self, id: &str) -> Result<BTreeSet<&str>, ScanError> {
        let idx = self.index_of(id)?;
        Ok(self.adjacency[idx].iter().map(|&j| self.nodes[j].id.as_str()).collect())
    }

    pub fn nodes_in_room(&self, room: RoomLabel) -> BTreeSet<&str> {
        self.nodes.iter().filter(|n| n.room == room).map(|n| n.id.as_str()).collect()
    }

    /// Indices of nodes in `room`, in node order.
    pub fn room_indices(&self, room: RoomLabel) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].room == room).collect()
    }

    pub fn rooms(&self) -> BTreeSet<RoomLabel> {
        self.nodes.iter().map(|n| n.room).collect()
    }

    /// Scene objects at `idx`. Nodes loaded without a `scene` list fall back to
    /// a fixed selection from their room's furniture table.
    pub fn scene_objects(&self, idx: usize) -> Vec<String> {
        let node = &self.nodes[idx];
        if !node.scene.is_empty() {
            return node.scene.clone();
        }
        let table = node.room.furniture();
        let h = crate::seeding::fnv1a(node.id.as_bytes()) as usize;
        (0..3).map(|k| table[(h + k * 3) % table.len()].to_string()).collect::<BTreeSet<_>>().into_iter().collect()
    }
}

/// Default fraction of extra edges added on top of the spanning tree.
pub const DEFAULT_EXTRA_EDGE_DENSITY: f64 = 0.3;

/// Synthesizes a connected house graph with default edge density.
pub fn generate_synthetic_scan(
    seed: u64,
    n_nodes: usize,
    room_mix: &BTreeMap<RoomLabel, f64>,
) -> Result<ScanGraph, ScanError> {
    generate_synthetic_scan_with(seed, n_nodes, room_mix, DEFAULT_EXTRA_EDGE_DENSITY)
}

/// Synthesizes a house graph: rooms are contiguous clusters of 2-6 nodes
/// joined by a random spanning tree, plus `⌊density·n⌋` extra edges.
pub fn generate_synthetic_scan_with(
    seed: u64,
    n_nodes: usize,
    room_mix: &BTreeMap<RoomLabel, f64>,
    extra_edge_density: f64,
) -> Result<ScanGraph, ScanError> {
    if n_nodes < 2 {
        return Err(ScanError::InvalidArguments(format!("n_nodes must be >= 2, got {n_nodes}")));
    }
    if room_mix.values().any(|w| *w < 0.0 || !w.is_finite()) || !room_mix.values().any(|w| *w > 0.0) {
        return Err(ScanError::InvalidArguments("room_mix needs non-negative weights, at least one positive".into()));
    }
    if extra_edge_density < 0.0 || !extra_edge_density.is_finite() {
        return Err(ScanError::InvalidArguments(format!("extra edge density must be >= 0, got {extra_edge_density}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rooms: Vec<RoomLabel> = room_mix.keys().copied().collect();
    let weights: Vec<f64> = room_mix.values().copied().collect();
    let room_dist = WeightedIndex::new(&weights).map_err(|e| ScanError::InvalidArguments(e.to_string()))?;

    // Cluster sizes in [2, 6]; a leftover single node joins the last cluster.
    let mut sizes = Vec::new();
    let mut remaining = n_nodes;
    while remaining > 0 {
        let s = rng.random_range(2..=6).min(remaining);
        if s == 1 {
            *sizes.last_mut().expect("n_nodes >= 2 leaves a previous cluster") += 1;
        } else {
            sizes.push(s);
        }
        remaining -= s;
    }

    let width = (n_nodes - 1).to_string().len().max(2);
    let mut nodes = Vec::with_capacity(n_nodes);
    let mut clusters: Vec<Vec<usize>> = Vec::with_capacity(sizes.len());
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (c, &size) in sizes.iter().enumerate() {
        let room = rooms[room_dist.sample(&mut rng)];
        let cx = (c % 4) as f64 * 6.0 + rng.random_range(-1.0..1.0);
        let cy = (c / 4) as f64 * 6.0 + rng.random_range(-1.0..1.0);
        let mut members = Vec::with_capacity(size);
        for k in 0..size {
            let idx = nodes.len();
            let pos = [
                round_mm(cx + rng.random_range(-2.0..2.0)),
                round_mm(cy + rng.random_range(-2.0..2.0)),
                if (c / 8) % 2 == 0 { 0.0 } else { 3.0 },
            ];
            let table = room.furniture();
            let count = rng.random_range(3..=8usize.min(table.len()));
            let mut scene: Vec<String> = table.choose_multiple(&mut rng, count).map(|s| s.to_string()).collect();
            scene.sort();
            nodes.push(NodeRecord { id: format!("n{idx:0width$}"), room, pos: Some(pos), scene });
            if k > 0 {
                let parent = members[rng.random_range(0..members.len())];
                edges.push((parent, idx));
            }
            members.push(idx);
        }
        if c > 0 {
            let other = &clusters[rng.random_range(0..clusters.len())];
            let a = other[rng.random_range(0..other.len())];
            let b = members[rng.random_range(0..members.len())];
            edges.push((a, b));
        }
        clusters.push(members);
    }

    let mut present: BTreeSet<(usize, usize)> = edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let extra = (extra_edge_density * n_nodes as f64).floor() as usize;
    let mut added = 0;
    let mut attempts = 0;
    while added < extra && attempts < 100 * (extra + 1) {
        attempts += 1;
        let (a, b) = if rng.random_bool(0.5) {
            let big: Vec<&Vec<usize>> = clusters.iter().filter(|c| c.len() >= 3).collect();
            match big.choose(&mut rng) {
                Some(c) => (c[rng.random_range(0..c.len())], c[rng.random_range(0..c.len())]),
                None => continue,
            }
        } else {
            (rng.random_range(0..n_nodes), rng.random_range(0..n_nodes))
        };
        if a == b || !present.insert((a.min(b), a.max(b))) {
            continue;
        }
        edges.push((a, b));
        added += 1;
    }

    edges.sort_by_key(|&(a, b)| (a.min(b), a.max(b)));
    let edge_records = edges
        .into_iter()
        .map(|(a, b)| {
            let (a, b) = (a.min(b), a.max(b));
            let pa = nodes[a].pos.expect("synthetic nodes carry positions");
            let pb = nodes[b].pos.expect("synthetic nodes carry positions");
            let d = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2) + (pa[2] - pb[2]).powi(2)).sqrt();
            EdgeRecord { a: nodes[a].id.clone(), b: nodes[b].id.clone(), dist: round_mm(d.max(0.25)) }
        })
        .collect();

    ScanGraph::new(nodes, edge_records)
}

/// Equal weight on every named room.
pub fn uniform_room_mix() -> BTreeMap<RoomLabel, f64> {
    RoomLabel::NAMED.iter().map(|&r| (r, 1.0)).collect()
}

fn round_mm(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str, room: RoomLabel) -> NodeRecord {
        NodeRecord { id: id.into(), room, pos: None, scene: Vec::new() }
    }

    fn edge(a: &str, b: &str) -> EdgeRecord {
        EdgeRecord { a: a.into(), b: b.into(), dist: 1.0 }
    }

    fn triangle() -> ScanGraph {
        ScanGraph::new(
            vec![node("A", RoomLabel::Bedroom), node("B", RoomLabel::Bedroom), node("C", RoomLabel::Bedroom)],
            vec![edge("A", "B"), edge("B", "C"), edge("C", "A")],
        )
        .unwrap()
    }

    #[test]
    fn triangle_neighbors() {
        let g = triangle();
        assert_eq!(g.neighbors("A").unwrap(), BTreeSet::from(["B", "C"]));
        assert_eq!(g.nodes_in_room(RoomLabel::Bedroom).len(), 3);
        assert!(g.nodes_in_room(RoomLabel::Garage).is_empty());
    }

    #[test]
    fn path_and_star_neighbors() {
        let path = ScanGraph::new(
            vec![node("A", RoomLabel::Other), node("B", RoomLabel::Other), node("C", RoomLabel::Other)],
            vec![edge("A", "B"), edge("B", "C")],
        )
        .unwrap();
        assert_eq!(path.neighbors("B").unwrap(), BTreeSet::from(["A", "C"]));

        let mut nodes = vec![node("hub", RoomLabel::Lounge)];
        let mut edges = Vec::new();
        for i in 0..5 {
            let id = format!("leaf{i}");
            edges.push(edge("hub", &id));
            nodes.push(node(&id, RoomLabel::Lounge));
        }
        let star = ScanGraph::new(nodes, edges).unwrap();
        assert_eq!(star.neighbors("leaf3").unwrap(), BTreeSet::from(["hub"]));
        assert_eq!(star.degree(0), 5);
    }

    #[test]
    fn unknown_node_is_error() {
        assert!(matches!(triangle().neighbors("Z"), Err(ScanError::UnknownNode(_))));
    }

    #[test]
    fn validation_errors() {
        let dangling = r#"{"nodes":[{"id":"A","room":"Gym"},{"id":"B","room":"Gym"}],
            "edges":[{"a":"A","b":"B","dist":1.0},{"a":"A","b":"Z","dist":1.0}]}"#;
        let err = ScanGraph::from_json(dangling).unwrap_err();
        assert!(matches!(err, ScanError::DanglingEdge { .. }));
        assert!(err.to_string().contains("dangling edge"));

        let dup = r#"{"nodes":[{"id":"A","room":"Gym"},{"id":"A","room":"Gym"}],"edges":[]}"#;
        assert!(matches!(ScanGraph::from_json(dup), Err(ScanError::DuplicateId(_))));

        let disconnected = r#"{"nodes":[{"id":"A","room":"Gym"},{"id":"B","room":"Gym"}],"edges":[]}"#;
        assert!(matches!(ScanGraph::from_json(disconnected), Err(ScanError::Disconnected { .. })));

        let zero = r#"{"nodes":[{"id":"A","room":"Gym"},{"id":"B","room":"Gym"}],
            "edges":[{"a":"A","b":"B","dist":0.0}]}"#;
        assert!(matches!(ScanGraph::from_json(zero), Err(ScanError::NonPositiveDistance { .. })));

        let bad_room = r#"{"nodes":[{"id":"A","room":"Attic"}],"edges":[]}"#;
        assert!(matches!(ScanGraph::from_json(bad_room), Err(ScanError::Parse(_))));

        let self_loop = r#"{"nodes":[{"id":"A","room":"Gym"}],"edges":[{"a":"A","b":"A","dist":1.0}]}"#;
        assert!(matches!(ScanGraph::from_json(self_loop), Err(ScanError::SelfLoop(_))));

        let dup_edge = r#"{"nodes":[{"id":"A","room":"Gym"},{"id":"B","room":"Gym"}],
            "edges":[{"a":"A","b":"B","dist":1.0},{"a":"B","b":"A","dist":2.0}]}"#;
        assert!(matches!(ScanGraph::from_json(dup_edge), Err(ScanError::DuplicateEdge { .. })));
    }

    #[test]
    fn synthetic_is_deterministic() {
        let mix = uniform_room_mix();
        let a = generate_synthetic_scan(1, 20, &mix).unwrap().to_json();
        let b = generate_synthetic_scan(1, 20, &mix).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn synthetic_seeds_differ() {
        let mix = uniform_room_mix();
        let a = generate_synthetic_scan(1, 20, &mix).unwrap();
        let b = generate_synthetic_scan(2, 20, &mix).unwrap();
        assert_ne!(a.edges(), b.edges());
    }

    #[test]
    fn synthetic_53_covers_most_rooms() {
        let g = generate_synthetic_scan(7, 53, &uniform_room_mix()).unwrap();
        assert_eq!(g.len(), 53);
        let named = g.rooms().into_iter().filter(|r| *r != RoomLabel::Other).count();
        assert!(named >= 8, "only {named} rooms");
        let total: usize = RoomLabel::ALL.iter().map(|&r| g.nodes_in_room(r).len()).sum();
        assert_eq!(total, 53);
    }

    #[test]
    fn synthetic_round_trips_through_file_format() {
        let g = generate_synthetic_scan(3, 12, &uniform_room_mix()).unwrap();
        let back = ScanGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn generator_rejects_bad_arguments() {
        assert!(generate_synthetic_scan(0, 1, &uniform_room_mix()).is_err());
        let zero: BTreeMap<_, _> = [(RoomLabel::Gym, 0.0)].into();
        assert!(generate_synthetic_scan(0, 10, &zero).is_err());
        let neg: BTreeMap<_, _> = [(RoomLabel::Gym, -1.0), (RoomLabel::Office, 2.0)].into();
        assert!(generate_synthetic_scan(0, 10, &neg).is_err());
    }

    #[test]
    fn furniture_labels_identify_rooms() {
        assert_eq!(RoomLabel::of_furniture("treadmill"), Some(RoomLabel::Gym));
        assert_eq!(RoomLabel::of_furniture("toilet"), Some(RoomLabel::Bathroom));
        assert_eq!(RoomLabel::of_furniture("banana"), None);
        let mut all = BTreeSet::new();
        for r in RoomLabel::ALL {
            for f in r.furniture() {
                assert!(all.insert(*f), "duplicate furniture label {f}");
            }
        }
    }
}
