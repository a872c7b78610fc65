//! Temporal placement of portable objects.
//!
//! Every object's horizon `[1, T]` is cut into a random partition whose parts
//! last at least the waiting period `w`; each part is assigned one node. The
//! on-disk form is two maps keyed by object name, `object_timesteps` and
//! `object_nodes`, whose i-th entries belong together.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::PortableObjectCatalog;
use crate::scan::ScanGraph;
use crate::seeding;

/// Object movement scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Any node, partition and placement redrawn every episode.
    Random,
    /// Rooms follow the catalog; partition and node choice redrawn every episode.
    SemiRoutine,
    /// Rooms follow the catalog; the episode-0 schedule is reused forever.
    FullyRoutine,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Random, Scheme::SemiRoutine, Scheme::FullyRoutine];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Random => "random",
            Scheme::SemiRoutine => "semi-routine",
            Scheme::FullyRoutine => "fully-routine",
        }
    }

    pub fn is_routine(self) -> bool {
        !matches!(self, Scheme::Random)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "random" => Ok(Scheme::Random),
            "semi-routine" | "semi" => Ok(Scheme::SemiRoutine),
            "fully-routine" | "fully" | "routine" => Ok(Scheme::FullyRoutine),
            _ => Err(ScheduleError::UnknownScheme(s.to_string())),
        }
    }
}

/// Inclusive timestep range `[start, end]`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(u32, u32)", into = "(u32, u32)")]
pub struct Interval {
    pub start: u32,
    pub end: u32,
}

impl Interval {
    pub fn new(start: u32, end: u32) -> Self {
        debug_assert!(end >= start);
        Interval { start, end }
    }

    pub fn len(&self) -> u32 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: u32) -> bool {
        self.start <= t && t <= self.end
    }
}

impl From<(u32, u32)> for Interval {
    fn from((start, end): (u32, u32)) -> Self {
        Interval { start, end }
    }
}

impl From<Interval> for (u32, u32) {
    fn from(iv: Interval) -> Self {
        (iv.start, iv.end)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScheduleError {
    #[error("invalid schedule config: {0}")]
    InvalidConfig(String),
    #[error("scan has no nodes")]
    EmptyScan,
    #[error("timestep {t} outside [1, {horizon}]")]
    TimestepOutOfRange { t: u32, horizon: u32 },
    #[error("unknown object {0:?}")]
    UnknownObject(String),
    #[error("unknown scheme {0:?} (expected random, semi-routine or fully-routine)")]
    UnknownScheme(String),
    #[error("malformed schedule for {object:?}: {reason}")]
    Malformed { object: String, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Default waiting period.
pub const DEFAULT_WAITING_PERIOD: u32 = 5;
/// Default cap on interval length.
pub const DEFAULT_MAX_INTERVAL: u32 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub horizon: u32,
    pub waiting_period: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_interval: Option<u32>,
    pub base_seed: u64,
}

impl ScheduleConfig {
    pub fn new(horizon: u32, base_seed: u64) -> Self {
        ScheduleConfig {
            horizon,
            waiting_period: DEFAULT_WAITING_PERIOD.min(horizon.max(1)),
            max_interval: Some(DEFAULT_MAX_INTERVAL),
            base_seed,
        }
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.waiting_period < 1 {
            return Err(ScheduleError::InvalidConfig("waiting period must be >= 1".into()));
        }
        if self.horizon < self.waiting_period {
            return Err(ScheduleError::InvalidConfig(format!(
                "horizon {} shorter than waiting period {}",
                self.horizon, self.waiting_period
            )));
        }
        if let Some(m) = self.max_interval {
            if m < self.waiting_period {
                return Err(ScheduleError::InvalidConfig(format!(
                    "max interval {m} shorter than waiting period {}",
                    self.waiting_period
                )));
            }
        }
        Ok(())
    }
}

/// Random partition of `[1, horizon]` into intervals of length >= `w`.
///
/// Lengths are drawn uniformly from `[w, min(max_len, remaining - w)]` while at
/// least `2w` steps remain; the final interval takes the rest (between `w` and
/// `2w - 1` steps). `max_len` therefore binds on every interval whenever
/// `max_len >= 2w - 1`.
pub fn random_partition<R: Rng + ?Sized>(
    horizon: u32,
    w: u32,
    max_len: Option<u32>,
    rng: &mut R,
) -> Result<Vec<Interval>, ScheduleError> {
    if w < 1 || horizon < w {
        return Err(ScheduleError::InvalidConfig(format!("need horizon >= w >= 1, got T={horizon}, w={w}")));
    }
    let cap = max_len.unwrap_or(horizon).max(w);
    let mut out = Vec::new();
    let mut start = 1;
    let mut remaining = horizon;
    while remaining >= 2 * w {
        let hi = cap.min(remaining - w);
        let len = rng.random_range(w..=hi);
        out.push(Interval::new(start, start + len - 1));
        start += len;
        remaining -= len;
    }
    out.push(Interval::new(start, horizon));
    Ok(out)
}

/// Checks contiguity, coverage of `[1, horizon]` and the minimum length.
pub fn check_partition(intervals: &[Interval], horizon: u32, w: u32) -> Result<(), String> {
    let mut expected = 1;
    for iv in intervals {
        if iv.start != expected {
            return Err(format!("interval {iv:?} should start at {expected}"));
        }
        if iv.end < iv.start {
            return Err(format!("interval {iv:?} is reversed"));
        }
        if iv.len() < w {
            return Err(format!("interval {iv:?} shorter than w={w}"));
        }
        expected = iv.end + 1;
    }
    if expected != horizon + 1 {
        return Err(format!("partition ends at {} instead of {horizon}", expected - 1));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleMeta {
    pub scheme: Scheme,
    pub episode: u64,
    pub seed: u64,
    #[serde(rename = "T")]
    pub horizon: u32,
    pub w: u32,
}

/// Per-object interval partition plus node sequence for one episode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementSchedule {
    object_timesteps: BTreeMap<String, Vec<Interval>>,
    object_nodes: BTreeMap<String, Vec<String>>,
    meta: ScheduleMeta,
}

impl PlacementSchedule {
    /// Assembles a schedule from the two maps and validates it.
    pub fn from_parts(
        object_timesteps: BTreeMap<String, Vec<Interval>>,
        object_nodes: BTreeMap<String, Vec<String>>,
        meta: ScheduleMeta,
    ) -> Result<Self, ScheduleError> {
        let s = PlacementSchedule { object_timesteps, object_nodes, meta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        let a: BTreeSet<&String> = self.object_timesteps.keys().collect();
        let b: BTreeSet<&String> = self.object_nodes.keys().collect();
        if a != b {
            let object = a.symmetric_difference(&b).next().map(|s| s.to_string()).unwrap_or_default();
            return Err(ScheduleError::Malformed { object, reason: "object missing from one of the two maps".into() });
        }
        for (object, intervals) in &self.object_timesteps {
            let nodes = &self.object_nodes[object];
            if nodes.len() != intervals.len() {
                return Err(ScheduleError::Malformed {
                    object: object.clone(),
                    reason: format!("{} intervals but {} nodes", intervals.len(), nodes.len()),
                });
            }
            check_partition(intervals, self.meta.horizon, self.meta.w)
                .map_err(|reason| ScheduleError::Malformed { object: object.clone(), reason })?;
        }
        Ok(())
    }

    /// Checks that every referenced node exists in `scan`.
    pub fn validate_nodes(&self, scan: &ScanGraph) -> Result<(), ScheduleError> {
        for (object, nodes) in &self.object_nodes {
            for n in nodes {
                if scan.index_of(n).is_err() {
                    return Err(ScheduleError::Malformed { object: object.clone(), reason: format!("unknown node {n:?}") });
                }
            }
        }
        Ok(())
    }

    pub fn meta(&self) -> &ScheduleMeta {
        &self.meta
    }

    pub fn horizon(&self) -> u32 {
        self.meta.horizon
    }

    pub fn scheme(&self) -> Scheme {
        self.meta.scheme
    }

    pub fn objects(&self) -> impl Iterator<Item = &str> {
        self.object_timesteps.keys().map(String::as_str)
    }

    pub fn object_count(&self) -> usize {
        self.object_timesteps.len()
    }

    pub fn intervals(&self, object: &str) -> Option<&[Interval]> {
        self.object_timesteps.get(object).map(Vec::as_slice)
    }

    pub fn nodes(&self, object: &str) -> Option<&[String]> {
        self.object_nodes.get(object).map(Vec::as_slice)
    }

    fn check_t(&self, t: u32) -> Result<(), ScheduleError> {
        if t < 1 || t > self.meta.horizon {
            return Err(ScheduleError::TimestepOutOfRange { t, horizon: self.meta.horizon });
        }
        Ok(())
    }

    fn slot(intervals: &[Interval], t: u32) -> usize {
        intervals.partition_point(|iv| iv.start <= t) - 1
    }

    /// Node holding `object` at timestep `t`.
    pub fn object_location(&self, object: &str, t: u32) -> Result<&str, ScheduleError> {
        self.check_t(t)?;
        let intervals =
            self.object_timesteps.get(object).ok_or_else(|| ScheduleError::UnknownObject(object.to_string()))?;
        Ok(&self.object_nodes[object][Self::slot(intervals, t)])
    }

    /// Objects located at `node` at timestep `t`.
    pub fn objects_at(&self, node: &str, t: u32) -> Result<BTreeSet<&str>, ScheduleError> {
        self.check_t(t)?;
        Ok(self
            .object_timesteps
            .iter()
            .filter(|(o, intervals)| self.object_nodes[*o][Self::slot(intervals, t)] == node)
            .map(|(o, _)| o.as_str())
            .collect())
    }

    /// Dense `(t, object) → node index` table for fast lookups.
    pub fn occupancy(&self, scan: &ScanGraph) -> Result<Occupancy, ScheduleError> {
        self.validate_nodes(scan)?;
        let objects: Vec<String> = self.object_timesteps.keys().cloned().collect();
        let horizon = self.meta.horizon as usize;
        let mut at = vec![0usize; (horizon + 1) * objects.len()];
        for (k, o) in objects.iter().enumerate() {
            let intervals = &self.object_timesteps[o];
            let nodes = &self.object_nodes[o];
            for (iv, node) in intervals.iter().zip(nodes) {
                let idx = scan.index_of(node).expect("validated above");
                for t in iv.start..=iv.end {
                    at[t as usize * objects.len() + k] = idx;
                }
            }
        }
        Ok(Occupancy { objects, horizon: self.meta.horizon, at })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScheduleError> {
        let s: PlacementSchedule = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScheduleError> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n")
            .map_err(|source| ScheduleError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScheduleError> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|source| ScheduleError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }
}

/// Object positions resolved to node indices, `t ∈ [1, T]`.
#[derive(Debug, Clone)]
pub struct Occupancy {
    objects: Vec<String>,
    horizon: u32,
    at: Vec<usize>,
}

impl Occupancy {
    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Node index of object `k` at timestep `t` (1-based).
    pub fn location(&self, k: usize, t: u32) -> usize {
        debug_assert!(t >= 1 && t <= self.horizon);
        self.at[t as usize * self.objects.len() + k]
    }

    /// Bitmask of objects at node `idx` at timestep `t`.
    pub fn mask_at(&self, idx: usize, t: u32) -> u64 {
        let n = self.objects.len();
        let row = &self.at[t as usize * n..(t as usize + 1) * n];
        row.iter().enumerate().filter(|(_, &v)| v == idx).fold(0u64, |m, (k, _)| m | (1 << k))
    }
}

/// Builds one episode's schedule.
///
/// Each object draws from its own stream seeded by `(base seed, object,
/// episode)`; fully-routine schedules always use episode 0. Under routine
/// schemes an object whose rooms are all missing from the scan may go to any
/// node (a warning is logged).
pub fn build_schedule(
    scan: &ScanGraph,
    catalog: &PortableObjectCatalog,
    cfg: &ScheduleConfig,
    scheme: Scheme,
    episode: u64,
) -> Result<PlacementSchedule, ScheduleError> {
    if scan.is_empty() {
        return Err(ScheduleError::EmptyScan);
    }
    cfg.validate()?;
    let episode = if scheme == Scheme::FullyRoutine { 0 } else { episode };
    let all: Vec<usize> = (0..scan.len()).collect();

    let mut object_timesteps = BTreeMap::new();
    let mut object_nodes = BTreeMap::new();
    for object in catalog.names() {
        let mut rng = seeding::stream(cfg.base_seed, object, episode);
        let intervals = random_partition(cfg.horizon, cfg.waiting_period, cfg.max_interval, &mut rng)?;
        let candidates = if scheme.is_routine() {
            let rooms = catalog.rooms_of(object).expect("iterating catalog names");
            let in_rooms: Vec<usize> = all.iter().copied().filter(|&i| rooms.contains(&scan.node(i).room)).collect();
            if in_rooms.is_empty() {
                log::warn!("no room for {object:?} in scan; placing it on any node");
                all.clone()
            } else {
                in_rooms
            }
        } else {
            all.clone()
        };
        let nodes: Vec<String> = intervals
            .iter()
            .map(|_| scan.id(*candidates.choose(&mut rng).expect("non-empty candidates")).to_string())
            .collect();
        object_timesteps.insert(object.to_string(), intervals);
        object_nodes.insert(object.to_string(), nodes);
    }

    let meta = ScheduleMeta { scheme, episode, seed: cfg.base_seed, horizon: cfg.horizon, w: cfg.waiting_period };
    Ok(PlacementSchedule { object_timesteps, object_nodes, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::{generate_synthetic_scan, uniform_room_mix, RoomLabel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mug_schedule() -> PlacementSchedule {
        let intervals = vec![Interval::new(1, 10), Interval::new(11, 32), Interval::new(33, 44), Interval::new(45, 50)];
        let nodes = ["NodeA", "NodeB", "NodeA", "NodeC"].map(String::from).to_vec();
        PlacementSchedule::from_parts(
            BTreeMap::from([("mug".to_string(), intervals)]),
            BTreeMap::from([("mug".to_string(), nodes)]),
            ScheduleMeta { scheme: Scheme::Random, episode: 0, seed: 0, horizon: 50, w: 6 },
        )
        .unwrap()
    }

    #[test]
    fn single_interval_when_horizon_equals_w() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(random_partition(10, 10, None, &mut rng).unwrap(), vec![Interval::new(1, 10)]);
    }

    #[test]
    fn partition_rejects_short_horizon() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(random_partition(4, 5, None, &mut rng).is_err());
        assert!(random_partition(4, 0, None, &mut rng).is_err());
    }

    #[test]
    fn partitions_respect_waiting_period_over_many_seeds() {
        for seed in 0..1000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_partition(50, 5, None, &mut rng).unwrap();
            check_partition(&p, 50, 5).unwrap();
        }
    }

    #[test]
    fn max_interval_binds_when_wide_enough() {
        for seed in 0..500 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_partition(50, 5, Some(25), &mut rng).unwrap();
            assert!(p.iter().all(|iv| iv.len() <= 25), "{p:?}");
            assert!(p.len() >= 2);
        }
    }

    #[test]
    fn supplementary_mug_partition_is_valid_shape() {
        let p = [(1, 10), (11, 32), (33, 44), (45, 50)].map(Interval::from);
        check_partition(&p, 50, 6).unwrap();
    }

    #[test]
    fn mug_lookups() {
        let s = mug_schedule();
        assert_eq!(s.object_location("mug", 47).unwrap(), "NodeC");
        assert_eq!(s.object_location("mug", 1).unwrap(), "NodeA");
        assert_eq!(s.object_location("mug", 50).unwrap(), "NodeC");
        assert_eq!(s.object_location("mug", 11).unwrap(), "NodeB");
        assert!(s.objects_at("NodeC", 47).unwrap().contains("mug"));
        assert!(!s.objects_at("NodeC", 5).unwrap().contains("mug"));
        assert!(s.objects_at("NodeA", 5).unwrap().contains("mug"));
    }

    #[test]
    fn lookup_errors() {
        let s = mug_schedule();
        assert!(matches!(s.object_location("mug", 0), Err(ScheduleError::TimestepOutOfRange { .. })));
        assert!(matches!(s.object_location("mug", 51), Err(ScheduleError::TimestepOutOfRange { .. })));
        assert!(matches!(s.object_location("hat", 3), Err(ScheduleError::UnknownObject(_))));
        assert!(s.objects_at("NodeA", 0).is_err());
    }

    #[test]
    fn malformed_schedules_rejected() {
        let text = r#"{"object_timesteps":{"mug":[[1,10],[12,50]]},"object_nodes":{"mug":["A","B"]},
            "meta":{"scheme":"random","episode":0,"seed":0,"T":50,"w":5}}"#;
        assert!(PlacementSchedule::from_json(text).is_err());
        let text = r#"{"object_timesteps":{"mug":[[1,10],[11,50]]},"object_nodes":{"mug":["A"]},
            "meta":{"scheme":"random","episode":0,"seed":0,"T":50,"w":5}}"#;
        assert!(PlacementSchedule::from_json(text).is_err());
    }

    #[test]
    fn every_object_is_somewhere() {
        let scan = generate_synthetic_scan(7, 30, &uniform_room_mix()).unwrap();
        let catalog = PortableObjectCatalog::builtin();
        let cfg = ScheduleConfig::new(50, 3);
        let s = build_schedule(&scan, &catalog, &cfg, Scheme::SemiRoutine, 4).unwrap();
        for t in 1..=50 {
            let total: usize = scan.nodes().iter().map(|n| s.objects_at(&n.id, t).unwrap().len()).sum();
            assert_eq!(total, 21);
        }
    }

    #[test]
    fn fully_routine_ignores_episode() {
        let scan = generate_synthetic_scan(7, 30, &uniform_room_mix()).unwrap();
        let catalog = PortableObjectCatalog::builtin();
        let cfg = ScheduleConfig::new(50, 5);
        let a = build_schedule(&scan, &catalog, &cfg, Scheme::FullyRoutine, 0).unwrap();
        let b = build_schedule(&scan, &catalog, &cfg, Scheme::FullyRoutine, 17).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn toothbrush_stays_in_bedroom_or_bathroom() {
        let scan = generate_synthetic_scan(7, 53, &uniform_room_mix()).unwrap();
        assert!(scan.rooms().contains(&RoomLabel::Bathroom) || scan.rooms().contains(&RoomLabel::Bedroom));
        let catalog = PortableObjectCatalog::builtin();
        for episode in 0..20 {
            let s = build_schedule(&scan, &catalog, &ScheduleConfig::new(50, 11), Scheme::SemiRoutine, episode).unwrap();
            for n in s.nodes("toothbrush").unwrap() {
                let room = scan.node(scan.index_of(n).unwrap()).room;
                assert!(matches!(room, RoomLabel::Bedroom | RoomLabel::Bathroom), "{room}");
            }
        }
    }

    #[test]
    fn random_schedules_vary_by_episode() {
        let scan = generate_synthetic_scan(7, 20, &uniform_room_mix()).unwrap();
        let catalog = PortableObjectCatalog::builtin();
        let differing = (0..100)
            .filter(|&seed| {
                let cfg = ScheduleConfig::new(50, seed);
                let a = build_schedule(&scan, &catalog, &cfg, Scheme::Random, 0).unwrap();
                let b = build_schedule(&scan, &catalog, &cfg, Scheme::Random, 1).unwrap();
                a.object_timesteps != b.object_timesteps || a.object_nodes != b.object_nodes
            })
            .count();
        assert!(differing > 50, "{differing}");
    }

    #[test]
    fn occupancy_matches_lookups() {
        let scan = generate_synthetic_scan(2, 15, &uniform_room_mix()).unwrap();
        let catalog = PortableObjectCatalog::builtin();
        let s = build_schedule(&scan, &catalog, &ScheduleConfig::new(30, 1), Scheme::Random, 2).unwrap();
        let occ = s.occupancy(&scan).unwrap();
        for t in 1..=30 {
            for (k, o) in occ.objects().iter().enumerate() {
                assert_eq!(scan.id(occ.location(k, t)), s.object_location(o, t).unwrap());
            }
        }
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("fully-routine".parse::<Scheme>().unwrap(), Scheme::FullyRoutine);
        assert_eq!("semi_routine".parse::<Scheme>().unwrap(), Scheme::SemiRoutine);
        assert!("chaotic".parse::<Scheme>().is_err());
    }
}
