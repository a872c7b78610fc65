//! Exact maximum number of distinct objects collectible within the horizon.
//!
//! Backward dynamic program over `(t, node, found mask)`, plus a brute-force
//! enumerator used to validate it on small instances.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::catalog::PortableObjectCatalog;
use crate::scan::{ScanError, ScanGraph};
use crate::schedule::{build_schedule, PlacementSchedule, ScheduleConfig, ScheduleError, Scheme};

pub const MAX_DP_OBJECTS: usize = 12;
pub const MAX_ENUMERATION_LEAVES: f64 = 1e7;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("schedule has {0} objects; the solver handles at most {MAX_DP_OBJECTS}")]
    TooManyObjects(usize),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("horizon {horizon} exceeds the schedule horizon {schedule}")]
    Horizon { horizon: u32, schedule: u32 },
    #[error("enumeration would visit about {0:.3e} leaves")]
    TooLarge(f64),
}

/// Transition rules for the search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Add a self-transition that collects nothing, mirroring the engine's
    /// penalized invalid action. Needed when bounding agents that may stall.
    pub allow_wait: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimalResult {
    pub optimal_value: usize,
    pub path: Vec<String>,
    pub per_start_values: BTreeMap<String, usize>,
}

/// `new[t][v]`: objects present at node `v` at timestep `t`, `t ∈ 1..=T`.
fn placement_masks(scan: &ScanGraph, schedule: &PlacementSchedule, horizon: u32) -> Result<Vec<Vec<u32>>, SolverError> {
    let occ = schedule.occupancy(scan)?;
    let mut masks = vec![vec![0u32; scan.len()]; horizon as usize + 1];
    for (t, row) in masks.iter_mut().enumerate().skip(1) {
        for k in 0..occ.objects().len() {
            row[occ.location(k, t as u32)] |= 1 << k;
        }
    }
    Ok(masks)
}

/// Successors of each node ordered by node id; waiting comes last.
fn successors(scan: &ScanGraph, opts: SolverOptions) -> Vec<Vec<(usize, bool)>> {
    (0..scan.len())
        .map(|v| {
            let mut s: Vec<(usize, bool)> = scan.adjacent(v).iter().map(|&u| (u, false)).collect();
            s.sort_by(|a, b| scan.id(a.0).cmp(scan.id(b.0)));
            if opts.allow_wait {
                s.push((v, true));
            }
            s
        })
        .collect()
}

fn check_inputs(scan: &ScanGraph, schedule: &PlacementSchedule, horizon: u32) -> Result<(), SolverError> {
    if horizon > schedule.horizon() {
        return Err(SolverError::Horizon { horizon, schedule: schedule.horizon() });
    }
    schedule.validate_nodes(scan)?;
    Ok(())
}

/// Value tables of the dynamic program.
pub struct DpTable {
    horizon: u32,
    n: usize,
    masks: usize,
    value: Vec<u8>,
    new: Vec<Vec<u32>>,
    succ: Vec<Vec<(usize, bool)>>,
}

impl DpTable {
    pub fn solve(
        scan: &ScanGraph,
        schedule: &PlacementSchedule,
        horizon: u32,
        opts: SolverOptions,
    ) -> Result<Self, SolverError> {
        let k = schedule.object_count();
        if k > MAX_DP_OBJECTS {
            return Err(SolverError::TooManyObjects(k));
        }
        check_inputs(scan, schedule, horizon)?;
        let n = scan.len();
        let masks = 1usize << k;
        let new = placement_masks(scan, schedule, horizon)?;
        let succ = successors(scan, opts);
        let layer = n * masks;
        let mut value = vec![0u8; (horizon as usize + 1) * layer];
        let last = horizon as usize * layer;
        for v in 0..n {
            for m in 0..masks {
                value[last + v * masks + m] = m.count_ones() as u8;
            }
        }
        for t in (0..horizon as usize).rev() {
            let (head, tail) = value.split_at_mut((t + 1) * layer);
            let cur = &mut head[t * layer..];
            let next = &tail[..layer];
            for v in 0..n {
                for m in 0..masks {
                    let mut best = 0u8;
                    for &(u, wait) in &succ[v] {
                        let gained = if wait { 0 } else { new[t + 1][u] as usize };
                        best = best.max(next[u * masks + (m | gained)]);
                    }
                    cur[v * masks + m] = best;
                }
            }
        }
        Ok(DpTable { horizon, n, masks, value, new, succ })
    }

    fn at(&self, t: u32, v: usize, m: usize) -> u8 {
        self.value[(t as usize * self.n + v) * self.masks + m]
    }

    /// Best count from `start` at `t = 0` with nothing found.
    pub fn value_from(&self, start: usize) -> usize {
        self.at(0, start, 0) as usize
    }

    /// One optimal node sequence from `start`, ties broken by smallest next id.
    pub fn witness(&self, start: usize) -> Vec<usize> {
        let mut path = vec![start];
        let (mut v, mut m) = (start, 0usize);
        for t in 0..self.horizon {
            let target = self.at(t, v, m);
            let &(u, wait) = self.succ[v]
                .iter()
                .find(|&&(u, wait)| {
                    let gained = if wait { 0 } else { self.new[t as usize + 1][u] as usize };
                    self.at(t + 1, u, m | gained) == target
                })
                .expect("some successor attains the value");
            if !wait {
                m |= self.new[t as usize + 1][u] as usize;
            }
            v = u;
            path.push(v);
        }
        path
    }
}

/// Maximum distinct objects collectible from `start` within `horizon` steps.
pub fn optimal_value(
    scan: &ScanGraph,
    schedule: &PlacementSchedule,
    start: &str,
    horizon: u32,
    opts: SolverOptions,
) -> Result<OptimalResult, SolverError> {
    let s = scan.index_of(start)?;
    let dp = DpTable::solve(scan, schedule, horizon, opts)?;
    let per_start_values = (0..scan.len()).map(|v| (scan.id(v).to_string(), dp.value_from(v))).collect();
    Ok(OptimalResult {
        optimal_value: dp.value_from(s),
        path: dp.witness(s).into_iter().map(|v| scan.id(v).to_string()).collect(),
        per_start_values,
    })
}

/// Exhaustive search over every move sequence of length `horizon`.
pub fn enumerate_all_paths_value(
    scan: &ScanGraph,
    schedule: &PlacementSchedule,
    start: &str,
    horizon: u32,
    opts: SolverOptions,
) -> Result<usize, SolverError> {
    let s = scan.index_of(start)?;
    check_inputs(scan, schedule, horizon)?;
    let extra = usize::from(opts.allow_wait);
    let branching = (0..scan.len()).map(|v| scan.degree(v) + extra).max().unwrap_or(1) as f64;
    let leaves = branching.powi(horizon as i32);
    if leaves > MAX_ENUMERATION_LEAVES {
        return Err(SolverError::TooLarge(leaves));
    }
    // Resolved straight from the schedule's interval lists.
    let mut present: Vec<Vec<BTreeSet<String>>> = vec![vec![BTreeSet::new(); scan.len()]; horizon as usize + 1];
    for t in 1..=horizon {
        for object in schedule.objects() {
            let node = schedule.object_location(object, t)?;
            present[t as usize][scan.index_of(node)?].insert(object.to_string());
        }
    }

    fn dfs(
        scan: &ScanGraph,
        present: &[Vec<BTreeSet<String>>],
        allow_wait: bool,
        v: usize,
        t: usize,
        found: &mut BTreeSet<String>,
    ) -> usize {
        if t + 1 == present.len() {
            return found.len();
        }
        let mut best = 0;
        let mut options: Vec<(usize, bool)> = scan.adjacent(v).iter().map(|&u| (u, false)).collect();
        if allow_wait {
            options.push((v, true));
        }
        for (u, wait) in options {
            let added: Vec<String> = if wait {
                Vec::new()
            } else {
                present[t + 1][u].iter().filter(|o| !found.contains(*o)).cloned().collect()
            };
            for o in &added {
                found.insert(o.clone());
            }
            best = best.max(dfs(scan, present, allow_wait, u, t + 1, found));
            for o in &added {
                found.remove(o);
            }
        }
        best
    }

    Ok(dfs(scan, &present, opts.allow_wait, s, 0, &mut BTreeSet::new()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub scheme: Scheme,
    pub start: String,
    pub horizon: u32,
    pub values: Vec<usize>,
    pub mean: f64,
    /// Population variance of the per-episode optimum.
    pub variance: f64,
}

/// Distribution of the optimum over `episodes` freshly built schedules.
/// Episodes are split across `jobs` threads; results are ordered by episode.
#[allow(clippy::too_many_arguments)]
pub fn optimum_variance(
    scan: &ScanGraph,
    catalog: &PortableObjectCatalog,
    cfg: &ScheduleConfig,
    scheme: Scheme,
    start: &str,
    episodes: u64,
    opts: SolverOptions,
    jobs: usize,
) -> Result<VarianceReport, SolverError> {
    scan.index_of(start)?;
    let eval = |ep: u64| -> Result<usize, SolverError> {
        let schedule = build_schedule(scan, catalog, cfg, scheme, ep)?;
        Ok(optimal_value(scan, &schedule, start, cfg.horizon, opts)?.optimal_value)
    };
    let jobs = jobs.max(1);
    let values: Vec<usize> = if jobs == 1 {
        (0..episodes).map(eval).collect::<Result<_, _>>()?
    } else {
        let mut slots: Vec<Option<Result<usize, SolverError>>> = (0..episodes).map(|_| None).collect();
        std::thread::scope(|scope| {
            let chunk = (episodes as usize).div_ceil(jobs).max(1);
            for (c, part) in slots.chunks_mut(chunk).enumerate() {
                let eval = &eval;
                scope.spawn(move || {
                    for (i, slot) in part.iter_mut().enumerate() {
                        *slot = Some(eval((c * chunk + i) as u64));
                    }
                });
            }
        });
        slots.into_iter().map(|s| s.expect("every episode evaluated")).collect::<Result<_, _>>()?
    };
    let count = values.len().max(1) as f64;
    let mean = values.iter().sum::<usize>() as f64 / count;
    let variance = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / count;
    Ok(VarianceReport { scheme, start: start.to_string(), horizon: cfg.horizon, values, mean, variance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::{EdgeRecord, NodeRecord, RoomLabel};
    use crate::schedule::{Interval, ScheduleMeta};

    fn path_graph(ids: &[&str]) -> ScanGraph {
        ScanGraph::new(
            ids.iter().map(|id| NodeRecord { id: id.to_string(), room: RoomLabel::Lounge, pos: None, scene: vec![] }).collect(),
            ids.windows(2).map(|w| EdgeRecord { a: w[0].into(), b: w[1].into(), dist: 1.0 }).collect(),
        )
        .unwrap()
    }

    type Spans<'a> = &'a [(u32, u32, &'a str)];

    fn sched(horizon: u32, objects: &[(&str, Spans)]) -> PlacementSchedule {
        let mut ts = BTreeMap::new();
        let mut ns = BTreeMap::new();
        for (o, parts) in objects {
            ts.insert(o.to_string(), parts.iter().map(|&(a, b, _)| Interval::new(a, b)).collect());
            ns.insert(o.to_string(), parts.iter().map(|&(_, _, n)| n.to_string()).collect());
        }
        PlacementSchedule::from_parts(ts, ns, ScheduleMeta { scheme: Scheme::Random, episode: 0, seed: 0, horizon, w: 1 })
            .unwrap()
    }

    #[test]
    fn fixed_neighbor_object() {
        let g = path_graph(&["A", "B", "C"]);
        let s = sched(1, &[("mug", &[(1, 1, "B")])]);
        let r = optimal_value(&g, &s, "A", 1, SolverOptions::default()).unwrap();
        assert_eq!(r.optimal_value, 1);
        assert_eq!(r.path, vec!["A", "B"]);
    }

    #[test]
    fn object_out_of_reach_in_time() {
        let g = path_graph(&["A", "B", "C", "D"]);
        let s = sched(6, &[("mug", &[(1, 2, "D"), (3, 6, "A")])]);
        // Only reachable at D during t ∈ [1, 2]; later it sits at A.
        assert_eq!(optimal_value(&g, &s, "A", 2, SolverOptions::default()).unwrap().optimal_value, 0);
        assert_eq!(enumerate_all_paths_value(&g, &s, "A", 2, SolverOptions::default()).unwrap(), 0);
    }

    #[test]
    fn enumeration_trivial_cases() {
        let g = path_graph(&["A", "B"]);
        let s = sched(1, &[("mug", &[(1, 1, "B")])]);
        assert_eq!(enumerate_all_paths_value(&g, &s, "A", 1, SolverOptions::default()).unwrap(), 1);
        let s = sched(1, &[("mug", &[(1, 1, "A")])]);
        assert_eq!(enumerate_all_paths_value(&g, &s, "A", 1, SolverOptions::default()).unwrap(), 0);
    }

    #[test]
    fn waiting_can_beat_forced_moves() {
        // Object visits B only at t = 2: forced moves reach B at odd t only.
        let g = path_graph(&["A", "B"]);
        let s = sched(2, &[("mug", &[(1, 1, "A"), (2, 2, "B")])]);
        let plain = SolverOptions::default();
        let wait = SolverOptions { allow_wait: true };
        assert_eq!(optimal_value(&g, &s, "A", 2, plain).unwrap().optimal_value, 0);
        let r = optimal_value(&g, &s, "A", 2, wait).unwrap();
        assert_eq!(r.optimal_value, 1);
        assert_eq!(r.path, vec!["A", "A", "B"]);
        assert_eq!(enumerate_all_paths_value(&g, &s, "A", 2, wait).unwrap(), 1);
    }

    #[test]
    fn per_start_values_cover_all_nodes() {
        let g = path_graph(&["A", "B", "C"]);
        let s = sched(2, &[("mug", &[(1, 2, "C")])]);
        let r = optimal_value(&g, &s, "A", 2, SolverOptions::default()).unwrap();
        assert_eq!(r.per_start_values.len(), 3);
        assert_eq!(r.per_start_values["A"], 1);
        assert_eq!(r.per_start_values["C"], 1);
        assert_eq!(r.path.len(), 3);
    }

    #[test]
    fn rejects_oversized_inputs() {
        let g = path_graph(&["A", "B"]);
        let objects: Vec<String> = (0..13).map(|i| format!("o{i}")).collect();
        let spans: &[(u32, u32, &str)] = &[(1, 1, "A")];
        let list: Vec<(&str, Spans)> = objects.iter().map(|o| (o.as_str(), spans)).collect();
        let s = sched(1, &list);
        assert!(matches!(optimal_value(&g, &s, "A", 1, SolverOptions::default()), Err(SolverError::TooManyObjects(13))));
        let s = sched(1, &[("mug", &[(1, 1, "B")])]);
        assert!(matches!(optimal_value(&g, &s, "A", 2, SolverOptions::default()), Err(SolverError::Horizon { .. })));
        assert!(matches!(optimal_value(&g, &s, "Z", 1, SolverOptions::default()), Err(SolverError::Scan(_))));
    }

    #[test]
    fn fully_routine_has_zero_variance() {
        let g = crate::scan::generate_synthetic_scan(4, 12, &crate::scan::uniform_room_mix()).unwrap();
        let cat = PortableObjectCatalog::builtin().subset(&["mug", "hat", "phone"]).unwrap();
        let cfg = ScheduleConfig::new(12, 9);
        let r = optimum_variance(&g, &cat, &cfg, Scheme::FullyRoutine, "n00", 10, SolverOptions::default(), 3).unwrap();
        assert_eq!(r.values.len(), 10);
        assert_eq!(r.variance, 0.0);
        let seq = optimum_variance(&g, &cat, &cfg, Scheme::Random, "n00", 10, SolverOptions::default(), 1).unwrap();
        let par = optimum_variance(&g, &cat, &cfg, Scheme::Random, "n00", 10, SolverOptions::default(), 4).unwrap();
        assert_eq!(seq, par);
    }
    #[test]
    fn random_optimum_varies_when_horizon_binds() {
        let g = crate::scan::generate_synthetic_scan(0, 53, &crate::scan::uniform_room_mix()).unwrap();
        let names = ["first-aid kit", "flashlight", "screwdriver", "toothbrush", "mug", "laptop", "dice", "bowl"];
        let cat = PortableObjectCatalog::builtin().subset(&names).unwrap();
        let cfg = ScheduleConfig::new(20, 0);
        let wait = SolverOptions { allow_wait: true };
        let r = optimum_variance(&g, &cat, &cfg, Scheme::Random, "n00", 20, wait, 4).unwrap();
        assert!(r.variance > 0.0, "{:?}", r.values);
        let f = optimum_variance(&g, &cat, &cfg, Scheme::FullyRoutine, "n00", 20, wait, 4).unwrap();
        assert_eq!(f.variance, 0.0);
    }

    #[test]
    fn desk_optimum_saturates() {
        // Every object is reachable in every episode, so the optimum is pinned at 5.
        let desk = crate::desk::DeskBenchmark::new();
        let cfg = ScheduleConfig::new(crate::desk::DESK_HORIZON, 0);
        let r = optimum_variance(&desk.scan, &desk.catalog, &cfg, Scheme::Random, desk.scan.id(0), 50, SolverOptions { allow_wait: true }, 4).unwrap();
        assert!(r.values.iter().all(|&v| v == 5), "{:?}", r.values);
        assert_eq!(r.variance, 0.0);
    }
}
