//! The small fixed benchmark used for quick experiments: a 20-node synthetic
//! house, five portable objects with narrow room sets, 30-step episodes.

use crate::catalog::PortableObjectCatalog;
use crate::scan::{generate_synthetic_scan, uniform_room_mix, ScanGraph};
use crate::schedule::ScheduleConfig;

pub const DESK_NODES: usize = 20;
pub const DESK_HORIZON: u32 = 30;
pub const DESK_OBJECTS: [&str; 5] = ["dumbbells", "first-aid kit", "flashlight", "screwdriver", "toothbrush"];

#[derive(Debug, Clone)]
pub struct DeskBenchmark {
    pub scan: ScanGraph,
    pub catalog: PortableObjectCatalog,
    pub scan_seed: u64,
}

impl DeskBenchmark {
    /// Uses the first scan seed whose house contains a permitted room for
    /// every desk object.
    pub fn new() -> Self {
        let catalog = PortableObjectCatalog::builtin().subset(&DESK_OBJECTS).expect("desk objects are catalog objects");
        for scan_seed in 0.. {
            let scan = generate_synthetic_scan(scan_seed, DESK_NODES, &uniform_room_mix()).expect("valid synthesis");
            let rooms = scan.rooms();
            let covered = catalog.names().all(|o| catalog.rooms_of(o).expect("listed").iter().any(|r| rooms.contains(r)));
            if covered {
                return DeskBenchmark { scan, catalog, scan_seed };
            }
        }
        unreachable!("seed space exhausted")
    }

    pub fn schedule_config(&self, seed: u64) -> ScheduleConfig {
        ScheduleConfig::new(DESK_HORIZON, seed)
    }
}

impl Default for DeskBenchmark {
    fn default() -> Self {
        DeskBenchmark::new()
    }
}
