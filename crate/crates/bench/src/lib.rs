//! Fixtures shared by the criterion benches.

use portnav_core::scan::uniform_room_mix;
use portnav_core::{generate_synthetic_scan, DeskBenchmark, PortableObjectCatalog, ScanGraph};

/// A 53-node synthetic house with eight table objects.
pub fn house() -> (ScanGraph, PortableObjectCatalog) {
    let scan = generate_synthetic_scan(0, 53, &uniform_room_mix()).expect("synthetic scan");
    let names = ["first-aid kit", "flashlight", "screwdriver", "toothbrush", "mug", "laptop", "dice", "bowl"];
    let catalog = PortableObjectCatalog::builtin().subset(&names).expect("catalog subset");
    (scan, catalog)
}

pub fn desk() -> (ScanGraph, PortableObjectCatalog) {
    let d = DeskBenchmark::new();
    (d.scan, d.catalog)
}
