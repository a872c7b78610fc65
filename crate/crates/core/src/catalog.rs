//! Portable objects and the rooms each one may occupy under routine placement.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scan::RoomLabel;

/// Room → portable objects, one row per named room.
const ROOM_TABLE: [(RoomLabel, &[&str]); 10] = [
    (
        RoomLabel::Bedroom,
        &[
            "charger", "water bottle", "smartwatch", "laptop", "notebook", "toothbrush", "mug", "usb flash drive",
            "phone", "headphones", "hat",
        ],
    ),
    (RoomLabel::Garage, &["screwdriver", "flashlight", "mug", "phone", "headphones", "hat"]),
    (
        RoomLabel::Dining,
        &[
            "salt and pepper shakers", "portable speaker", "charger", "water bottle", "mug", "bowl", "phone",
            "headphones", "hat",
        ],
    ),
    (
        RoomLabel::Office,
        &["charger", "laptop", "hat", "notebook", "usb flash drive", "mug", "phone", "headphones"],
    ),
    (RoomLabel::Bathroom, &["toothbrush", "phone", "first-aid kit"]),
    (
        RoomLabel::Kitchen,
        &["salt and pepper shakers", "hat", "mug", "bowl", "phone", "headphones", "first-aid kit"],
    ),
    (
        RoomLabel::Lounge,
        &[
            "playing cards", "mug", "portable speaker", "charger", "water bottle", "laptop", "phone",
            "usb flash drive", "dice", "headphones", "hat",
        ],
    ),
    (RoomLabel::Gym, &["dumbbells", "jumprope", "smartwatch", "phone", "headphones", "hat"]),
    (
        RoomLabel::Outdoor,
        &["jumprope", "smartwatch", "portable speaker", "phone", "water bottle", "headphones", "hat"],
    ),
    (RoomLabel::Recreation, &["playing cards", "dice", "water bottle", "headphones", "hat"]),
];

pub const TABLE1_OBJECT_COUNT: usize = 21;
pub const MAX_ROOMS_PER_OBJECT: usize = 9;

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("catalog is empty")]
    Empty,
    #[error("object {object:?} maps to {count} rooms (allowed 1..={MAX_ROOMS_PER_OBJECT})")]
    RoomCount { object: String, count: usize },
    #[error("unknown portable object {0:?}")]
    UnknownObject(String),
}

/// Portable objects with their permitted rooms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortableObjectCatalog {
    objects: BTreeMap<String, BTreeSet<RoomLabel>>,
}

impl Default for PortableObjectCatalog {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PortableObjectCatalog {
    /// The standard 21-object household mapping.
    pub fn builtin() -> Self {
        let mut objects: BTreeMap<String, BTreeSet<RoomLabel>> = BTreeMap::new();
        for (room, names) in ROOM_TABLE {
            for name in names {
                objects.entry(name.to_string()).or_default().insert(room);
            }
        }
        let catalog = PortableObjectCatalog { objects };
        debug_assert_eq!(catalog.len(), TABLE1_OBJECT_COUNT);
        catalog
    }

    pub fn new(objects: BTreeMap<String, BTreeSet<RoomLabel>>) -> Result<Self, CatalogError> {
        if objects.is_empty() {
            return Err(CatalogError::Empty);
        }
        for (name, rooms) in &objects {
            if rooms.is_empty() || rooms.len() > MAX_ROOMS_PER_OBJECT {
                return Err(CatalogError::RoomCount { object: name.clone(), count: rooms.len() });
            }
        }
        Ok(PortableObjectCatalog { objects })
    }

    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let raw: PortableObjectCatalog = serde_json::from_str(text)?;
        PortableObjectCatalog::new(raw.objects)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|source| CatalogError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }

    /// Restricts the catalog to `names`, keeping their room sets.
    pub fn subset<S: AsRef<str>>(&self, names: &[S]) -> Result<Self, CatalogError> {
        let mut objects = BTreeMap::new();
        for name in names {
            let name = name.as_ref();
            let rooms = self.objects.get(name).ok_or_else(|| CatalogError::UnknownObject(name.to_string()))?;
            objects.insert(name.to_string(), rooms.clone());
        }
        PortableObjectCatalog::new(objects)
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.objects.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.objects.contains_key(name)
    }

    pub fn rooms_of(&self, name: &str) -> Option<&BTreeSet<RoomLabel>> {
        self.objects.get(name)
    }

    /// Number of catalog objects that may be placed in `room`.
    pub fn portables_in_room(&self, room: RoomLabel) -> usize {
        self.objects.values().filter(|rooms| rooms.contains(&room)).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_shape() {
        let c = PortableObjectCatalog::builtin();
        assert_eq!(c.len(), 21);
        for name in c.names() {
            let n = c.rooms_of(name).unwrap().len();
            assert!((1..=9).contains(&n), "{name}: {n}");
        }
        for name in ["phone", "headphones", "hat"] {
            assert_eq!(c.rooms_of(name).unwrap().len(), 9, "{name}");
        }
        assert_eq!(c.rooms_of("dumbbells").unwrap(), &BTreeSet::from([RoomLabel::Gym]));
        assert_eq!(
            c.rooms_of("toothbrush").unwrap(),
            &BTreeSet::from([RoomLabel::Bedroom, RoomLabel::Bathroom])
        );
    }

    #[test]
    fn room_cardinalities() {
        let c = PortableObjectCatalog::builtin();
        assert_eq!(c.portables_in_room(RoomLabel::Bathroom), 3);
        assert_eq!(c.portables_in_room(RoomLabel::Gym), 6);
        assert_eq!(c.portables_in_room(RoomLabel::Lounge), 11);
        assert_eq!(c.portables_in_room(RoomLabel::Other), 0);
    }

    #[test]
    fn subset_and_file_round_trip() {
        let c = PortableObjectCatalog::builtin().subset(&["mug", "dice"]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(PortableObjectCatalog::from_json(&c.to_json()).unwrap(), c);
        assert!(PortableObjectCatalog::builtin().subset(&["banana"]).is_err());
    }

    #[test]
    fn rejects_bad_room_counts() {
        let bad = r#"{"objects":{"thing":[]}}"#;
        assert!(matches!(PortableObjectCatalog::from_json(bad), Err(CatalogError::RoomCount { .. })));
        let all = r#"{"objects":{"thing":["Bedroom","Garage","Dining","Office","Bathroom","Kitchen","Lounge","Gym","Outdoor","Recreation"]}}"#;
        assert!(PortableObjectCatalog::from_json(all).is_err());
    }
}
