use std::path::PathBuf;

use portnav_core::agent::prompts::{choose_user, complete_system, selective_system, FOLLOW_QUESTION};
use portnav_core::agent::{MemoryEntry, TracebackPlan};

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.strip_suffix('\n').unwrap_or(&text).to_string()
}

#[test]
fn choose_prompt() {
    assert_eq!(choose_user(&["sofa", "mug"]), golden("choose_user.txt"));
}

#[test]
fn complete_memory_prompt() {
    let history = [
        MemoryEntry { objects: vec!["sofa".into(), "mug".into()], action: "mug".into() },
        MemoryEntry { objects: vec!["bed".into()], action: "bed".into() },
    ];
    assert_eq!(complete_system(&history), golden("complete_system.txt"));
    assert_eq!(complete_system(&[]), golden("complete_system_empty.txt"));
}

#[test]
fn selective_memory_prompt() {
    let plan = TracebackPlan {
        object_chain: vec!["sofa".into(), "lamp".into(), "mug".into()],
        node_chain: vec!["n1".into(), "n2".into(), "n3".into()],
        tree_path: vec![4, 5, 6],
        cost: 3,
    };
    assert_eq!(selective_system(&plan), golden("selective_system.txt"));
    assert_eq!(FOLLOW_QUESTION, golden("follow_question.txt"));
}
