//! Prompt text sent to chat oracles. Rendering is byte-stable.

use super::memory::{MemoryEntry, TracebackPlan};

pub const BASE_SYSTEM: &str = "I am a smart robot trying to find as many portable objects as I can at home.";
pub const COMPLETE_HEADER: &str = "I have seen the following objects and taken the following actions so far - ";
pub const FOLLOW_QUESTION: &str = "Should I follow the action traceback? Reply with YES/NO.";

/// `[a, b, c]`
pub fn object_list<S: AsRef<str>>(objects: &[S]) -> String {
    let parts: Vec<&str> = objects.iter().map(|o| o.as_ref()).collect();
    format!("[{}]", parts.join(", "))
}

pub fn choose_user<S: AsRef<str>>(candidates: &[S]) -> String {
    format!(
        "Which object from {} should I go towards to find a new portable object? Reply in ONE word.",
        object_list(candidates)
    )
}

/// Base system prompt followed by the numbered memory entries, if any.
pub fn complete_system<'a>(history: impl IntoIterator<Item = &'a MemoryEntry>) -> String {
    let mut out = String::from(BASE_SYSTEM);
    let mut lines = history.into_iter().enumerate().peekable();
    if lines.peek().is_some() {
        out.push('\n');
        out.push_str(COMPLETE_HEADER);
        for (i, e) in lines {
            out.push_str(&format!("\n{}. {}: {}", i + 1, object_list(&e.objects), e.action));
        }
    }
    out
}

/// `a -> b -> c`
pub fn action_trace(plan: &TracebackPlan) -> String {
    plan.object_chain.join(" -> ")
}

pub fn selective_system(plan: &TracebackPlan) -> String {
    format!(
        "{BASE_SYSTEM}\nI have found the following path (object chain) to a portable object from the current observation. It takes {} timesteps - \n1. {}: {}",
        plan.cost,
        plan.object_chain.last().map(String::as_str).unwrap_or(""),
        action_trace(plan)
    )
}
