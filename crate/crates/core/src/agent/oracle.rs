//! Decision oracles: a deterministic scripted rule, a replay of recorded
//! traffic, and a recorder that wraps any other oracle.

use std::collections::{BTreeMap, VecDeque};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::memory::MemoryEntry;
use crate::catalog::PortableObjectCatalog;
use crate::scan::RoomLabel;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("choose request has no candidates")]
    NoCandidates,
    #[error("no recorded response for request {0}")]
    ReplayMiss(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record on line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("missing environment variable {0} for the oracle API key")]
    MissingKey(String),
    #[error("request failed after {attempts} attempts: {message}")]
    Transport { attempts: usize, message: String },
    #[error("unexpected response body: {0}")]
    Body(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    ChooseObject,
    YesNo,
}

/// Structured facts behind the prompt text, for oracles that do not read
/// natural language.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestContext {
    /// Memory entries shown to the oracle, oldest first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<Vec<MemoryEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traceback_cost: Option<usize>,
    pub remaining_steps: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleRequest {
    pub system: String,
    pub user: String,
    pub candidates: Vec<String>,
    pub mode: Mode,
    #[serde(default)]
    pub context: RequestContext,
}

impl OracleRequest {
    /// Hex SHA-256 over the text fields, candidates and mode.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for part in [self.system.as_str(), self.user.as_str()] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        for c in &self.candidates {
            h.update((c.len() as u64).to_le_bytes());
            h.update(c.as_bytes());
        }
        h.update(match self.mode {
            Mode::ChooseObject => b"choose",
            Mode::YesNo => b"yes-no",
        });
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Answer {
    Object(String),
    Yes,
    No,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleStats {
    pub requests: usize,
    /// Answers that had to come from the scripted rule instead.
    pub fallbacks: usize,
}

pub trait Oracle: Send {
    fn respond(&mut self, request: &OracleRequest) -> Result<Answer, OracleError>;

    fn stats(&self) -> OracleStats {
        OracleStats::default()
    }
}

impl<O: Oracle + ?Sized> Oracle for Box<O> {
    fn respond(&mut self, request: &OracleRequest) -> Result<Answer, OracleError> {
        (**self).respond(request)
    }

    fn stats(&self) -> OracleStats {
        (**self).stats()
    }
}

/// Deterministic stand-in for a language model.
///
/// Choosing: a visible portable object wins (smallest name first). Without
/// one, the candidate whose room hosts the most catalog objects wins. When a
/// memory log is supplied, candidates chosen less often in it are tried
/// first, and then those that appeared alongside a portable object.
/// Yes/no: follow a traceback iff it fits in the remaining steps.
#[derive(Debug, Clone)]
pub struct ScriptedOracle {
    catalog: PortableObjectCatalog,
    requests: usize,
}

impl Default for ScriptedOracle {
    fn default() -> Self {
        ScriptedOracle::new(PortableObjectCatalog::builtin())
    }
}

impl ScriptedOracle {
    pub fn new(catalog: PortableObjectCatalog) -> Self {
        ScriptedOracle { catalog, requests: 0 }
    }

    /// Number of catalog objects that live in the room of scene object `name`.
    pub fn room_prior(&self, name: &str) -> usize {
        RoomLabel::of_furniture(name).map(|r| self.catalog.portables_in_room(r)).unwrap_or(0)
    }

    pub fn decide(&self, request: &OracleRequest) -> Result<Answer, OracleError> {
        match request.mode {
            Mode::YesNo => {
                let k = request.context.traceback_cost.unwrap_or(usize::MAX);
                Ok(if k <= request.context.remaining_steps as usize { Answer::Yes } else { Answer::No })
            }
            Mode::ChooseObject => {
                if request.candidates.is_empty() {
                    return Err(OracleError::NoCandidates);
                }
                if let Some(p) = request.candidates.iter().filter(|c| self.catalog.contains(c)).min() {
                    return Ok(Answer::Object(p.clone()));
                }
                let history = request.context.history.as_deref().unwrap_or(&[]);
                let key = |c: &String| {
                    let chosen = history.iter().filter(|e| &e.action == c).count();
                    let evidence = history
                        .iter()
                        .filter(|e| e.objects.contains(c) && e.objects.iter().any(|o| self.catalog.contains(o)))
                        .count();
                    (chosen, std::cmp::Reverse(evidence), std::cmp::Reverse(self.room_prior(c)), c.clone())
                };
                let best = request.candidates.iter().min_by_key(|c| key(c)).expect("non-empty");
                Ok(Answer::Object(best.clone()))
            }
        }
    }
}

impl Oracle for ScriptedOracle {
    fn respond(&mut self, request: &OracleRequest) -> Result<Answer, OracleError> {
        self.requests += 1;
        self.decide(request)
    }

    fn stats(&self) -> OracleStats {
        OracleStats { requests: self.requests, fallbacks: 0 }
    }
}

/// One line of a traffic file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficRecord {
    pub hash: String,
    pub request: OracleRequest,
    pub answer: Answer,
}

/// Answers from a recorded traffic file, matched by request hash. Repeated
/// requests consume their recorded answers in order.
#[derive(Debug, Clone, Default)]
pub struct ReplayOracle {
    answers: BTreeMap<String, VecDeque<Answer>>,
    requests: usize,
}

impl ReplayOracle {
    pub fn from_records(records: impl IntoIterator<Item = TrafficRecord>) -> Self {
        let mut answers: BTreeMap<String, VecDeque<Answer>> = BTreeMap::new();
        for r in records {
            answers.entry(r.hash).or_default().push_back(r.answer);
        }
        ReplayOracle { answers, requests: 0 }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, OracleError> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|source| OracleError::Io { path: path.display().to_string(), source })?;
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            records.push(serde_json::from_str(line).map_err(|source| OracleError::Record { line: i + 1, source })?);
        }
        Ok(ReplayOracle::from_records(records))
    }
}

impl Oracle for ReplayOracle {
    fn respond(&mut self, request: &OracleRequest) -> Result<Answer, OracleError> {
        self.requests += 1;
        let hash = request.hash();
        self.answers.get_mut(&hash).and_then(VecDeque::pop_front).ok_or(OracleError::ReplayMiss(hash))
    }

    fn stats(&self) -> OracleStats {
        OracleStats { requests: self.requests, fallbacks: 0 }
    }
}

/// Passes requests through to `inner` and appends each exchange to a JSONL file.
pub struct RecordingOracle<O> {
    inner: O,
    out: BufWriter<File>,
    path: PathBuf,
}

impl<O: Oracle> RecordingOracle<O> {
    pub fn create(inner: O, path: impl AsRef<Path>) -> Result<Self, OracleError> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|source| OracleError::Io { path: path.display().to_string(), source })?;
        Ok(RecordingOracle { inner, out: BufWriter::new(file), path })
    }

    pub fn into_inner(mut self) -> Result<O, OracleError> {
        self.out.flush().map_err(|source| OracleError::Io { path: self.path.display().to_string(), source })?;
        Ok(self.inner)
    }
}

impl<O: Oracle> Oracle for RecordingOracle<O> {
    fn respond(&mut self, request: &OracleRequest) -> Result<Answer, OracleError> {
        let answer = self.inner.respond(request)?;
        let record = TrafficRecord { hash: request.hash(), request: request.clone(), answer: answer.clone() };
        let line = serde_json::to_string(&record).expect("record serializes");
        writeln!(self.out, "{line}")
            .and_then(|_| self.out.flush())
            .map_err(|source| OracleError::Io { path: self.path.display().to_string(), source })?;
        Ok(answer)
    }

    fn stats(&self) -> OracleStats {
        self.inner.stats()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn choose(candidates: &[&str]) -> OracleRequest {
        OracleRequest {
            system: String::new(),
            user: String::new(),
            candidates: candidates.iter().map(|s| s.to_string()).collect(),
            mode: Mode::ChooseObject,
            context: RequestContext::default(),
        }
    }

    #[test]
    fn portable_candidate_wins() {
        let o = ScriptedOracle::default();
        assert_eq!(o.decide(&choose(&["sofa", "mug", "lamp"])).unwrap(), Answer::Object("mug".into()));
        assert_eq!(o.decide(&choose(&["mug", "bowl"])).unwrap(), Answer::Object("bowl".into()));
    }

    #[test]
    fn room_prior_breaks_furniture_choice() {
        let o = ScriptedOracle::default();
        assert_eq!(o.room_prior("treadmill"), 6);
        assert_eq!(o.room_prior("toilet"), 3);
        assert_eq!(o.decide(&choose(&["toilet", "treadmill"])).unwrap(), Answer::Object("treadmill".into()));
        assert!(matches!(o.decide(&choose(&[])), Err(OracleError::NoCandidates)));
    }

    #[test]
    fn yes_no_compares_cost_with_remaining() {
        let o = ScriptedOracle::default();
        let mut r = choose(&[]);
        r.mode = Mode::YesNo;
        r.context.traceback_cost = Some(4);
        r.context.remaining_steps = 2;
        assert_eq!(o.decide(&r).unwrap(), Answer::No);
        r.context.remaining_steps = 4;
        assert_eq!(o.decide(&r).unwrap(), Answer::Yes);
    }

    #[test]
    fn history_prefers_untried_candidates() {
        let o = ScriptedOracle::default();
        let mut r = choose(&["toilet", "treadmill"]);
        r.context.history = Some(vec![MemoryEntry { objects: vec!["treadmill".into()], action: "treadmill".into() }]);
        assert_eq!(o.decide(&r).unwrap(), Answer::Object("toilet".into()));
        r.context.history = Some(vec![
            MemoryEntry { objects: vec!["toilet".into(), "treadmill".into()], action: "treadmill".into() },
            MemoryEntry { objects: vec!["toilet".into(), "mug".into()], action: "mug".into() },
            MemoryEntry { objects: vec!["bathtub".into()], action: "toilet".into() },
        ]);
        assert_eq!(o.decide(&r).unwrap(), Answer::Object("toilet".into()));
    }

    #[test]
    fn scripted_is_pure() {
        let mut o = ScriptedOracle::default();
        let r = choose(&["sofa", "bed", "desk"]);
        let a = o.respond(&r).unwrap();
        assert_eq!(o.respond(&r).unwrap(), a);
        assert_eq!(o.stats().requests, 2);
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traffic.jsonl");
        let mut rec = RecordingOracle::create(ScriptedOracle::default(), &path).unwrap();
        let r1 = choose(&["sofa", "mug"]);
        let r2 = choose(&["toilet", "treadmill"]);
        let a1 = rec.respond(&r1).unwrap();
        let a2 = rec.respond(&r2).unwrap();
        rec.into_inner().unwrap();
        let mut replay = ReplayOracle::load(&path).unwrap();
        assert_eq!(replay.respond(&r2).unwrap(), a2);
        assert_eq!(replay.respond(&r1).unwrap(), a1);
        assert!(matches!(replay.respond(&r1), Err(OracleError::ReplayMiss(_))));
    }

    #[test]
    fn hash_ignores_structured_context() {
        let a = choose(&["sofa"]);
        let mut b = a.clone();
        b.context.remaining_steps = 9;
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), choose(&["lamp"]).hash());
    }
}
