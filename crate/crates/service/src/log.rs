//! Append-only JSON-lines event log.
//!
//! Every state change of a session is one line. A line is written and
//! flushed before the change becomes visible, so replaying the file
//! reconstructs everything that was ever acknowledged.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use vocabforge::scoring::{self, ScoringError};
use vocabforge::{ScoreReport, TestSet, TrialResponse};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    SessionCreated {
        session_id: String,
        test_id: String,
        seed: u64,
        native_language: Option<String>,
        order: Vec<String>,
        created_at: u64,
    },
    TrialServed {
        session_id: String,
        trial_index: usize,
        item_id: String,
        served_at: u64,
    },
    Response {
        session_id: String,
        response: TrialResponse,
    },
    Finished {
        session_id: String,
        report: ScoreReport,
    },
}

impl Event {
    pub fn session_id(&self) -> &str {
        match self {
            Event::SessionCreated { session_id, .. }
            | Event::TrialServed { session_id, .. }
            | Event::Response { session_id, .. }
            | Event::Finished { session_id, .. } => session_id,
        }
    }
}

#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl EventLog {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(EventLog { path: path.to_path_buf(), file: Mutex::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, event: &Event) -> std::io::Result<()> {
        let mut line = serde_json::to_string(event)?;
        line.push('\n');
        let mut file = self.file.lock().unwrap_or_else(|e| e.into_inner());
        file.write_all(line.as_bytes())?;
        file.flush()
    }
}

/// Reads every event; a torn final line (crash mid-write) is ignored.
pub fn read_events(path: &Path) -> std::io::Result<Vec<Event>> {
    let reader = BufReader::new(File::open(path)?);
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(ev) => out.push(ev),
            Err(e) if i + 1 == lines.len() => log::warn!("dropping torn last log line: {e}"),
            Err(e) => return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1))),
        }
    }
    Ok(out)
}

/// What the log says about one session.
#[derive(Debug, Clone, Default)]
pub struct SessionRecord {
    pub test_id: String,
    pub native_language: Option<String>,
    pub responses: Vec<TrialResponse>,
    pub report: Option<ScoreReport>,
}

pub fn records(events: &[Event]) -> BTreeMap<String, SessionRecord> {
    let mut out: BTreeMap<String, SessionRecord> = BTreeMap::new();
    for ev in events {
        let rec = out.entry(ev.session_id().to_string()).or_default();
        match ev {
            Event::SessionCreated { test_id, native_language, .. } => {
                rec.test_id = test_id.clone();
                rec.native_language = native_language.clone();
            }
            Event::TrialServed { .. } => {}
            Event::Response { response, .. } => rec.responses.push(response.clone()),
            Event::Finished { report, .. } => rec.report = Some(report.clone()),
        }
    }
    out
}

/// Rescores every finished session from its logged responses.
pub fn rescore(
    events: &[Event],
    tests: &BTreeMap<String, TestSet>,
) -> Result<BTreeMap<String, ScoreReport>, ScoringError> {
    let mut out = BTreeMap::new();
    for (id, rec) in records(events) {
        if rec.report.is_none() {
            continue;
        }
        let Some(key) = tests.get(&rec.test_id) else { continue };
        let mut report = scoring::score_session(&id, &rec.responses, key)?;
        report.native_language = rec.native_language;
        out.insert(id, report);
    }
    Ok(out)
}
