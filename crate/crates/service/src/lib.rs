//! Administers generated tests over HTTP.
//!
//! Each session presents the test's items in its own seeded order, with
//! every 30-trial batch balanced between real words and pseudowords. The
//! server times each trial: a response later than display plus grace is
//! stored as a timeout whatever the client claims. Every state change is
//! appended to a JSON-lines log before it is acknowledged, and replaying
//! the log restores all sessions.

pub mod clock;
pub mod http;
pub mod log;
pub mod session;

use std::collections::BTreeMap;
use std::path::Path;

pub use clock::{Clock, ManualClock, SystemClock};
pub use session::{Ack, NextTrial, Service, ServiceConfig, ServiceError, SessionInfo, SessionState, TestInfo};
use vocabforge::TestSet;

/// Loads every `*.json` test set in `dir`, keyed by file stem.
pub fn load_tests(dir: &Path) -> Result<BTreeMap<String, TestSet>, vocabforge::assemble::AssembleError> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            out.insert(id, TestSet::load(&path)?);
        }
    }
    Ok(out)
}
