use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use vocabforge::scoring::{self, ScoringError};
use vocabforge::{Answer, ScoreReport, TestSet, TrialResponse};

use crate::clock::Clock;
use crate::log::{read_events, Event, EventLog};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown test {0:?}")]
    UnknownTest(String),
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("{0} trials are still unresolved")]
    Unresolved(usize),
    #[error("session {0:?} has expired")]
    Expired(String),
    #[error("log: {0}")]
    Log(#[from] std::io::Error),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("replaying log: {0}")]
    Replay(String),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub display_ms: u64,
    /// Responses are still accepted this long after the stimulus is hidden.
    pub grace_ms: u64,
    /// Sessions not finished within this time expire.
    pub session_ttl_ms: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { display_ms: 2_000, grace_ms: 1_500, session_ttl_ms: 2 * 60 * 60 * 1_000 }
    }
}

impl ServiceConfig {
    pub fn window_ms(&self) -> u64 {
        self.display_ms + self.grace_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Created,
    Running,
    Finished,
    Expired,
}

#[derive(Debug, Clone)]
struct Pending {
    trial_index: usize,
    item_id: String,
    served_at: u64,
}

#[derive(Debug)]
pub struct Session {
    pub session_id: String,
    pub test_id: String,
    pub seed: u64,
    pub native_language: Option<String>,
    pub trial_order: Vec<String>,
    /// Trials served so far.
    pub cursor: usize,
    pub state: SessionState,
    pub created_at: u64,
    pending: Option<Pending>,
    responses: Vec<TrialResponse>,
    report: Option<ScoreReport>,
}

impl Session {
    pub fn responses(&self) -> &[TrialResponse] {
        &self.responses
    }

    fn resolved(&self) -> usize {
        self.responses.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub n_trials: usize,
    pub display_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextTrial {
    Trial { trial_index: usize, item_id: String, text: String, display_ms: u64, respond_by: u64 },
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub item_id: String,
    pub trial_index: usize,
    pub answer: Answer,
    pub rt_ms: u64,
}

impl From<&TrialResponse> for Ack {
    fn from(r: &TrialResponse) -> Self {
        Ack { item_id: r.item_id.clone(), trial_index: r.trial_index, answer: r.answer, rt_ms: r.rt_ms }
    }
}

/// Test metadata safe to publish: no item labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestInfo {
    pub test_id: String,
    pub language: String,
    pub n_items: usize,
    pub batch_size: usize,
    pub pipeline_version: String,
}

/// Presentation order: each batch holds an even share of real and pseudo
/// items, shuffled within the batch.
pub fn stratified_order(test: &TestSet, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut real: Vec<&str> = test.items.iter().filter(|i| i.is_real).map(|i| i.id.as_str()).collect();
    let mut pseudo: Vec<&str> = test.items.iter().filter(|i| !i.is_real).map(|i| i.id.as_str()).collect();
    real.shuffle(&mut rng);
    pseudo.shuffle(&mut rng);
    let batch = test.batch_size.max(1);
    let (mut real, mut pseudo) = (real.into_iter(), pseudo.into_iter());
    let mut order = Vec::with_capacity(test.items.len());
    let mut remaining = test.items.len();
    while remaining > 0 {
        let size = batch.min(remaining);
        let mut chunk: Vec<&str> = Vec::with_capacity(size);
        // Alternate so that an odd batch or an unbalanced test still
        // spreads both classes as evenly as possible.
        while chunk.len() < size {
            let next = if chunk.len() % 2 == 0 {
                real.next().or_else(|| pseudo.next())
            } else {
                pseudo.next().or_else(|| real.next())
            };
            chunk.push(next.expect("enough items"));
        }
        chunk.shuffle(&mut rng);
        order.extend(chunk.into_iter().map(String::from));
        remaining -= size;
    }
    order
}

pub struct Service {
    config: ServiceConfig,
    clock: Arc<dyn Clock>,
    tests: BTreeMap<String, Arc<TestSet>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    log: Option<EventLog>,
}

impl Service {
    pub fn new(tests: BTreeMap<String, TestSet>, config: ServiceConfig, clock: Arc<dyn Clock>) -> Self {
        Service {
            config,
            clock,
            tests: tests.into_iter().map(|(k, v)| (k, Arc::new(v))).collect(),
            sessions: RwLock::new(HashMap::new()),
            log: None,
        }
    }

    /// Opens (or creates) the event log at `path` and restores every
    /// session recorded in it.
    pub fn with_log(mut self, path: &Path) -> Result<Self, ServiceError> {
        if path.exists() {
            let events = read_events(path)?;
            self.restore(&events)?;
        }
        self.log = Some(EventLog::open(path)?);
        Ok(self)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn now_ms(&self) -> u64 {
        self.clock.now_ms()
    }

    pub fn tests(&self) -> Vec<TestInfo> {
        self.tests
            .iter()
            .map(|(id, t)| TestInfo {
                test_id: id.clone(),
                language: t.language.clone(),
                n_items: t.items.len(),
                batch_size: t.batch_size,
                pipeline_version: t.pipeline_version.clone(),
            })
            .collect()
    }

    pub fn test(&self, test_id: &str) -> Option<&TestSet> {
        self.tests.get(test_id).map(|t| t.as_ref())
    }

    fn append(&self, event: &Event) -> Result<(), ServiceError> {
        if let Some(log) = &self.log {
            log.append(event)?;
        }
        Ok(())
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        let sessions = self.sessions.read().unwrap_or_else(|e| e.into_inner());
        sessions.get(id).cloned().ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn create_session(
        &self,
        test_id: &str,
        seed: Option<u64>,
        native_language: Option<String>,
    ) -> Result<SessionInfo, ServiceError> {
        let test = self.tests.get(test_id).ok_or_else(|| ServiceError::UnknownTest(test_id.to_string()))?;
        let seed = seed.unwrap_or_else(|| rand::rng().random());
        let session_id = uuid::Uuid::new_v4().simple().to_string();
        let order = stratified_order(test, seed);
        let created_at = self.clock.now_ms();
        self.append(&Event::SessionCreated {
            session_id: session_id.clone(),
            test_id: test_id.to_string(),
            seed,
            native_language: native_language.clone(),
            order: order.clone(),
            created_at,
        })?;
        let session = Session {
            session_id: session_id.clone(),
            test_id: test_id.to_string(),
            seed,
            native_language,
            trial_order: order,
            cursor: 0,
            state: SessionState::Created,
            created_at,
            pending: None,
            responses: Vec::new(),
            report: None,
        };
        let n_trials = session.trial_order.len();
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(session_id.clone(), Arc::new(Mutex::new(session)));
        Ok(SessionInfo { session_id, n_trials, display_ms: self.config.display_ms })
    }

    fn check_expiry(&self, s: &mut Session, now: u64) -> Result<(), ServiceError> {
        if matches!(s.state, SessionState::Created | SessionState::Running)
            && now.saturating_sub(s.created_at) > self.config.session_ttl_ms
        {
            s.state = SessionState::Expired;
        }
        if s.state == SessionState::Expired {
            return Err(ServiceError::Expired(s.session_id.clone()));
        }
        Ok(())
    }

    /// Records a pending trial whose window has closed as a timeout.
    fn close_stale(&self, s: &mut Session, now: u64) -> Result<(), ServiceError> {
        if let Some(p) = &s.pending {
            if now > p.served_at + self.config.window_ms() {
                let response = TrialResponse {
                    item_id: p.item_id.clone(),
                    answer: Answer::Timeout,
                    rt_ms: self.config.window_ms(),
                    trial_index: p.trial_index,
                    served_at: p.served_at,
                    received_at: now,
                    client_rt_ms: None,
                };
                self.record(s, response)?;
            }
        }
        Ok(())
    }

    fn record(&self, s: &mut Session, response: TrialResponse) -> Result<(), ServiceError> {
        self.append(&Event::Response { session_id: s.session_id.clone(), response: response.clone() })?;
        s.responses.push(response);
        s.pending = None;
        Ok(())
    }

    pub fn next_trial(&self, session_id: &str) -> Result<NextTrial, ServiceError> {
        let handle = self.session(session_id)?;
        let mut s = handle.lock().unwrap_or_else(|e| e.into_inner());
        let now = self.clock.now_ms();
        if s.state == SessionState::Finished {
            return Ok(NextTrial::Complete);
        }
        self.check_expiry(&mut s, now)?;
        self.close_stale(&mut s, now)?;
        if let Some(p) = &s.pending {
            return Err(ServiceError::Protocol(format!("trial {} is still awaiting a response", p.trial_index)));
        }
        if s.cursor >= s.trial_order.len() {
            return Ok(NextTrial::Complete);
        }
        let trial_index = s.cursor;
        let item_id = s.trial_order[trial_index].clone();
        let test = &self.tests[&s.test_id];
        let text = test.item(&item_id).expect("order built from the test").text.clone();
        self.append(&Event::TrialServed {
            session_id: s.session_id.clone(),
            trial_index,
            item_id: item_id.clone(),
            served_at: now,
        })?;
        s.pending = Some(Pending { trial_index, item_id: item_id.clone(), served_at: now });
        s.cursor += 1;
        s.state = SessionState::Running;
        Ok(NextTrial::Trial {
            trial_index,
            item_id,
            text,
            display_ms: self.config.display_ms,
            respond_by: now + self.config.window_ms(),
        })
    }

    /// Stores the answer to the current trial. The reaction time is the
    /// server's `received_at - served_at`; past the response window the
    /// answer becomes a timeout. Resubmitting a resolved item returns the
    /// original acknowledgement.
    pub fn submit_response(
        &self,
        session_id: &str,
        item_id: &str,
        answer: Answer,
        client_rt_ms: Option<u64>,
    ) -> Result<Ack, ServiceError> {
        let handle = self.session(session_id)?;
        let mut s = handle.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(done) = s.responses.iter().find(|r| r.item_id == item_id) {
            return Ok(Ack::from(done));
        }
        let now = self.clock.now_ms();
        self.check_expiry(&mut s, now)?;
        let Some(p) = s.pending.clone() else {
            return Err(ServiceError::Protocol(format!("no trial is awaiting a response (got {item_id:?})")));
        };
        if p.item_id != item_id {
            return Err(ServiceError::Protocol(format!(
                "response for {item_id:?} but the current trial is {:?}",
                p.item_id
            )));
        }
        let rt_ms = now - p.served_at;
        let answer = if rt_ms > self.config.window_ms() { Answer::Timeout } else { answer };
        let response = TrialResponse {
            item_id: p.item_id,
            answer,
            rt_ms,
            trial_index: p.trial_index,
            served_at: p.served_at,
            received_at: now,
            client_rt_ms,
        };
        let ack = Ack::from(&response);
        self.record(&mut s, response)?;
        Ok(ack)
    }

    /// Scores the session. Allowed once every trial is resolved, or on an
    /// expired session, whose unresolved trials count as timeouts.
    pub fn finish(&self, session_id: &str) -> Result<ScoreReport, ServiceError> {
        let handle = self.session(session_id)?;
        let mut s = handle.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(report) = &s.report {
            return Ok(report.clone());
        }
        let now = self.clock.now_ms();
        if let Err(ServiceError::Expired(_)) = self.check_expiry(&mut s, now) {
            let pending = s.pending.clone();
            let resolved: HashSet<String> = s.responses.iter().map(|r| r.item_id.clone()).collect();
            let open: Vec<(usize, String)> = s
                .trial_order
                .iter()
                .enumerate()
                .filter(|(_, id)| !resolved.contains(*id))
                .map(|(i, id)| (i, id.clone()))
                .collect();
            for (trial_index, item_id) in open {
                let served_at = pending.as_ref().filter(|p| p.item_id == item_id).map_or(now, |p| p.served_at);
                let response = TrialResponse {
                    item_id,
                    answer: Answer::Timeout,
                    rt_ms: now - served_at,
                    trial_index,
                    served_at,
                    received_at: now,
                    client_rt_ms: None,
                };
                self.record(&mut s, response)?;
            }
        } else {
            self.close_stale(&mut s, now)?;
            let open = s.trial_order.len() - s.resolved();
            if open > 0 {
                return Err(ServiceError::Unresolved(open));
            }
        }
        let mut report = scoring::score_session(&s.session_id, &s.responses, &self.tests[&s.test_id])?;
        report.native_language = s.native_language.clone();
        self.append(&Event::Finished { session_id: s.session_id.clone(), report: report.clone() })?;
        s.report = Some(report.clone());
        s.state = SessionState::Finished;
        Ok(report)
    }

    pub fn state(&self, session_id: &str) -> Result<SessionState, ServiceError> {
        Ok(self.session(session_id)?.lock().unwrap_or_else(|e| e.into_inner()).state)
    }

    pub fn responses(&self, session_id: &str) -> Result<Vec<TrialResponse>, ServiceError> {
        Ok(self.session(session_id)?.lock().unwrap_or_else(|e| e.into_inner()).responses.clone())
    }

    fn restore(&mut self, events: &[Event]) -> Result<(), ServiceError> {
        let sessions = self.sessions.get_mut().unwrap_or_else(|e| e.into_inner());
        for ev in events {
            if let Event::SessionCreated { session_id, test_id, seed, native_language, order, created_at } = ev {
                if !self.tests.contains_key(test_id) {
                    return Err(ServiceError::Replay(format!("session {session_id} uses unknown test {test_id}")));
                }
                let s = Session {
                    session_id: session_id.clone(),
                    test_id: test_id.clone(),
                    seed: *seed,
                    native_language: native_language.clone(),
                    trial_order: order.clone(),
                    cursor: 0,
                    state: SessionState::Created,
                    created_at: *created_at,
                    pending: None,
                    responses: Vec::new(),
                    report: None,
                };
                sessions.insert(session_id.clone(), Arc::new(Mutex::new(s)));
                continue;
            }
            let handle = sessions
                .get(ev.session_id())
                .ok_or_else(|| ServiceError::Replay(format!("event for unknown session {}", ev.session_id())))?;
            let mut s = handle.lock().unwrap_or_else(|e| e.into_inner());
            match ev {
                Event::SessionCreated { .. } => unreachable!(),
                Event::TrialServed { trial_index, item_id, served_at, .. } => {
                    s.pending =
                        Some(Pending { trial_index: *trial_index, item_id: item_id.clone(), served_at: *served_at });
                    s.cursor = trial_index + 1;
                    s.state = SessionState::Running;
                }
                Event::Response { response, .. } => {
                    s.responses.push(response.clone());
                    s.pending = None;
                }
                Event::Finished { report, .. } => {
                    s.report = Some(report.clone());
                    s.state = SessionState::Finished;
                }
            }
        }
        Ok(())
    }
}
