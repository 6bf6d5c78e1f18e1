mod common;

use std::collections::HashSet;
use std::sync::Arc;

use vocabforge::Answer;
use vocabforge_service::log::{read_events, rescore};
use vocabforge_service::session::stratified_order;
use vocabforge_service::{Clock, ManualClock, NextTrial, ServiceError, SessionState};

fn trial(n: NextTrial) -> (usize, String) {
    match n {
        NextTrial::Trial { trial_index, item_id, .. } => (trial_index, item_id),
        NextTrial::Complete => panic!("unexpected complete"),
    }
}

#[test]
fn orders_are_seeded_and_balanced() {
    let key = common::key("en");
    let a = stratified_order(&key, 1);
    assert_eq!(a, stratified_order(&key, 1));
    assert_ne!(a, stratified_order(&key, 2));
    let mut sorted = a.clone();
    sorted.sort();
    let mut ids: Vec<String> = key.items.iter().map(|i| i.id.clone()).collect();
    ids.sort();
    assert_eq!(sorted, ids);
    for seed in 0..50 {
        for batch in stratified_order(&key, seed).chunks(30) {
            let reals = batch.iter().filter(|id| key.item(id).unwrap().is_real).count();
            assert_eq!(reals, 15);
        }
    }
}

#[test]
fn full_session_lifecycle() {
    let clock = Arc::new(ManualClock::new(1_000));
    let svc = common::service(clock.clone());
    assert!(matches!(svc.create_session("xx", None, None), Err(ServiceError::UnknownTest(_))));
    let info = svc.create_session("en", Some(5), None).unwrap();
    assert_eq!((info.n_trials, info.display_ms), (60, 2_000));
    assert_eq!(svc.state(&info.session_id).unwrap(), SessionState::Created);
    let key = common::key("en");

    let mut seen = HashSet::new();
    for i in 0..60 {
        let next = svc.next_trial(&info.session_id).unwrap();
        if let NextTrial::Trial { display_ms, respond_by, .. } = &next {
            assert_eq!(*display_ms, 2_000);
            assert_eq!(*respond_by, clock.now_ms() + 3_500);
        }
        let (idx, item) = trial(next);
        assert_eq!(idx, i);
        assert!(seen.insert(item.clone()));
        if i == 0 {
            assert!(matches!(svc.next_trial(&info.session_id), Err(ServiceError::Protocol(_))));
            assert!(matches!(
                svc.submit_response(&info.session_id, "bogus", Answer::Real, None),
                Err(ServiceError::Protocol(_))
            ));
            assert!(matches!(svc.finish(&info.session_id), Err(ServiceError::Unresolved(60))));
        }
        clock.advance(900);
        let answer = if key.item(&item).unwrap().is_real { Answer::Real } else { Answer::Fake };
        let ack = svc.submit_response(&info.session_id, &item, answer, Some(12)).unwrap();
        assert_eq!((ack.rt_ms, ack.answer), (900, answer));
        // Duplicate submit: same ack, nothing new stored.
        assert_eq!(svc.submit_response(&info.session_id, &item, Answer::Fake, Some(1)).unwrap(), ack);
        clock.advance(500);
    }
    assert_eq!(svc.next_trial(&info.session_id).unwrap(), NextTrial::Complete);
    let responses = svc.responses(&info.session_id).unwrap();
    assert_eq!(responses.len(), 60);
    assert!(responses.iter().all(|r| r.rt_ms == 900 && r.client_rt_ms == Some(12)));
    let report = svc.finish(&info.session_id).unwrap();
    assert_eq!(report.accuracy, 1.0);
    assert_eq!(report.batch_accuracies, vec![1.0, 1.0]);
    assert_eq!(svc.finish(&info.session_id).unwrap(), report);
    assert_eq!(svc.state(&info.session_id).unwrap(), SessionState::Finished);
    assert_eq!(svc.next_trial(&info.session_id).unwrap(), NextTrial::Complete);
}

#[test]
fn late_responses_become_timeouts() {
    let clock = Arc::new(ManualClock::new(0));
    let svc = common::service(clock.clone());
    let id = svc.create_session("en", Some(1), None).unwrap().session_id;

    let (_, item) = trial(svc.next_trial(&id).unwrap());
    clock.advance(4_000);
    let ack = svc.submit_response(&id, &item, Answer::Real, Some(500)).unwrap();
    assert_eq!((ack.answer, ack.rt_ms), (Answer::Timeout, 4_000));

    // Exactly at the window edge still counts.
    let (_, item) = trial(svc.next_trial(&id).unwrap());
    clock.advance(3_500);
    assert_eq!(svc.submit_response(&id, &item, Answer::Real, None).unwrap().answer, Answer::Real);

    // No response at all: the next request closes the trial.
    let (_, silent) = trial(svc.next_trial(&id).unwrap());
    clock.advance(3_501);
    let (idx, _) = trial(svc.next_trial(&id).unwrap());
    assert_eq!(idx, 3);
    let stored = svc.responses(&id).unwrap();
    assert_eq!(stored[2].item_id, silent);
    assert_eq!(stored[2].answer, Answer::Timeout);
}

#[test]
fn all_timeouts_score_zero() {
    let clock = Arc::new(ManualClock::new(0));
    let svc = common::service(clock.clone());
    let id = svc.create_session("en", Some(3), None).unwrap().session_id;
    for _ in 0..60 {
        trial(svc.next_trial(&id).unwrap());
        clock.advance(5_000);
    }
    let report = svc.finish(&id).unwrap();
    assert_eq!((report.accuracy, report.n_missed, report.n_trials), (0.0, 60, 60));
}

#[test]
fn expired_sessions_finish_with_timeouts() {
    let clock = Arc::new(ManualClock::new(0));
    let svc = common::service(clock.clone());
    let id = svc.create_session("en", Some(3), Some("de".into())).unwrap().session_id;
    let (_, item) = trial(svc.next_trial(&id).unwrap());
    svc.submit_response(&id, &item, Answer::Real, None).unwrap();
    clock.advance(svc.config().session_ttl_ms + 1);
    assert!(matches!(svc.next_trial(&id), Err(ServiceError::Expired(_))));
    let report = svc.finish(&id).unwrap();
    assert_eq!((report.n_trials, report.n_missed), (60, 59));
    assert_eq!(report.native_language.as_deref(), Some("de"));
}

#[test]
fn log_restores_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    let clock = Arc::new(ManualClock::new(0));
    let (finished, open) = {
        let svc = common::service(clock.clone()).with_log(&path).unwrap();
        let a = svc.create_session("en", Some(1), None).unwrap().session_id;
        for _ in 0..60 {
            let (_, item) = trial(svc.next_trial(&a).unwrap());
            clock.advance(700);
            svc.submit_response(&a, &item, Answer::Fake, None).unwrap();
        }
        svc.finish(&a).unwrap();
        let b = svc.create_session("de", Some(2), None).unwrap().session_id;
        trial(svc.next_trial(&b).unwrap());
        (a, b)
    };
    let svc = common::service(clock.clone()).with_log(&path).unwrap();
    assert_eq!(svc.state(&finished).unwrap(), SessionState::Finished);
    // The open session still has its first trial pending.
    assert!(matches!(svc.next_trial(&open), Err(ServiceError::Protocol(_))));
    let events = read_events(&path).unwrap();
    let rescored = rescore(&events, &common::tests()).unwrap();
    let stored = svc.finish(&finished).unwrap();
    assert_eq!(serde_json::to_string(&rescored[&finished]).unwrap(), serde_json::to_string(&stored).unwrap());
}
