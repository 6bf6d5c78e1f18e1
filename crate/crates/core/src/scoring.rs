//! Session scoring and cohort statistics.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assemble::TestSet;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("response references unknown item {0:?}")]
    UnknownItem(String),
    #[error("more than one response for item {0:?}")]
    DuplicateResponse(String),
    #[error("trial index {index} outside a {len}-item test")]
    TrialIndex { index: usize, len: usize },
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 observations, got {0}")]
    TooFew(usize),
    #[error("correlation undefined: zero variance")]
    ZeroVariance,
    #[error("report {0:?} has fewer than two batches")]
    MissingBatch(String),
    #[error("distance table: {0}")]
    Distances(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Real,
    Fake,
    Timeout,
}

/// One resolved trial. Times are server milliseconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResponse {
    pub item_id: String,
    pub answer: Answer,
    pub rt_ms: u64,
    /// Position of the trial in the session's presentation order.
    pub trial_index: usize,
    #[serde(default)]
    pub served_at: u64,
    #[serde(default)]
    pub received_at: u64,
    /// What the client reported; advisory only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_rt_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub session_id: String,
    pub tested_language: String,
    #[serde(default)]
    pub native_language: Option<String>,
    pub accuracy: f64,
    pub batch_accuracies: Vec<f64>,
    pub hit_rate: f64,
    pub correct_rejection_rate: f64,
    pub n_trials: usize,
    pub n_missed: usize,
}

/// How trials without a key press count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissedPolicy {
    #[default]
    Incorrect,
    Exclude,
}

fn rate(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn score_session(
    session_id: &str,
    responses: &[TrialResponse],
    key: &TestSet,
) -> Result<ScoreReport, ScoringError> {
    score_session_with(session_id, responses, key, MissedPolicy::default())
}

/// Scores responses against the key. Batches follow `trial_index`, so the
/// result does not depend on the order of `responses`.
pub fn score_session_with(
    session_id: &str,
    responses: &[TrialResponse],
    key: &TestSet,
    policy: MissedPolicy,
) -> Result<ScoreReport, ScoringError> {
    let labels: HashMap<&str, bool> = key.items.iter().map(|i| (i.id.as_str(), i.is_real)).collect();
    let batch_size = key.batch_size.max(1);
    let n_batches = key.items.len().div_ceil(batch_size);
    let mut seen = HashSet::new();
    let mut batch_correct = vec![0usize; n_batches];
    let mut batch_total = vec![0usize; n_batches];
    let (mut correct, mut counted, mut missed) = (0, 0, 0);
    let (mut hits, mut reals, mut rejections, mut pseudos) = (0, 0, 0, 0);
    for r in responses {
        let &is_real = labels.get(r.item_id.as_str()).ok_or_else(|| ScoringError::UnknownItem(r.item_id.clone()))?;
        if !seen.insert(r.item_id.as_str()) {
            return Err(ScoringError::DuplicateResponse(r.item_id.clone()));
        }
        if r.trial_index >= key.items.len() {
            return Err(ScoringError::TrialIndex { index: r.trial_index, len: key.items.len() });
        }
        if r.answer == Answer::Timeout {
            missed += 1;
            if policy == MissedPolicy::Exclude {
                continue;
            }
        }
        let ok = matches!((r.answer, is_real), (Answer::Real, true) | (Answer::Fake, false));
        counted += 1;
        correct += ok as usize;
        let b = r.trial_index / batch_size;
        batch_total[b] += 1;
        batch_correct[b] += ok as usize;
        if is_real {
            reals += 1;
            hits += ok as usize;
        } else {
            pseudos += 1;
            rejections += ok as usize;
        }
    }
    Ok(ScoreReport {
        session_id: session_id.to_string(),
        tested_language: key.language.clone(),
        native_language: None,
        accuracy: rate(correct, counted),
        batch_accuracies: batch_correct.iter().zip(&batch_total).map(|(&c, &t)| rate(c, t)).collect(),
        hit_rate: rate(hits, reals),
        correct_rejection_rate: rate(rejections, pseudos),
        n_trials: responses.len(),
        n_missed: missed,
    })
}

/// Sample Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, ScoringError> {
    if x.len() != y.len() {
        return Err(ScoringError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(ScoringError::TooFew(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(ScoringError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation between first- and second-batch accuracy across reports
/// (no Spearman-Brown correction).
pub fn split_half_reliability(reports: &[ScoreReport]) -> Result<f64, ScoringError> {
    let mut first = Vec::with_capacity(reports.len());
    let mut second = Vec::with_capacity(reports.len());
    for r in reports {
        let [a, b, ..] = r.batch_accuracies[..] else {
            return Err(ScoringError::MissingBatch(r.session_id.clone()));
        };
        first.push(a);
        second.push(b);
    }
    pearson(&first, &second)
}

/// Linguistic distance from a tested language to a native language.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DistanceMatrix {
    entries: BTreeMap<(String, String), f64>,
}

#[derive(Deserialize)]
struct DistanceRow {
    tested: String,
    native: String,
    distance: f64,
}

impl DistanceMatrix {
    pub fn insert(&mut self, tested: &str, native: &str, distance: f64) -> Result<(), ScoringError> {
        if !(distance >= 0.0 && distance.is_finite()) {
            return Err(ScoringError::Distances(format!("{tested}/{native}: invalid distance {distance}")));
        }
        if tested == native && distance != 0.0 {
            return Err(ScoringError::Distances(format!("{tested}: self-distance must be 0")));
        }
        self.entries.insert((tested.to_string(), native.to_string()), distance);
        Ok(())
    }

    /// Distance for a cell; identical languages are at distance 0.
    pub fn get(&self, tested: &str, native: &str) -> Option<f64> {
        if tested == native {
            return Some(0.0);
        }
        self.entries.get(&(tested.to_string(), native.to_string())).copied()
    }

    /// Reads `tested,native,distance` CSV with a header row.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, ScoringError> {
        let mut out = DistanceMatrix::default();
        for row in csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader).deserialize() {
            let row: DistanceRow = row?;
            out.insert(&row.tested, &row.native, row.distance)?;
        }
        Ok(out)
    }
}

/// Mean accuracy per (tested, native) cell over reports that name a
/// native language.
pub fn cell_means(reports: &[ScoreReport]) -> BTreeMap<(String, String), f64> {
    let mut sums: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    for r in reports {
        if let Some(native) = &r.native_language {
            let slot = sums.entry((r.tested_language.clone(), native.clone())).or_default();
            slot.0 += r.accuracy;
            slot.1 += 1;
        }
    }
    sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// Correlation between cell accuracies and linguistic distances over the
/// cells present in both tables.
pub fn distance_correlation(
    mean_accuracies: &BTreeMap<(String, String), f64>,
    distances: &DistanceMatrix,
    exclude_native: bool,
) -> Result<f64, ScoringError> {
    let (mut acc, mut dist) = (Vec::new(), Vec::new());
    for ((tested, native), &a) in mean_accuracies {
        if exclude_native && tested == native {
            continue;
        }
        if let Some(d) = distances.get(tested, native) {
            acc.push(a);
            dist.push(d);
        }
    }
    pearson(&acc, &dist)
}

#[derive(Serialize, Deserialize)]
struct ReportRow {
    session_id: String,
    tested_language: String,
    native_language: String,
    accuracy: f64,
    batch_accuracies: String,
    hit_rate: f64,
    correct_rejection_rate: f64,
    n_trials: usize,
    n_missed: usize,
}

/// Writes reports as CSV; batch accuracies are `;`-joined.
pub fn write_reports_csv<W: Write>(writer: W, reports: &[ScoreReport]) -> Result<(), ScoringError> {
    let mut out = csv::Writer::from_writer(writer);
    for r in reports {
        out.serialize(ReportRow {
            session_id: r.session_id.clone(),
            tested_language: r.tested_language.clone(),
            native_language: r.native_language.clone().unwrap_or_default(),
            accuracy: r.accuracy,
            batch_accuracies: r.batch_accuracies.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
            hit_rate: r.hit_rate,
            correct_rejection_rate: r.correct_rejection_rate,
            n_trials: r.n_trials,
            n_missed: r.n_missed,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_reports_csv<R: Read>(reader: R) -> Result<Vec<ScoreReport>, ScoringError> {
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(reader).deserialize() {
        let row: ReportRow = row?;
        let batch_accuracies = row
            .batch_accuracies
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|e| ScoringError::Distances(format!("batch accuracy {s:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        out.push(ScoreReport {
            session_id: row.session_id,
            tested_language: row.tested_language,
            native_language: Some(row.native_language).filter(|s| !s.is_empty()),
            accuracy: row.accuracy,
            batch_accuracies,
            hit_rate: row.hit_rate,
            correct_rejection_rate: row.correct_rejection_rate,
            n_trials: row.n_trials,
            n_missed: row.n_missed,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemble::TestItem;

    fn key(n: usize) -> TestSet {
        TestSet {
            language: "en".into(),
            seed: 1,
            pipeline_version: "test".into(),
            batch_size: 30,
            items: (0..n)
                .map(|i| TestItem { id: format!("i{i}"), text: format!("t{i}"), is_real: i % 2 == 0 })
                .collect(),
        }
    }

    fn respond(key: &TestSet, correct: impl Fn(usize) -> bool) -> Vec<TrialResponse> {
        key.items
            .iter()
            .enumerate()
            .map(|(i, item)| {
                let right = if item.is_real { Answer::Real } else { Answer::Fake };
                let wrong = if item.is_real { Answer::Fake } else { Answer::Real };
                TrialResponse {
                    item_id: item.id.clone(),
                    answer: if correct(i) { right } else { wrong },
                    rt_ms: 500,
                    trial_index: i,
                    served_at: 0,
                    received_at: 500,
                    client_rt_ms: None,
                }
            })
            .collect()
    }

    #[test]
    fn all_correct() {
        let k = key(60);
        let r = score_session("s", &respond(&k, |_| true), &k).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.batch_accuracies, vec![1.0, 1.0]);
        assert_eq!((r.hit_rate, r.correct_rejection_rate), (1.0, 1.0));
    }

    #[test]
    fn fifty_two_of_sixty() {
        let k = key(60);
        let r = score_session("s", &respond(&k, |i| i >= 8), &k).unwrap();
        assert!((r.accuracy - 0.8667).abs() < 1e-4);
        assert!((r.batch_accuracies[0] - 22.0 / 30.0).abs() < 1e-12);
        assert_eq!(r.batch_accuracies[1], 1.0);
    }

    #[test]
    fn timeouts_count_as_incorrect() {
        let k = key(60);
        let mut rs = respond(&k, |_| true);
        for r in &mut rs[..10] {
            r.answer = Answer::Timeout;
        }
        let r = score_session("s", &rs, &k).unwrap();
        assert_eq!(r.n_missed, 10);
        assert!((r.accuracy - 50.0 / 60.0).abs() < 1e-12);
        let excluded = score_session_with("s", &rs, &k, MissedPolicy::Exclude).unwrap();
        assert_eq!(excluded.accuracy, 1.0);
    }

    #[test]
    fn bad_responses() {
        let k = key(4);
        let mut rs = respond(&k, |_| true);
        rs.push(rs[0].clone());
        assert!(matches!(score_session("s", &rs, &k), Err(ScoringError::DuplicateResponse(_))));
        rs.pop();
        rs[0].item_id = "nope".into();
        assert!(matches!(score_session("s", &rs, &k), Err(ScoringError::UnknownItem(_))));
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-15);
        // sxy = 3, sxx = 2, syy = 14/3  =>  r = 3 / sqrt(28/3)
        let want = 3.0 / (28.0f64 / 3.0).sqrt();
        assert!((pearson(&x, &[1.0, 2.0, 4.0]).unwrap() - want).abs() < 1e-12);
        assert!(matches!(pearson(&x, &[2.0, 2.0, 2.0]), Err(ScoringError::ZeroVariance)));
        assert!(matches!(pearson(&x[..2], &x[..2]), Err(ScoringError::TooFew(2))));
        assert!(matches!(pearson(&x, &x[..2]), Err(ScoringError::LengthMismatch(3, 2))));
    }

    #[test]
    fn distance_matrix_rules() {
        let csv = "tested,native,distance\nde,nl,0.3\nfi,nl,0.9\n";
        let d = DistanceMatrix::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(d.get("de", "nl"), Some(0.3));
        assert_eq!(d.get("nl", "nl"), Some(0.0));
        assert_eq!(d.get("nl", "de"), None);
        assert!(DistanceMatrix::from_csv("tested,native,distance\nde,de,0.1\n".as_bytes()).is_err());
        assert!(DistanceMatrix::from_csv("tested,native,distance\nde,nl,-1\n".as_bytes()).is_err());
    }

    #[test]
    fn monotone_accuracy_gives_minus_one() {
        let mut d = DistanceMatrix::default();
        let mut acc = BTreeMap::new();
        for (i, lang) in ["de", "en", "es", "fr"].iter().enumerate() {
            d.insert(lang, "nl", 0.2 * (i + 1) as f64).unwrap();
            acc.insert((lang.to_string(), "nl".to_string()), 0.9 - 0.1 * i as f64);
        }
        assert!((distance_correlation(&acc, &d, true).unwrap() + 1.0).abs() < 1e-12);
        let flat: BTreeMap<_, _> = acc.keys().map(|k| (k.clone(), 0.7)).collect();
        assert!(matches!(distance_correlation(&flat, &d, true), Err(ScoringError::ZeroVariance)));
    }

    #[test]
    fn reports_csv_roundtrip() {
        let k = key(60);
        let mut r = score_session("s1", &respond(&k, |i| i % 3 != 0), &k).unwrap();
        r.native_language = Some("nl".into());
        let mut buf = Vec::new();
        write_reports_csv(&mut buf, std::slice::from_ref(&r)).unwrap();
        assert_eq!(read_reports_csv(buf.as_slice()).unwrap(), vec![r]);
    }
}
