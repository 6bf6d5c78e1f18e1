//! Independent reference implementations used to check the library.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use vocabforge::scoring::{self, DistanceMatrix};
use vocabforge::{Answer, ScoreReport, TestItem, TestSet, TrialResponse};

/// Textbook O(|a||b|) LCS table.
pub fn dp_lcs(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] { t[i - 1][j - 1] + 1 } else { t[i - 1][j].max(t[i][j - 1]) };
        }
    }
    t[a.len()][b.len()]
}

pub fn dp_ratio(a: &str, b: &str) -> f64 {
    let total = a.chars().count() + b.chars().count();
    if total == 0 {
        return 100.0;
    }
    (1000.0 * 2.0 * dp_lcs(a, b) as f64 / total as f64).round() / 10.0
}

fn head(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

fn tail(s: &str, n: usize) -> String {
    let c: Vec<char> = s.chars().collect();
    c[c.len().saturating_sub(n)..].iter().collect()
}

/// Brute force: scan every word, keep those in the restricted
/// neighbourhood, take the best DP ratio.
pub fn brute_max_fuzzy(pseudo: &str, words: &[String]) -> f64 {
    let lp = pseudo.chars().count() as f64;
    words
        .iter()
        .filter(|w| head(w, 3) == head(pseudo, 3) || tail(w, 3) == tail(pseudo, 3))
        .filter(|w| (w.chars().count() as f64 - lp).abs() <= 0.1 * lp)
        .map(|w| dp_ratio(pseudo, w))
        .fold(0.0, f64::max)
}

/// One side of a pairing instance: a label and its profile.
#[derive(Debug, Clone)]
pub struct Profiled {
    pub text: String,
    pub values: Option<Vec<f64>>,
}

pub fn mean_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]).abs();
    }
    s / a.len() as f64
}

/// Repeatedly extracts the closest remaining compatible pair, ties broken
/// by word then pseudoword text. Returns `(word, pseudo, distance)`.
pub fn extraction_pairing(words: &[Profiled], pseudos: &[Profiled]) -> Vec<(String, String, f64)> {
    let mut wl: Vec<usize> = (0..words.len()).collect();
    let mut pl: Vec<usize> = (0..pseudos.len()).collect();
    let mut out = Vec::new();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (a, &wi) in wl.iter().enumerate() {
            for (b, &pi) in pl.iter().enumerate() {
                let (Some(wv), Some(pv)) = (&words[wi].values, &pseudos[pi].values) else { continue };
                if wv.len() != pv.len() {
                    continue;
                }
                let d = mean_abs_diff(wv, pv);
                let better = match best {
                    None => true,
                    Some((bd, ba, bb)) => {
                        let (bw, bp) = (&words[wl[ba]].text, &pseudos[pl[bb]].text);
                        d < bd || (d == bd && (&words[wi].text, &pseudos[pi].text) < (bw, bp))
                    }
                };
                if better {
                    best = Some((d, a, b));
                }
            }
        }
        let Some((d, a, b)) = best else { break };
        out.push((words[wl[a]].text.clone(), pseudos[pl[b]].text.clone(), d));
        wl.remove(a);
        pl.remove(b);
    }
    out
}

/// Synthetic 60-item key: ids `r00..` real, `p00..` pseudo, interleaved.
pub fn synthetic_key(language: &str) -> TestSet {
    let items = (0..30)
        .flat_map(|i| {
            [
                TestItem { id: format!("r{i:02}"), text: format!("real{i}"), is_real: true },
                TestItem { id: format!("p{i:02}"), text: format!("fake{i}"), is_real: false },
            ]
        })
        .collect();
    TestSet { language: language.into(), seed: 0, pipeline_version: "test".into(), batch_size: 30, items }
}

/// A simulated participant who answers each trial correctly with
/// probability `p`, in a random presentation order.
pub fn simulate_session<R: Rng>(id: &str, key: &TestSet, p: f64, rng: &mut R) -> ScoreReport {
    let mut order: Vec<usize> = (0..key.items.len()).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);
    let responses: Vec<TrialResponse> = order
        .iter()
        .enumerate()
        .map(|(trial_index, &i)| {
            let item = &key.items[i];
            let correct = rng.random_bool(p.clamp(0.0, 1.0));
            let answer = if item.is_real == correct { Answer::Real } else { Answer::Fake };
            TrialResponse {
                item_id: item.id.clone(),
                answer,
                rt_ms: 800,
                trial_index,
                served_at: 0,
                received_at: 800,
                client_rt_ms: None,
            }
        })
        .collect();
    scoring::score_session(id, &responses, key).unwrap()
}

/// Classical test theory cohort: true accuracy `p ~ U(lo, hi)`, each
/// 30-trial batch a binomial draw around it. Returns the measured
/// split-half r and the theoretical `var_t / (var_t + var_e)`.
pub fn ctt_cohort<R: Rng>(n: usize, lo: f64, hi: f64, rng: &mut R) -> (f64, f64) {
    let key = synthetic_key("en");
    let reports: Vec<ScoreReport> =
        (0..n).map(|i| simulate_session(&format!("s{i}"), &key, rng.random_range(lo..hi), rng)).collect();
    let measured = scoring::split_half_reliability(&reports).unwrap();
    let var_t = (hi - lo).powi(2) / 12.0;
    // E[p(1-p)] for uniform p, divided by the batch length.
    let e_p = (lo + hi) / 2.0;
    let e_p2 = (hi.powi(3) - lo.powi(3)) / (3.0 * (hi - lo));
    let var_e = (e_p - e_p2) / 30.0;
    (measured, var_t / (var_t + var_e))
}

pub const TESTED: [&str; 8] = ["en", "de", "nl", "es", "fr", "it", "zh", "fi"];
pub const NATIVE: [&str; 6] = ["en", "de", "nl", "es", "fr", "it"];

fn family(lang: &str) -> u8 {
    match lang {
        "en" | "de" | "nl" => 0,
        "es" | "fr" | "it" => 1,
        _ => 2,
    }
}

/// Distances with the grid's structure: zero on the diagonal, small
/// within a subfamily, larger across, largest outside Indo-European.
pub fn grid_distances() -> DistanceMatrix {
    let mut d = DistanceMatrix::default();
    for (ti, t) in TESTED.iter().enumerate() {
        for (ni, n) in NATIVE.iter().enumerate() {
            let base = if t == n {
                0.0
            } else if family(t) == 2 {
                0.85
            } else if family(t) == family(n) {
                0.3
            } else {
                0.6
            };
            let jitter = if t == n { 0.0 } else { ((ti * 7 + ni * 3) % 5) as f64 * 0.02 };
            d.insert(t, n, base + jitter).unwrap();
        }
    }
    d
}

/// Cohort over the 8x6 grid whose per-participant accuracy is
/// `0.95 - slope * distance + N(0, sd)`, `per_cell` participants per cell.
/// Returns the measured correlation of cell means with distance and the
/// planted one implied by the generative model.
pub fn planted_grid<R: Rng>(slope: f64, sd: f64, per_cell: usize, rng: &mut R) -> (f64, f64) {
    let d = grid_distances();
    let key = synthetic_key("xx");
    let noise = Normal::new(0.0, sd).unwrap();
    let mut reports = Vec::new();
    let mut dist = Vec::new();
    for t in TESTED {
        for n in NATIVE {
            let dd = d.get(t, n).unwrap();
            dist.push(dd);
            for k in 0..per_cell {
                let acc = 0.95 - slope * dd + noise.sample(rng);
                reports.push(ScoreReport {
                    session_id: format!("{t}-{n}-{k}"),
                    tested_language: t.into(),
                    native_language: Some(n.into()),
                    accuracy: acc,
                    batch_accuracies: vec![acc, acc],
                    hit_rate: acc,
                    correct_rejection_rate: acc,
                    n_trials: key.items.len(),
                    n_missed: 0,
                });
            }
        }
    }
    let means = scoring::cell_means(&reports);
    let measured = scoring::distance_correlation(&means, &d, false).unwrap();
    let m = dist.iter().sum::<f64>() / dist.len() as f64;
    let var_d = dist.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (dist.len() - 1) as f64;
    let var_noise = sd * sd / per_cell as f64;
    let planted = -slope * var_d.sqrt() / (slope * slope * var_d + var_noise).sqrt();
    (measured, planted)
}

/// Mean of `reps` replicate grids.
pub fn planted_grid_mean<R: Rng>(slope: f64, sd: f64, per_cell: usize, reps: usize, rng: &mut R) -> (f64, f64) {
    let mut acc = BTreeMap::new();
    let mut planted = 0.0;
    for i in 0..reps {
        let (m, p) = planted_grid(slope, sd, per_cell, rng);
        acc.insert(i, m);
        planted = p;
    }
    (acc.values().sum::<f64>() / reps as f64, planted)
}
