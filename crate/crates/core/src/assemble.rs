//! Real-word selection, word/pseudoword pairing and test export.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::candidates::PseudowordCandidate;
use crate::corpus::Lexicon;
use crate::ngram::{logprob_profile, LogProbProfile, NGramModel, TranslitTable};
use crate::text;

pub const DEFAULT_KEEP: usize = 500;
pub const DEFAULT_ITEMS: usize = 60;
pub const DEFAULT_BATCH_SIZE: usize = 30;

#[derive(Debug, Error)]
pub enum AssembleError {
    #[error("need at least 2 resolved reference items across all languages, found {0}")]
    InsufficientReference(usize),
    #[error("standard deviation must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("requested {requested} words but the lexicon has {available}")]
    LexiconExhausted { requested: usize, available: usize },
    #[error("cannot keep {keep} of {available} pairs")]
    KeepTooLarge { keep: usize, available: usize },
    #[error("item count must be even and positive, got {0}")]
    InvalidItemCount(usize),
    #[error("need {needed} pairs for the test, have {available}")]
    InsufficientPairs { needed: usize, available: usize },
    #[error("duplicate item text {0:?}")]
    DuplicateText(String),
    #[error("duplicate item id {0:?}")]
    DuplicateId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Normal distribution over log10 token counts that real words are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTarget {
    pub mu: f64,
    pub sigma: f64,
}

impl FrequencyTarget {
    pub fn new(mu: f64, sigma: f64) -> Result<Self, AssembleError> {
        if !(sigma > 0.0 && sigma.is_finite()) || !mu.is_finite() {
            return Err(AssembleError::InvalidSigma(sigma));
        }
        Ok(FrequencyTarget { mu, sigma })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetFit {
    pub targets: BTreeMap<String, FrequencyTarget>,
    /// Reference items not found in their language's lexicon.
    pub missing: BTreeMap<String, Vec<String>>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Fits per-language means of reference-item log10 counts, with one
/// sample standard deviation pooled over every resolved item.
pub fn fit_target(
    reference: &BTreeMap<String, Vec<String>>,
    lexicons: &BTreeMap<String, &Lexicon>,
) -> Result<TargetFit, AssembleError> {
    let mut per_language: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut missing: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (lang, items) in reference {
        let lex = lexicons.get(lang);
        for item in items {
            let key = text::normalize(item.trim());
            match lex.and_then(|l| l.get(&key)) {
                Some(entry) => per_language.entry(lang.clone()).or_default().push(entry.log10_frequency()),
                None => missing.entry(lang.clone()).or_default().push(item.clone()),
            }
        }
    }
    let pooled: Vec<f64> = per_language.values().flatten().copied().collect();
    if pooled.len() < 2 {
        return Err(AssembleError::InsufficientReference(pooled.len()));
    }
    let m = mean(&pooled);
    let var = pooled.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (pooled.len() - 1) as f64;
    let sigma = var.sqrt();
    let targets = per_language
        .iter()
        .map(|(lang, xs)| Ok((lang.clone(), FrequencyTarget::new(mean(xs), sigma)?)))
        .collect::<Result<_, AssembleError>>()?;
    Ok(TargetFit { targets, missing })
}

/// Draws `count` distinct lemmas: each draw takes the unused lemma whose
/// log10 count is nearest a Normal(mu, sigma) sample, ties broken
/// lexicographically.
pub fn select_real_words<R: Rng + ?Sized>(
    lex: &Lexicon,
    target: FrequencyTarget,
    count: usize,
    rng: &mut R,
) -> Result<Vec<String>, AssembleError> {
    if count > lex.len() {
        return Err(AssembleError::LexiconExhausted { requested: count, available: lex.len() });
    }
    // Groups of equal frequency, ascending; lemmas within a group sorted.
    let mut by_count: BTreeMap<u64, VecDeque<String>> = BTreeMap::new();
    for entry in lex.entries() {
        by_count.entry(entry.token_count).or_default().push_back(entry.lemma.clone());
    }
    let mut groups: Vec<(f64, VecDeque<String>)> =
        by_count.into_iter().map(|(c, words)| ((c as f64).log10(), words)).collect();
    let normal = Normal::new(target.mu, target.sigma).map_err(|_| AssembleError::InvalidSigma(target.sigma))?;
    let mut chosen = Vec::with_capacity(count);
    for _ in 0..count {
        let t = normal.sample(rng);
        let split = groups.partition_point(|(lf, _)| *lf < t);
        let left = groups[..split].iter().rposition(|(_, w)| !w.is_empty());
        let right = groups[split..].iter().position(|(_, w)| !w.is_empty()).map(|i| i + split);
        let pick = match (left, right) {
            (Some(l), Some(r)) => {
                let (dl, dr) = (t - groups[l].0, groups[r].0 - t);
                if dl < dr || (dl == dr && groups[l].1[0] < groups[r].1[0]) {
                    l
                } else {
                    r
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => unreachable!("count <= lexicon size"),
        };
        chosen.push(groups[pick].1.pop_front().expect("non-empty group"));
    }
    Ok(chosen)
}

/// Mean absolute positionwise difference of two equal-length profiles.
pub fn profile_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub real_word: String,
    pub real_profile: LogProbProfile,
    pub pseudo: PseudowordCandidate,
    pub distance: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_words: Vec<String>,
    pub unmatched_pseudos: Vec<String>,
}

/// Greedy matching: repeatedly take the globally closest remaining
/// (word, pseudoword) pair among those with equal profile length.
///
/// Ties are broken by real word, then pseudoword text. Words whose
/// profile cannot be computed, and pseudowords without a profile, end up
/// unmatched.
pub fn pair(
    words: &[String],
    pseudos: &[PseudowordCandidate],
    model: &NGramModel,
    table: Option<&TranslitTable>,
) -> Pairing {
    let word_profiles: Vec<Option<LogProbProfile>> =
        words.iter().map(|w| logprob_profile(model, w, table).ok()).collect();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for (wi, wp) in word_profiles.iter().enumerate() {
        let Some(wp) = wp else { continue };
        for (pi, p) in pseudos.iter().enumerate() {
            if let Some(pp) = &p.profile {
                if pp.len() == wp.len() {
                    edges.push((profile_distance(&wp.values, &pp.values), wi, pi));
                }
            }
        }
    }
    edges.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| words[a.1].cmp(&words[b.1]))
            .then_with(|| pseudos[a.2].text.cmp(&pseudos[b.2].text))
            .then_with(|| (a.1, a.2).cmp(&(b.1, b.2)))
    });
    let mut word_used = vec![false; words.len()];
    let mut pseudo_used = vec![false; pseudos.len()];
    let mut out = Pairing::default();
    for (distance, wi, pi) in edges {
        if word_used[wi] || pseudo_used[pi] {
            continue;
        }
        word_used[wi] = true;
        pseudo_used[pi] = true;
        out.pairs.push(MatchedPair {
            real_word: words[wi].clone(),
            real_profile: word_profiles[wi].clone().expect("edge implies profile"),
            pseudo: pseudos[pi].clone(),
            distance,
        });
    }
    out.unmatched_words = words.iter().zip(&word_used).filter(|(_, u)| !**u).map(|(w, _)| w.clone()).collect();
    out.unmatched_pseudos =
        pseudos.iter().zip(&pseudo_used).filter(|(_, u)| !**u).map(|(p, _)| p.text.clone()).collect();
    out
}

/// Keeps the `keep` pairs whose pseudowords look least like real words
/// (lowest fuzzy ratio, then smallest distance, then text).
pub fn select_pairs(mut pairs: Vec<MatchedPair>, keep: usize) -> Result<Vec<MatchedPair>, AssembleError> {
    if keep > pairs.len() {
        return Err(AssembleError::KeepTooLarge { keep, available: pairs.len() });
    }
    pairs.sort_by(|a, b| {
        a.pseudo
            .max_fuzzy_ratio
            .total_cmp(&b.pseudo.max_fuzzy_ratio)
            .then_with(|| a.distance.total_cmp(&b.distance))
            .then_with(|| a.pseudo.text.cmp(&b.pseudo.text))
            .then_with(|| a.real_word.cmp(&b.real_word))
    });
    pairs.truncate(keep);
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestItem {
    pub id: String,
    pub text: String,
    pub is_real: bool,
}

fn default_batch_size() -> usize {
    DEFAULT_BATCH_SIZE
}

/// The exported test: canonical item order, labels included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSet {
    pub language: String,
    pub seed: u64,
    pub pipeline_version: String,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    pub items: Vec<TestItem>,
}

/// Opaque item id: reveals nothing about the label or position.
pub fn item_id(language: &str, seed: u64, text: &str) -> String {
    let digest = Sha256::digest(format!("{language}\u{0}{seed}\u{0}{text}").as_bytes());
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

impl TestSet {
    pub fn real_count(&self) -> usize {
        self.items.iter().filter(|i| i.is_real).count()
    }

    pub fn pseudo_count(&self) -> usize {
        self.items.len() - self.real_count()
    }

    pub fn item(&self, id: &str) -> Option<&TestItem> {
        self.items.iter().find(|i| i.id == id)
    }

    /// Checks unique ids and texts and a positive batch size.
    pub fn check(&self) -> Result<(), AssembleError> {
        if self.batch_size == 0 || self.items.is_empty() {
            return Err(AssembleError::InvalidItemCount(self.items.len()));
        }
        let mut ids = HashSet::new();
        let mut texts = HashSet::new();
        for item in &self.items {
            if !texts.insert(item.text.as_str()) {
                return Err(AssembleError::DuplicateText(item.text.clone()));
            }
            if !ids.insert(item.id.as_str()) {
                return Err(AssembleError::DuplicateId(item.id.clone()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("test set serializes")
    }

    pub fn load(path: &Path) -> Result<Self, AssembleError> {
        let test: TestSet = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
        test.check()?;
        Ok(test)
    }
}

/// Takes the first `items / 2` pairs and emits each pair's real word and
/// pseudoword, in that order.
pub fn build_test(pairs: &[MatchedPair], items: usize, language: &str, seed: u64) -> Result<TestSet, AssembleError> {
    if items == 0 || items % 2 != 0 {
        return Err(AssembleError::InvalidItemCount(items));
    }
    let needed = items / 2;
    if pairs.len() < needed {
        return Err(AssembleError::InsufficientPairs { needed, available: pairs.len() });
    }
    let items = pairs[..needed]
        .iter()
        .flat_map(|p| [(p.real_word.as_str(), true), (p.pseudo.text.as_str(), false)])
        .map(|(text, is_real)| TestItem { id: item_id(language, seed, text), text: text.to_string(), is_real })
        .collect();
    let test = TestSet {
        language: language.to_string(),
        seed,
        pipeline_version: crate::PIPELINE_VERSION.to_string(),
        batch_size: DEFAULT_BATCH_SIZE.min(needed * 2),
        items,
    };
    test.check()?;
    Ok(test)
}
