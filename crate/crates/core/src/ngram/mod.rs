//! Padded letter n-gram model and pseudoword sampling.
//!
//! Each lemma (spelled out through a [`TranslitTable`] when the script
//! needs one) is padded with `n - 1` pad symbols on both sides and every
//! window of `n` symbols is counted as a transition from its first `n - 1`
//! symbols to its last. Sampling starts from the all-pad context and draws
//! letters in proportion to the raw counts until a pad is drawn, so a
//! sample never leaves the attested transitions.

mod translit;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use translit::{to_letters, TranslitError, TranslitTable};

use crate::candidates::{PseudowordCandidate, Rejection};
use crate::corpus::Lexicon;
use crate::PAD;

pub const DEFAULT_ORDER: usize = 5;

/// Samples longer than this many times the longest training word are
/// abandoned.
pub const RUNAWAY_FACTOR: usize = 4;

pub const DEFAULT_MAX_ATTEMPTS: u64 = 1_000 * 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum NGramError {
    #[error("n-gram order must be at least 2, got {0}")]
    OrderTooSmall(usize),
    #[error("cannot train on an empty word list")]
    Empty,
    #[error("{word:?} contains the pad symbol")]
    PadInWord { word: String },
    #[error(transparent)]
    Translit(#[from] TranslitError),
    #[error("{word:?} is not representable: transition {context:?} -> {next:?} never observed")]
    Unrepresentable { word: String, context: String, next: char },
    #[error(
        "gave up after {attempts} attempts with {accepted} of {target} candidates \
         (acceptance rate {rate:.6})"
    )]
    Exhausted { attempts: u64, accepted: usize, target: usize, rate: f64 },
}

/// Natural-log transition probabilities along a padded word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogProbProfile {
    pub word: String,
    pub values: Vec<f64>,
}

impl LogProbProfile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NGramModel {
    order: usize,
    pad: char,
    /// Letter length of the longest training word.
    max_word_letters: usize,
    transitions: BTreeMap<String, BTreeMap<char, u64>>,
}

/// A raw sample: its letter form and (after back-conversion) script form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub text: String,
    pub letters: String,
}

fn padded(letters: &str, order: usize) -> Vec<char> {
    let pads = std::iter::repeat_n(PAD, order - 1);
    pads.clone().chain(letters.chars()).chain(pads).collect()
}

impl NGramModel {
    /// Counts transitions over letter strings that are already spelled out.
    pub fn from_letter_words<S: AsRef<str>>(
        words: impl IntoIterator<Item = S>,
        order: usize,
    ) -> Result<Self, NGramError> {
        if order < 2 {
            return Err(NGramError::OrderTooSmall(order));
        }
        let mut transitions: BTreeMap<String, BTreeMap<char, u64>> = BTreeMap::new();
        let mut max_word_letters = 0;
        for word in words {
            let word = word.as_ref();
            if word.contains(PAD) {
                return Err(NGramError::PadInWord { word: word.to_string() });
            }
            max_word_letters = max_word_letters.max(word.chars().count());
            let symbols = padded(word, order);
            for window in symbols.windows(order) {
                let context: String = window[..order - 1].iter().collect();
                *transitions.entry(context).or_default().entry(window[order - 1]).or_default() += 1;
            }
        }
        if transitions.is_empty() {
            return Err(NGramError::Empty);
        }
        Ok(NGramModel { order, pad: PAD, max_word_letters, transitions })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn max_word_letters(&self) -> usize {
        self.max_word_letters
    }

    pub fn contexts(&self) -> impl Iterator<Item = (&str, &BTreeMap<char, u64>)> {
        self.transitions.iter().map(|(c, next)| (c.as_str(), next))
    }

    /// Every symbol seen in the model, the pad included.
    pub fn alphabet(&self) -> BTreeSet<char> {
        self.transitions.iter().flat_map(|(ctx, next)| ctx.chars().chain(next.keys().copied())).collect()
    }

    /// Maximum-likelihood `P(next | context)`; zero when unseen.
    pub fn probability(&self, context: &str, next: char) -> f64 {
        let Some(dist) = self.transitions.get(context) else {
            return 0.0;
        };
        let total: u64 = dist.values().sum();
        dist.get(&next).map_or(0.0, |&c| c as f64 / total as f64)
    }

    /// Log-probability profile of an already spelled-out letter string.
    pub fn letter_profile(&self, letters: &str) -> Result<Vec<f64>, NGramError> {
        let symbols = padded(letters, self.order);
        symbols
            .windows(self.order)
            .map(|window| {
                let context: String = window[..self.order - 1].iter().collect();
                let next = window[self.order - 1];
                let p = self.probability(&context, next);
                if p > 0.0 {
                    Ok(p.ln())
                } else {
                    Err(NGramError::Unrepresentable { word: letters.to_string(), context, next })
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

/// Builds the order-`n` model over all lexicon lemmas.
pub fn build_model(lex: &Lexicon, n: usize, table: Option<&TranslitTable>) -> Result<NGramModel, NGramError> {
    let letters: Vec<String> = lex.lemmas().map(|w| to_letters(w, table)).collect::<Result<_, _>>()?;
    NGramModel::from_letter_words(&letters, n)
}

/// `ln P` of each transition along the padded letter form of `word`.
pub fn logprob_profile(
    model: &NGramModel,
    word: &str,
    table: Option<&TranslitTable>,
) -> Result<LogProbProfile, NGramError> {
    let letters = to_letters(word, table)?;
    let values = model.letter_profile(&letters).map_err(|e| match e {
        NGramError::Unrepresentable { context, next, .. } => {
            NGramError::Unrepresentable { word: word.to_string(), context, next }
        }
        other => other,
    })?;
    Ok(LogProbProfile { word: word.to_string(), values })
}

fn draw<R: Rng + ?Sized>(dist: &BTreeMap<char, u64>, rng: &mut R) -> char {
    let total: u64 = dist.values().sum();
    let mut ticket = rng.random_range(0..total);
    for (&symbol, &count) in dist {
        if ticket < count {
            return symbol;
        }
        ticket -= count;
    }
    unreachable!("ticket below total")
}

/// Walks the chain from the all-pad context until a pad is drawn.
///
/// Fails with [`Rejection::Length`] when the walk runs past
/// [`RUNAWAY_FACTOR`] times the longest training word, and with
/// [`Rejection::TranslitLeftover`] when back-conversion leaves letters.
pub fn sample_pseudoword<R: Rng + ?Sized>(
    model: &NGramModel,
    rng: &mut R,
    table: Option<&TranslitTable>,
) -> Result<Sample, Rejection> {
    let limit = RUNAWAY_FACTOR * model.max_word_letters.max(1);
    let mut context: Vec<char> = vec![PAD; model.order - 1];
    let mut letters = String::new();
    let mut len = 0;
    loop {
        let key: String = context.iter().collect();
        let dist = model.transitions.get(&key).expect("every reachable context was counted");
        let next = draw(dist, rng);
        if next == PAD {
            break;
        }
        len += 1;
        if len > limit {
            return Err(Rejection::Length);
        }
        letters.push(next);
        context.remove(0);
        context.push(next);
    }
    let text = match table {
        Some(t) => t.from_letters(&letters).map_err(|_| Rejection::TranslitLeftover)?,
        None => letters.clone(),
    };
    Ok(Sample { text, letters })
}

/// Outcome of a generation run.
#[derive(Debug, Clone, Serialize)]
pub struct Generation {
    pub candidates: Vec<PseudowordCandidate>,
    pub attempts: u64,
    pub duplicates: u64,
    pub rejections: BTreeMap<Rejection, u64>,
}

impl Generation {
    pub fn acceptance_rate(&self) -> f64 {
        self.candidates.len() as f64 / self.attempts.max(1) as f64
    }
}

/// Samples until `target` distinct strings pass `validate`.
///
/// Candidates are returned in acceptance order; with a seeded `rng` the
/// whole run is reproducible.
pub fn generate_candidates<R, V>(
    model: &NGramModel,
    table: Option<&TranslitTable>,
    mut validate: V,
    target: usize,
    max_attempts: u64,
    rng: &mut R,
) -> Result<Generation, NGramError>
where
    R: Rng + ?Sized,
    V: FnMut(&str) -> Result<PseudowordCandidate, Rejection>,
{
    let mut out = Generation { candidates: Vec::new(), attempts: 0, duplicates: 0, rejections: BTreeMap::new() };
    let mut seen: HashSet<String> = HashSet::new();
    while out.candidates.len() < target {
        if out.attempts >= max_attempts {
            return Err(NGramError::Exhausted {
                attempts: out.attempts,
                accepted: out.candidates.len(),
                target,
                rate: out.acceptance_rate(),
            });
        }
        out.attempts += 1;
        let verdict = sample_pseudoword(model, rng, table).and_then(|sample| {
            if seen.contains(&sample.text) {
                return Ok(None);
            }
            seen.insert(sample.text.clone());
            validate(&sample.text).map(Some)
        });
        match verdict {
            Ok(Some(candidate)) => out.candidates.push(candidate),
            Ok(None) => out.duplicates += 1,
            Err(reason) => *out.rejections.entry(reason).or_default() += 1,
        }
    }
    Ok(out)
}
