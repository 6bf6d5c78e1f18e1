//! Pseudoword validation and fuzzy similarity to real words.
//!
//! Similarity is the indel ratio `100 * 2 * LCS(a, b) / (|a| + |b|)`,
//! computed with a bit-parallel LCS. The best match of a pseudoword is
//! searched only among lexicon words that share its first or last three
//! letters and are within 10% of its length.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::compound::CompoundGate;
use crate::corpus::{Lexicon, WordList};
use crate::ngram::{to_letters, LogProbProfile, NGramModel, TranslitTable};
use crate::text;

/// Why a sampled or supplied string is not an admissible pseudoword.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rejection {
    RealWord,
    Length,
    Compound,
    TranslitLeftover,
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Rejection::RealWord => "REAL_WORD",
            Rejection::Length => "LENGTH",
            Rejection::Compound => "COMPOUND",
            Rejection::TranslitLeftover => "TRANSLIT_LEFTOVER",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudowordCandidate {
    pub text: String,
    pub letters: String,
    /// `None` when the string uses a transition the model never saw
    /// (possible for externally supplied strings, never for samples).
    pub profile: Option<LogProbProfile>,
    pub max_fuzzy_ratio: f64,
    pub closest_word: Option<String>,
}

/// Length of the longest common subsequence, bit-parallel over `a`.
pub fn lcs_len(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    if a.is_empty() {
        return 0;
    }
    let words = a.len().div_ceil(64);
    let mut peq: HashMap<char, Vec<u64>> = HashMap::new();
    for (i, &c) in a.iter().enumerate() {
        peq.entry(c).or_insert_with(|| vec![0; words])[i / 64] |= 1 << (i % 64);
    }
    let zero = vec![0u64; words];
    let mut v = vec![u64::MAX; words];
    for c in b.chars() {
        let m = peq.get(&c).unwrap_or(&zero);
        let mut carry = 0u64;
        for k in 0..words {
            let u = v[k] & m[k];
            let (sum, c1) = v[k].overflowing_add(u);
            let (sum, c2) = sum.overflowing_add(carry);
            carry = (c1 || c2) as u64;
            v[k] = sum | (v[k] & !m[k]);
        }
    }
    let mut zeros = 0;
    for (k, word) in v.iter().enumerate() {
        let bits = (a.len() - k * 64).min(64);
        let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        zeros += (!word & mask).count_ones() as usize;
    }
    zeros
}

/// Rounds to one decimal place.
pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// Indel similarity in `[0, 100]`, rounded to one decimal.
pub fn fuzzy_ratio(a: &str, b: &str) -> f64 {
    let total = a.chars().count() + b.chars().count();
    if total == 0 {
        return 100.0;
    }
    round1(100.0 * 2.0 * lcs_len(a, b) as f64 / total as f64)
}

/// Whether `word` is in the fuzzy search neighbourhood of `pseudo`.
pub fn fuzzy_restriction(word: &str, pseudo: &str) -> bool {
    let shares_affix =
        text::prefix(word, 3) == text::prefix(pseudo, 3) || text::suffix(word, 3) == text::suffix(pseudo, 3);
    let (lw, lp) = (word.chars().count(), pseudo.chars().count());
    shares_affix && (lw.abs_diff(lp) as f64) <= 0.1 * lp as f64
}

/// Prefix/suffix index over lexicon lemmas for restricted fuzzy search.
#[derive(Debug, Clone)]
pub struct FuzzyIndex {
    words: Vec<String>,
    by_prefix: HashMap<String, Vec<usize>>,
    by_suffix: HashMap<String, Vec<usize>>,
}

impl FuzzyIndex {
    pub fn new(lex: &Lexicon) -> Self {
        Self::from_words(lex.lemmas())
    }

    pub fn from_words<S: AsRef<str>>(words: impl IntoIterator<Item = S>) -> Self {
        let words: Vec<String> = words.into_iter().map(|w| w.as_ref().to_string()).collect();
        let mut by_prefix: HashMap<String, Vec<usize>> = HashMap::new();
        let mut by_suffix: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, w) in words.iter().enumerate() {
            by_prefix.entry(text::prefix(w, 3).to_string()).or_default().push(i);
            by_suffix.entry(text::suffix(w, 3).to_string()).or_default().push(i);
        }
        FuzzyIndex { words, by_prefix, by_suffix }
    }

    /// Best ratio to any word in the restricted neighbourhood, with that
    /// word (first in index order on ties). `(0.0, None)` when empty.
    pub fn best_match(&self, pseudo: &str) -> (f64, Option<&str>) {
        let prefixed = self.by_prefix.get(text::prefix(pseudo, 3)).into_iter().flatten();
        let suffixed = self.by_suffix.get(text::suffix(pseudo, 3)).into_iter().flatten();
        let mut ids: Vec<usize> = prefixed.chain(suffixed).copied().collect();
        ids.sort_unstable();
        ids.dedup();
        let mut best = (0.0, None);
        for id in ids {
            let word = &self.words[id];
            if !fuzzy_restriction(word, pseudo) {
                continue;
            }
            let ratio = fuzzy_ratio(pseudo, word);
            if best.1.is_none() || ratio > best.0 {
                best = (ratio, Some(word.as_str()));
            }
        }
        best
    }

    pub fn max_fuzzy(&self, pseudo: &str) -> f64 {
        self.best_match(pseudo).0
    }
}

/// Maximum restricted fuzzy ratio of `pseudo` against `lex`.
pub fn max_fuzzy(pseudo: &str, lex: &Lexicon) -> f64 {
    FuzzyIndex::new(lex).max_fuzzy(pseudo)
}

/// Accepted candidates, rejected strings with their reason, and a count
/// per reason.
pub type BatchValidation = (Vec<PseudowordCandidate>, Vec<(String, Rejection)>, BTreeMap<Rejection, u64>);

/// Everything needed to accept or reject a pseudoword for one language.
pub struct Validator<'a> {
    lexicon: &'a Lexicon,
    gate: &'a CompoundGate,
    model: &'a NGramModel,
    table: Option<&'a TranslitTable>,
    fuzzy: FuzzyIndex,
    known: Vec<&'a Lexicon>,
    word_lists: Vec<&'a WordList>,
}

impl<'a> Validator<'a> {
    /// `lexicon` is the generation lexicon: it sets the length bounds and
    /// is the reference for the real-word and fuzzy checks.
    pub fn new(
        lexicon: &'a Lexicon,
        gate: &'a CompoundGate,
        model: &'a NGramModel,
        table: Option<&'a TranslitTable>,
    ) -> Self {
        Validator {
            lexicon,
            gate,
            model,
            table,
            fuzzy: FuzzyIndex::new(lexicon),
            known: Vec::new(),
            word_lists: Vec::new(),
        }
    }

    /// Also treat words of `other` as real, and search them for fuzzy
    /// matches (e.g. the lexicon before jargon and compound removal).
    pub fn with_known_lexicon(mut self, other: &'a Lexicon) -> Self {
        self.known.push(other);
        let words = self.lexicon.lemmas().chain(self.known.iter().flat_map(|l| l.lemmas()));
        let mut words: Vec<&str> = words.collect();
        words.sort_unstable();
        words.dedup();
        self.fuzzy = FuzzyIndex::from_words(words);
        self
    }

    /// Also treat dictionary words as real.
    pub fn with_word_list(mut self, list: &'a WordList) -> Self {
        self.word_lists.push(list);
        self
    }

    fn is_real(&self, word: &str) -> bool {
        self.lexicon.contains(word)
            || self.known.iter().any(|l| l.contains(word))
            || self.word_lists.iter().any(|l| l.contains(word))
    }

    pub fn validate(&self, candidate: &str) -> Result<PseudowordCandidate, Rejection> {
        let word = text::normalize(candidate);
        if self.is_real(&word) {
            return Err(Rejection::RealWord);
        }
        let len = text::letter_len(&word);
        if len < self.lexicon.min_len() || len > self.lexicon.max_len() {
            return Err(Rejection::Length);
        }
        let letters = to_letters(&word, self.table).map_err(|_| Rejection::TranslitLeftover)?;
        if let Some(table) = self.table {
            if table.from_letters(&letters).is_err() {
                return Err(Rejection::TranslitLeftover);
            }
        }
        if self.gate.is_compound(self.lexicon, &word) {
            return Err(Rejection::Compound);
        }
        let profile =
            self.model.letter_profile(&letters).ok().map(|values| LogProbProfile { word: word.clone(), values });
        let (max_fuzzy_ratio, closest) = self.fuzzy.best_match(&word);
        Ok(PseudowordCandidate {
            closest_word: closest.map(str::to_string),
            text: word,
            letters,
            profile,
            max_fuzzy_ratio,
        })
    }

    /// Validates a batch, returning accepted candidates and a histogram of
    /// rejection reasons.
    pub fn validate_all<S: AsRef<str>>(&self, candidates: impl IntoIterator<Item = S>) -> BatchValidation {
        let mut accepted = Vec::new();
        let mut rejected = Vec::new();
        let mut histogram = BTreeMap::new();
        for c in candidates {
            match self.validate(c.as_ref()) {
                Ok(cand) => accepted.push(cand),
                Err(reason) => {
                    *histogram.entry(reason).or_default() += 1;
                    rejected.push((c.as_ref().to_string(), reason));
                }
            }
        }
        (accepted, rejected, histogram)
    }
}
