//! Compound detection from character n-gram position statistics.
//!
//! Every n-gram (length 2 to `max_ngram`) of every lexicon lemma is tallied
//! as word-initial, word-final or interior. A split `left | right` scores
//! the mean of two affinities: how much more often the tail of `left` ends
//! a word than sits inside one, and how much more often the head of
//! `right` begins a word than sits inside one. Each affinity is
//! `(positional - interior) / (positional + interior)` over the longest
//! n-gram at the boundary that was seen at all, so scores lie in `[-1, 1]`.
//! A word is a compound when its best split scores above zero and the
//! right segment is itself a lexicon word.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusError, Lexicon};

pub const DEFAULT_MAX_NGRAM: usize = 4;
pub const DEFAULT_MIN_SEGMENT_LEN: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitterModel {
    pub max_ngram: usize,
    pub min_segment_len: usize,
    pub begin_counts: BTreeMap<String, u64>,
    pub end_counts: BTreeMap<String, u64>,
    pub interior_counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDecision {
    pub score: f64,
    pub left: String,
    pub right: String,
    pub is_compound: bool,
}

impl SplitDecision {
    fn unsplittable() -> Self {
        SplitDecision { score: -1.0, left: String::new(), right: String::new(), is_compound: false }
    }
}

fn affinity(positional: u64, interior: u64) -> f64 {
    if positional + interior == 0 {
        0.0
    } else {
        (positional as f64 - interior as f64) / (positional + interior) as f64
    }
}

fn count(map: &BTreeMap<String, u64>, key: &str) -> u64 {
    map.get(key).copied().unwrap_or(0)
}

/// Tallies begin/end/interior n-gram counts over all lemmas.
pub fn train_splitter(lex: &Lexicon, max_ngram: usize, min_segment_len: usize) -> SplitterModel {
    let mut model = SplitterModel {
        max_ngram,
        min_segment_len,
        begin_counts: BTreeMap::new(),
        end_counts: BTreeMap::new(),
        interior_counts: BTreeMap::new(),
    };
    for lemma in lex.lemmas() {
        let chars: Vec<char> = lemma.chars().collect();
        let len = chars.len();
        for n in 2..=max_ngram.min(len) {
            for start in 0..=len - n {
                let gram: String = chars[start..start + n].iter().collect();
                let at_begin = start == 0;
                let at_end = start + n == len;
                if at_begin {
                    *model.begin_counts.entry(gram.clone()).or_default() += 1;
                }
                if at_end {
                    *model.end_counts.entry(gram.clone()).or_default() += 1;
                }
                if !at_begin && !at_end {
                    *model.interior_counts.entry(gram).or_default() += 1;
                }
            }
        }
    }
    model
}

impl SplitterModel {
    pub fn train(lex: &Lexicon) -> Self {
        train_splitter(lex, DEFAULT_MAX_NGRAM, DEFAULT_MIN_SEGMENT_LEN)
    }

    pub fn begin_count(&self, gram: &str) -> u64 {
        count(&self.begin_counts, gram)
    }

    pub fn end_count(&self, gram: &str) -> u64 {
        count(&self.end_counts, gram)
    }

    pub fn interior_count(&self, gram: &str) -> u64 {
        count(&self.interior_counts, gram)
    }

    /// How strongly the end of `left` looks like a word ending.
    pub fn end_affinity(&self, left: &[char]) -> f64 {
        for n in (2..=self.max_ngram.min(left.len())).rev() {
            let gram: String = left[left.len() - n..].iter().collect();
            let (end, interior) = (self.end_count(&gram), self.interior_count(&gram));
            if end + interior > 0 {
                return affinity(end, interior);
            }
        }
        0.0
    }

    /// How strongly the start of `right` looks like a word beginning.
    pub fn begin_affinity(&self, right: &[char]) -> f64 {
        for n in (2..=self.max_ngram.min(right.len())).rev() {
            let gram: String = right[..n].iter().collect();
            let (begin, interior) = (self.begin_count(&gram), self.interior_count(&gram));
            if begin + interior > 0 {
                return affinity(begin, interior);
            }
        }
        0.0
    }

    /// Score of every admissible split position (in characters).
    pub fn split_scores(&self, word: &str) -> Vec<(usize, f64)> {
        let chars: Vec<char> = word.chars().collect();
        let min = self.min_segment_len.max(1);
        if chars.len() < 2 * min {
            return Vec::new();
        }
        (min..=chars.len() - min)
            .map(|pos| {
                let (left, right) = chars.split_at(pos);
                (pos, (self.end_affinity(left) + self.begin_affinity(right)) / 2.0)
            })
            .collect()
    }

    /// Highest-scoring split, leftmost on ties. `is_compound` is left false.
    pub fn best_split(&self, word: &str) -> SplitDecision {
        let mut best: Option<(usize, f64)> = None;
        for (pos, score) in self.split_scores(word) {
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((pos, score));
            }
        }
        let Some((pos, score)) = best else {
            return SplitDecision::unsplittable();
        };
        let idx = word.char_indices().nth(pos).map(|(i, _)| i).unwrap_or(word.len());
        SplitDecision { score, left: word[..idx].to_string(), right: word[idx..].to_string(), is_compound: false }
    }

    /// Best split with the compound decision applied against `lex`.
    pub fn classify(&self, lex: &Lexicon, word: &str) -> SplitDecision {
        let mut decision = self.best_split(word);
        decision.is_compound = decision.score > 0.0 && lex.contains(&decision.right);
        decision
    }

    pub fn is_compound(&self, lex: &Lexicon, word: &str) -> bool {
        self.classify(lex, word).is_compound
    }
}

/// Compound detection, or none for languages where it does not apply
/// (e.g. Chinese, where most multi-character words would be flagged).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompoundGate {
    Disabled,
    Enabled(SplitterModel),
}

impl CompoundGate {
    pub fn is_compound(&self, lex: &Lexicon, word: &str) -> bool {
        match self {
            CompoundGate::Disabled => false,
            CompoundGate::Enabled(model) => model.is_compound(lex, word),
        }
    }
}

/// Result of one decompounding pass.
#[derive(Debug, Clone)]
pub struct Decompounded {
    pub lexicon: Lexicon,
    pub removed: Vec<SplitDecision>,
}

/// Removes every detected compound in a single pass (train once, remove
/// once). Right segments are checked against the input lexicon.
pub fn remove_compounds(lex: &Lexicon, gate: &CompoundGate) -> Result<Decompounded, CorpusError> {
    let CompoundGate::Enabled(model) = gate else {
        return Ok(Decompounded { lexicon: lex.clone(), removed: Vec::new() });
    };
    let removed: Vec<SplitDecision> = lex.lemmas().map(|w| model.classify(lex, w)).filter(|d| d.is_compound).collect();
    let words: std::collections::HashSet<String> = removed.iter().map(|d| format!("{}{}", d.left, d.right)).collect();
    let lexicon = lex.retain(|e| !words.contains(&e.lemma))?;
    Ok(Decompounded { lexicon, removed })
}
