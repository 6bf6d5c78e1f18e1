//! Corpus-driven generation of lexical-decision vocabulary tests.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! 1. [`corpus`] reads annotated tokens (CoNLL-U or TSV), keeps lowercase
//!    noun lemmas that pass the acceptance filters and builds a frequency
//!    [`Lexicon`], dropping jargon by document concentration.
//! 2. [`compound`] trains a character n-gram position splitter on the
//!    lexicon and removes words that look like two-part compounds.
//! 3. [`ngram`] builds a padded letter n-gram model (optionally through a
//!    [`TranslitTable`] for character scripts) and samples pseudowords.
//! 4. [`candidates`] validates samples: not real, right length, not
//!    compound-like, and records the best fuzzy match to a real word.
//! 5. [`assemble`] picks frequency-targeted real words, pairs them with
//!    pseudowords by log-probability profile and writes a [`TestSet`].
//! 6. [`scoring`] scores sessions and computes reliability and
//!    cross-language statistics.
//!
//! [`pipeline`] strings the stages together for a deterministic,
//! seed-controlled end-to-end run.

pub mod assemble;
pub mod candidates;
pub mod compound;
pub mod corpus;
pub mod ngram;
pub mod pipeline;
pub mod scoring;
pub mod text;

pub use assemble::{FrequencyTarget, MatchedPair, TestItem, TestSet};
pub use candidates::{PseudowordCandidate, Rejection, Validator};
pub use compound::{CompoundGate, SplitDecision, SplitterModel};
pub use corpus::{FilterConfig, Lexicon, LexiconEntry, Token, Upos};
pub use ngram::{LogProbProfile, NGramModel, TranslitTable};
pub use scoring::{Answer, DistanceMatrix, ScoreReport, TrialResponse};

/// Version string stamped into exported test sets.
pub const PIPELINE_VERSION: &str = concat!("vocabforge-", env!("CARGO_PKG_VERSION"));

/// Symbol used to pad words on both sides before n-gram counting.
pub const PAD: char = '*';
