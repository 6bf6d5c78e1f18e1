//! End-to-end test generation: tokens in, [`TestSet`] out.
//!
//! Every random choice draws from ChaCha streams derived from one seed, so
//! the same corpus, configuration and seed always give the same test.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::assemble::{self, AssembleError, FrequencyTarget, MatchedPair, TestSet};
use crate::candidates::Validator;
use crate::compound::{self, CompoundGate, SplitDecision};
use crate::corpus::{self, CorpusError, FilterConfig, Lexicon, Token};
use crate::ngram::{self, Generation, NGramError, NGramModel, TranslitTable};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    NGram(#[from] NGramError),
    #[error(transparent)]
    Assemble(#[from] AssembleError),
}

#[derive(Debug, Clone)]
pub struct CompoundSettings {
    pub enabled: bool,
    pub max_ngram: usize,
    pub min_segment_len: usize,
}

impl Default for CompoundSettings {
    fn default() -> Self {
        CompoundSettings {
            enabled: true,
            max_ngram: compound::DEFAULT_MAX_NGRAM,
            min_segment_len: compound::DEFAULT_MIN_SEGMENT_LEN,
        }
    }
}

/// Where the real-word frequency target comes from.
#[derive(Debug, Clone)]
pub enum TargetSource {
    Fixed(FrequencyTarget),
    /// Reference items of this language, looked up in the accepted lexicon.
    Reference(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub order: usize,
    pub candidates: usize,
    pub max_attempts: u64,
    /// Real words to draw for pairing; defaults to `candidates`.
    pub real_words: Option<usize>,
    pub keep: usize,
    pub items: usize,
    pub seed: u64,
    pub compound: CompoundSettings,
    pub target: TargetSource,
    pub table: Option<TranslitTable>,
}

impl PipelineConfig {
    pub fn new(target: TargetSource) -> Self {
        PipelineConfig {
            order: ngram::DEFAULT_ORDER,
            candidates: 1_000,
            max_attempts: ngram::DEFAULT_MAX_ATTEMPTS,
            real_words: None,
            keep: assemble::DEFAULT_KEEP,
            items: assemble::DEFAULT_ITEMS,
            seed: 42,
            compound: CompoundSettings::default(),
            target,
            table: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineSummary {
    pub accepted_lemmas: usize,
    pub after_jargon: usize,
    pub compounds_removed: usize,
    pub generation_lemmas: usize,
    pub target: FrequencyTarget,
    pub attempts: u64,
    pub candidates: usize,
    pub pairs: usize,
    pub kept_pairs: usize,
    pub items: usize,
}

pub struct PipelineOutput {
    /// Every accepted lemma, before jargon and compound removal.
    pub accepted: Lexicon,
    /// Lexicon the model is trained on.
    pub generation_lexicon: Lexicon,
    pub removed_compounds: Vec<SplitDecision>,
    pub model: NGramModel,
    pub generation: Generation,
    pub target: FrequencyTarget,
    pub real_words: Vec<String>,
    pub kept_pairs: Vec<MatchedPair>,
    pub test: TestSet,
    pub summary: PipelineSummary,
}

/// Stream for pseudoword sampling.
pub const GENERATION_STREAM: u64 = 1;
/// Stream for real-word selection.
pub const SELECTION_STREAM: u64 = 2;

/// The random source of one pipeline stage.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn run<'a>(
    tokens: impl IntoIterator<Item = &'a Token>,
    filter: &FilterConfig,
    config: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    let accepted = corpus::build_lexicon(tokens, filter)?;
    let dejargoned = corpus::filter_jargon(&accepted, filter.jargon_percentile)?;
    let gate = if config.compound.enabled {
        CompoundGate::Enabled(compound::train_splitter(
            &dejargoned,
            config.compound.max_ngram,
            config.compound.min_segment_len,
        ))
    } else {
        CompoundGate::Disabled
    };
    let decompounded = compound::remove_compounds(&dejargoned, &gate)?;
    let lexicon = decompounded.lexicon;

    let target = match &config.target {
        TargetSource::Fixed(t) => *t,
        TargetSource::Reference(items) => {
            let reference = BTreeMap::from([(filter.language.clone(), items.clone())]);
            let lexicons = BTreeMap::from([(filter.language.clone(), &accepted)]);
            let fit = assemble::fit_target(&reference, &lexicons)?;
            for (lang, missing) in &fit.missing {
                log::warn!("{} reference items missing from the {lang} lexicon", missing.len());
            }
            fit.targets[&filter.language]
        }
    };

    let table = config.table.as_ref();
    let model = ngram::build_model(&lexicon, config.order, table)?;
    // Compounds are checked against the lexicon the splitter was trained on.
    let validator = {
        let v = Validator::new(&lexicon, &gate, &model, table).with_known_lexicon(&accepted);
        filter.word_lists.iter().fold(v, |v, list| v.with_word_list(list))
    };
    let generation = ngram::generate_candidates(
        &model,
        table,
        |s| validator.validate(s),
        config.candidates,
        config.max_attempts,
        &mut stream(config.seed, GENERATION_STREAM),
    )?;

    let n_real = config.real_words.unwrap_or(config.candidates).min(lexicon.len());
    let real_words = assemble::select_real_words(&lexicon, target, n_real, &mut stream(config.seed, SELECTION_STREAM))?;
    let pairing = assemble::pair(&real_words, &generation.candidates, &model, table);
    let n_pairs = pairing.pairs.len();
    let kept_pairs = assemble::select_pairs(pairing.pairs, config.keep.min(n_pairs))?;
    let test = assemble::build_test(&kept_pairs, config.items, &filter.language, config.seed)?;

    let summary = PipelineSummary {
        accepted_lemmas: accepted.len(),
        after_jargon: dejargoned.len(),
        compounds_removed: decompounded.removed.len(),
        generation_lemmas: lexicon.len(),
        target,
        attempts: generation.attempts,
        candidates: generation.candidates.len(),
        pairs: n_pairs,
        kept_pairs: kept_pairs.len(),
        items: test.items.len(),
    };
    Ok(PipelineOutput {
        accepted,
        generation_lexicon: lexicon,
        removed_compounds: decompounded.removed,
        model,
        generation,
        target,
        real_words,
        kept_pairs,
        test,
        summary,
    })
}
