#![allow(dead_code)]

pub mod oracles;

use std::path::PathBuf;

use vocabforge::corpus::{self, WordList};
use vocabforge::pipeline::{self, PipelineConfig, PipelineOutput, TargetSource};
use vocabforge::{FilterConfig, Token};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn english_tokens() -> Vec<Token> {
    corpus::read_corpus_file(&data_dir().join("en.minicorpus.tsv")).unwrap().tokens
}

pub fn english_filter() -> FilterConfig {
    let words = WordList::from_path(&data_dir().join("en.words.txt")).unwrap();
    FilterConfig::new("en").with_word_list(words)
}

pub fn english_reference() -> Vec<String> {
    std::fs::read_to_string(data_dir().join("en.reference.txt"))
        .unwrap()
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect()
}

pub fn golden_config() -> PipelineConfig {
    PipelineConfig::new(TargetSource::Reference(english_reference()))
}

pub fn golden_run(tokens: &[Token]) -> PipelineOutput {
    pipeline::run(tokens, &english_filter(), &golden_config()).unwrap()
}
