//! Annotated-corpus ingestion, token acceptance and frequency lexicons.
//!
//! Input is either CoNLL-U (FORM, LEMMA and UPOS columns, documents split
//! on `# newdoc` comments) or a four-column TSV of
//! `doc_id, surface, lemma, upos`. Accepted tokens are counted by lowercase
//! lemma into a [`Lexicon`]; [`filter_jargon`] then drops lemmas whose
//! occurrences are concentrated in few documents.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no token passed the acceptance filters; the lexicon is empty")]
    EmptyLexicon,
    #[error("percentile must be in (0, 100], got {0}")]
    InvalidPercentile(f64),
    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

/// Universal Dependencies v2 part-of-speech tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Upos {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

impl Upos {
    pub const ALL: [Upos; 17] = [
        Upos::Adj,
        Upos::Adp,
        Upos::Adv,
        Upos::Aux,
        Upos::Cconj,
        Upos::Det,
        Upos::Intj,
        Upos::Noun,
        Upos::Num,
        Upos::Part,
        Upos::Pron,
        Upos::Propn,
        Upos::Punct,
        Upos::Sconj,
        Upos::Sym,
        Upos::Verb,
        Upos::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Upos::Adj => "ADJ",
            Upos::Adp => "ADP",
            Upos::Adv => "ADV",
            Upos::Aux => "AUX",
            Upos::Cconj => "CCONJ",
            Upos::Det => "DET",
            Upos::Intj => "INTJ",
            Upos::Noun => "NOUN",
            Upos::Num => "NUM",
            Upos::Part => "PART",
            Upos::Pron => "PRON",
            Upos::Propn => "PROPN",
            Upos::Punct => "PUNCT",
            Upos::Sconj => "SCONJ",
            Upos::Sym => "SYM",
            Upos::Verb => "VERB",
            Upos::X => "X",
        }
    }
}

impl fmt::Display for Upos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown UPOS tag {0:?}")]
pub struct UnknownUpos(pub String);

impl FromStr for Upos {
    type Err = UnknownUpos;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Upos::ALL.into_iter().find(|tag| tag.as_str() == s).ok_or_else(|| UnknownUpos(s.to_string()))
    }
}

/// One annotated corpus token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub upos: Upos,
    pub doc_id: String,
}

/// Tokens read from one source plus the rows skipped for unknown tags.
#[derive(Debug, Default, Clone)]
pub struct Ingested {
    pub tokens: Vec<Token>,
    pub skipped_unknown_pos: usize,
}

impl Ingested {
    pub fn extend(&mut self, other: Ingested) {
        self.tokens.extend(other.tokens);
        self.skipped_unknown_pos += other.skipped_unknown_pos;
    }

    pub fn doc_count(&self) -> usize {
        self.tokens.iter().map(|t| t.doc_id.as_str()).collect::<HashSet<_>>().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Conllu,
    Tsv,
}

impl CorpusFormat {
    /// `.conllu`/`.conll` files are CoNLL-U, everything else TSV.
    pub fn detect(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("conllu") | Some("conll") => CorpusFormat::Conllu,
            _ => CorpusFormat::Tsv,
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Parse { line, message: message.into() }
}

fn check_lemma(line: usize, lemma: &str) -> Result<()> {
    if lemma.is_empty() || lemma == "_" {
        return Err(parse_err(line, "missing lemma"));
    }
    Ok(())
}

/// Reads a CoNLL-U stream.
///
/// Documents start at `# newdoc` comments (`# newdoc id = X` names them,
/// otherwise they are numbered under `doc_prefix`). Multiword range lines
/// and empty nodes are skipped.
pub fn read_conllu<R: BufRead>(reader: R, doc_prefix: &str) -> Result<Ingested> {
    let mut out = Ingested::default();
    let mut doc_index = 0usize;
    let mut doc_id = format!("{doc_prefix}#0");
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(rest) = comment.strip_prefix("newdoc") {
                doc_index += 1;
                doc_id = match rest.trim().strip_prefix("id") {
                    Some(id) => id.trim_start().trim_start_matches('=').trim().to_string(),
                    None => format!("{doc_prefix}#{doc_index}"),
                };
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(parse_err(lineno, format!("expected 10 columns, found {}", cols.len())));
        }
        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            continue;
        }
        if id.parse::<u32>().is_err() {
            return Err(parse_err(lineno, format!("invalid token id {id:?}")));
        }
        let (surface, lemma, upos) = (cols[1], cols[2], cols[3]);
        if surface.is_empty() {
            return Err(parse_err(lineno, "empty FORM"));
        }
        check_lemma(lineno, lemma)?;
        match upos.parse::<Upos>() {
            Ok(upos) => out.tokens.push(Token {
                surface: surface.to_string(),
                lemma: lemma.to_string(),
                upos,
                doc_id: doc_id.clone(),
            }),
            Err(_) => out.skipped_unknown_pos += 1,
        }
    }
    Ok(out)
}

/// Reads the simplified `doc_id<TAB>surface<TAB>lemma<TAB>upos` format.
///
/// Blank lines and lines starting with `#` are ignored.
pub fn read_tsv<R: BufRead>(reader: R) -> Result<Ingested> {
    let mut out = Ingested::default();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [doc_id, surface, lemma, upos] = cols[..] else {
            return Err(parse_err(lineno, format!("expected 4 columns, found {}", cols.len())));
        };
        if doc_id.is_empty() {
            return Err(parse_err(lineno, "empty doc_id"));
        }
        if surface.is_empty() {
            return Err(parse_err(lineno, "empty surface"));
        }
        check_lemma(lineno, lemma)?;
        match upos.parse::<Upos>() {
            Ok(upos) => out.tokens.push(Token {
                surface: surface.to_string(),
                lemma: lemma.to_string(),
                upos,
                doc_id: doc_id.to_string(),
            }),
            Err(_) => out.skipped_unknown_pos += 1,
        }
    }
    Ok(out)
}

/// Reads a corpus file, choosing the format from its extension.
pub fn read_corpus_file(path: &Path) -> Result<Ingested> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    match CorpusFormat::detect(path) {
        CorpusFormat::Conllu => read_conllu(file, &path.display().to_string()),
        CorpusFormat::Tsv => read_tsv(file),
    }
}

/// A dictionary word list for the language membership check.
#[derive(Debug, Clone, Default)]
pub struct WordList {
    words: HashSet<String>,
}

impl WordList {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut words = HashSet::new();
        for line in reader.lines() {
            let line = line?;
            let word = line.trim();
            if !word.is_empty() && !word.starts_with('#') {
                words.insert(text::normalize(word));
            }
        }
        Ok(WordList { words })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&text::normalize(word))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl<S: AsRef<str>> FromIterator<S> for WordList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        WordList { words: iter.into_iter().map(|w| text::normalize(w.as_ref())).collect() }
    }
}

/// Acceptance settings for one language run.
#[derive(Debug, Clone)]
pub struct FilterConfig {
    pub language: String,
    pub allowed_pos: BTreeSet<Upos>,
    /// Word lists for the target language. A lemma passes the language
    /// check when any list contains it; with no lists the check is off.
    pub word_lists: Vec<WordList>,
    pub jargon_percentile: f64,
}

impl FilterConfig {
    pub fn new(language: impl Into<String>) -> Self {
        FilterConfig {
            language: language.into(),
            allowed_pos: BTreeSet::from([Upos::Noun]),
            word_lists: Vec::new(),
            jargon_percentile: 95.0,
        }
    }

    pub fn with_word_list(mut self, list: WordList) -> Self {
        self.word_lists.push(list);
        self
    }

    fn in_language(&self, lemma: &str) -> bool {
        self.word_lists.is_empty() || self.word_lists.iter().any(|l| l.contains(lemma))
    }
}

/// Why a token was not accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenRejection {
    PartOfSpeech,
    AllUppercase,
    TooShort,
    NonLetter,
    NotInLanguage,
}

/// Applies the acceptance filters, reporting the first failing rule.
pub fn check_token(token: &Token, cfg: &FilterConfig) -> Result<(), TokenRejection> {
    if token.upos == Upos::Propn || !cfg.allowed_pos.contains(&token.upos) {
        return Err(TokenRejection::PartOfSpeech);
    }
    if text::is_all_uppercase(&token.surface) {
        return Err(TokenRejection::AllUppercase);
    }
    let lemma = text::normalize(&token.lemma);
    if !text::is_letters_only(&lemma) {
        return Err(TokenRejection::NonLetter);
    }
    if text::letter_len(&lemma) < 2 {
        return Err(TokenRejection::TooShort);
    }
    if !cfg.in_language(&lemma) {
        return Err(TokenRejection::NotInLanguage);
    }
    Ok(())
}

pub fn accept_token(token: &Token, cfg: &FilterConfig) -> bool {
    check_token(token, cfg).is_ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub lemma: String,
    pub token_count: u64,
    pub doc_count: u64,
    pub concentration_ratio: f64,
}

impl LexiconEntry {
    pub fn new(lemma: impl Into<String>, token_count: u64, doc_count: u64) -> Self {
        LexiconEntry {
            lemma: lemma.into(),
            token_count,
            doc_count,
            concentration_ratio: token_count as f64 / doc_count as f64,
        }
    }

    pub fn log10_frequency(&self) -> f64 {
        (self.token_count as f64).log10()
    }
}

/// Accepted lemmas of one language with their counts and length bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LexiconFile", into = "LexiconFile")]
pub struct Lexicon {
    language: String,
    entries: BTreeMap<String, LexiconEntry>,
    min_len: usize,
    max_len: usize,
}

#[derive(Serialize, Deserialize)]
struct LexiconFile {
    language: String,
    min_len: usize,
    max_len: usize,
    entries: Vec<LexiconEntry>,
}

impl TryFrom<LexiconFile> for Lexicon {
    type Error = CorpusError;

    fn try_from(file: LexiconFile) -> Result<Self> {
        let lex = Lexicon::from_entries(file.language, file.entries)?;
        if (lex.min_len, lex.max_len) != (file.min_len, file.max_len) {
            return Err(CorpusError::InvalidLexicon(format!(
                "stored length bounds [{}, {}] disagree with entries [{}, {}]",
                file.min_len, file.max_len, lex.min_len, lex.max_len
            )));
        }
        Ok(lex)
    }
}

impl From<Lexicon> for LexiconFile {
    fn from(lex: Lexicon) -> Self {
        LexiconFile {
            language: lex.language,
            min_len: lex.min_len,
            max_len: lex.max_len,
            entries: lex.entries.into_values().collect(),
        }
    }
}

impl Lexicon {
    /// Builds a lexicon from entries, checking the entry invariants.
    pub fn from_entries(language: impl Into<String>, entries: impl IntoIterator<Item = LexiconEntry>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for entry in entries {
            if entry.lemma != text::normalize(&entry.lemma) {
                return Err(CorpusError::InvalidLexicon(format!("{:?} is not lowercase NFC", entry.lemma)));
            }
            if entry.doc_count == 0 || entry.doc_count > entry.token_count {
                return Err(CorpusError::InvalidLexicon(format!(
                    "{:?}: need 1 <= doc_count <= token_count, got {} / {}",
                    entry.lemma, entry.doc_count, entry.token_count
                )));
            }
            if text::letter_len(&entry.lemma) < 2 {
                return Err(CorpusError::InvalidLexicon(format!("{:?} is shorter than 2 letters", entry.lemma)));
            }
            let entry = LexiconEntry::new(entry.lemma, entry.token_count, entry.doc_count);
            if map.insert(entry.lemma.clone(), entry).is_some() {
                return Err(CorpusError::InvalidLexicon("duplicate lemma".into()));
            }
        }
        Self::from_map(language.into(), map)
    }

    fn from_map(language: String, entries: BTreeMap<String, LexiconEntry>) -> Result<Self> {
        let lens = entries.keys().map(|l| text::letter_len(l));
        let min_len = lens.clone().min().ok_or(CorpusError::EmptyLexicon)?;
        let max_len = lens.max().unwrap_or(min_len);
        Ok(Lexicon { language, entries, min_len, max_len })
    }

    /// Convenience for tests and tools: every word gets count 1 in 1 doc.
    pub fn from_words<S: AsRef<str>>(language: &str, words: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::from_entries(language, words.into_iter().map(|w| LexiconEntry::new(text::normalize(w.as_ref()), 1, 1)))
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn min_len(&self) -> usize {
        self.min_len
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.entries.contains_key(lemma)
    }

    pub fn get(&self, lemma: &str) -> Option<&LexiconEntry> {
        self.entries.get(lemma)
    }

    /// Entries in lemma order.
    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.entries.values()
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Copy of the lexicon restricted to entries satisfying `keep`.
    pub fn retain(&self, mut keep: impl FnMut(&LexiconEntry) -> bool) -> Result<Self> {
        let entries = self.entries.iter().filter(|(_, e)| keep(e)).map(|(k, e)| (k.clone(), e.clone())).collect();
        Self::from_map(self.language.clone(), entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(reader)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("lexicon serializes")
    }
}

/// Per-lemma counts; merging is associative and commutative, so documents
/// can be counted independently and combined in any order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LexiconCounts {
    counts: HashMap<String, (u64, HashSet<String>)>,
}

impl LexiconCounts {
    /// Counts `token` if it passes the filters.
    pub fn add(&mut self, token: &Token, cfg: &FilterConfig) -> bool {
        if !accept_token(token, cfg) {
            return false;
        }
        let (count, docs) = self.counts.entry(text::normalize(&token.lemma)).or_default();
        *count += 1;
        if !docs.contains(&token.doc_id) {
            docs.insert(token.doc_id.clone());
        }
        true
    }

    pub fn merge(mut self, other: LexiconCounts) -> LexiconCounts {
        for (lemma, (count, docs)) in other.counts {
            let slot = self.counts.entry(lemma).or_default();
            slot.0 += count;
            slot.1.extend(docs);
        }
        self
    }

    pub fn into_lexicon(self, language: &str) -> Result<Lexicon> {
        let entries = self
            .counts
            .into_iter()
            .map(|(lemma, (count, docs))| {
                let entry = LexiconEntry::new(lemma.clone(), count, docs.len() as u64);
                (lemma, entry)
            })
            .collect();
        Lexicon::from_map(language.to_string(), entries)
    }
}

/// Counts accepted tokens by lowercase lemma.
pub fn build_lexicon<'a>(tokens: impl IntoIterator<Item = &'a Token>, cfg: &FilterConfig) -> Result<Lexicon> {
    let mut counts = LexiconCounts::default();
    for token in tokens {
        counts.add(token, cfg);
    }
    counts.into_lexicon(&cfg.language)
}

/// Nearest-rank percentile of `values` (sorted ascending in place).
pub fn nearest_rank(values: &mut [f64], percentile: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let rank = (percentile * n as f64 / 100.0).ceil() as usize;
    Some(values[rank.clamp(1, n) - 1])
}

/// Keeps entries whose concentration ratio is at most the nearest-rank
/// `percentile` of all ratios (ties at the threshold are kept).
pub fn filter_jargon(lex: &Lexicon, percentile: f64) -> Result<Lexicon> {
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(CorpusError::InvalidPercentile(percentile));
    }
    let mut ratios: Vec<f64> = lex.entries().map(|e| e.concentration_ratio).collect();
    let threshold = nearest_rank(&mut ratios, percentile).ok_or(CorpusError::EmptyLexicon)?;
    lex.retain(|e| e.concentration_ratio <= threshold)
}
