//! Character-to-letters tables for scripts without an alphabet.
//!
//! Words are spelled out by concatenating each character's letter string.
//! Going back, the letter string is rewritten left to right, always taking
//! the longest letter sequence in the table that matches at the current
//! position. Anything that cannot be consumed is a leftover and the string
//! is rejected.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TranslitError {
    #[error("character {0:?} has no transliteration")]
    Unmapped(char),
    #[error("letters {letters:?} leave {leftover:?} unconverted")]
    Leftover { letters: String, leftover: String },
    #[error("table line {line}: {message}")]
    Table { line: usize, message: String },
    #[error("reading table: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslitTable {
    char_to_letters: BTreeMap<char, String>,
    /// Inverse mapping, longest letter strings first. When several
    /// characters share a spelling the first one in table order wins.
    letters_to_char: Vec<(String, char)>,
    lookup: HashMap<String, char>,
    longest: usize,
}

impl TranslitTable {
    /// Builds a table from `(character, letters)` pairs in priority order.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (char, String)>) -> Result<Self, TranslitError> {
        let mut char_to_letters = BTreeMap::new();
        let mut letters_to_char: Vec<(String, char)> = Vec::new();
        let mut lookup = HashMap::new();
        for (idx, (c, letters)) in pairs.into_iter().enumerate() {
            let line = idx + 1;
            let letters = letters.to_lowercase();
            if letters.is_empty() || !letters.chars().all(char::is_alphabetic) {
                return Err(TranslitError::Table { line, message: format!("{letters:?} is not a letter string") });
            }
            if char_to_letters.insert(c, letters.clone()).is_some() {
                return Err(TranslitError::Table { line, message: format!("duplicate character {c:?}") });
            }
            if !lookup.contains_key(&letters) {
                lookup.insert(letters.clone(), c);
                letters_to_char.push((letters, c));
            }
        }
        letters_to_char.sort_by_key(|(letters, _)| std::cmp::Reverse(letters.chars().count()));
        let longest = letters_to_char.first().map_or(0, |(l, _)| l.chars().count());
        Ok(TranslitTable { char_to_letters, letters_to_char, lookup, longest })
    }

    /// Parses `character<TAB>letters` lines; `#` lines and blanks are skipped.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, TranslitError> {
        let mut pairs = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| TranslitError::Io(e.to_string()))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let table_err = |message: String| TranslitError::Table { line: idx + 1, message };
            let (chr, letters) = line.split_once('\t').ok_or_else(|| table_err("expected two columns".into()))?;
            let mut chars = chr.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(table_err(format!("{chr:?} is not a single character")));
            };
            pairs.push((c, letters.trim().to_string()));
        }
        Self::from_pairs(pairs)
    }

    pub fn from_path(path: &Path) -> Result<Self, TranslitError> {
        let file = std::fs::File::open(path).map_err(|e| TranslitError::Io(e.to_string()))?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn letters_for(&self, c: char) -> Option<&str> {
        self.char_to_letters.get(&c).map(String::as_str)
    }

    /// Inverse entries, longest letter string first.
    pub fn inverse(&self) -> &[(String, char)] {
        &self.letters_to_char
    }

    pub fn len(&self) -> usize {
        self.char_to_letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.char_to_letters.is_empty()
    }

    pub fn to_letters(&self, word: &str) -> Result<String, TranslitError> {
        word.chars().map(|c| self.letters_for(c).ok_or(TranslitError::Unmapped(c))).collect()
    }

    /// Converts letters back to characters, longest match first.
    pub fn from_letters(&self, letters: &str) -> Result<String, TranslitError> {
        let chars: Vec<char> = letters.chars().collect();
        let mut out = String::new();
        let mut pos = 0;
        'outer: while pos < chars.len() {
            for len in (1..=self.longest.min(chars.len() - pos)).rev() {
                let key: String = chars[pos..pos + len].iter().collect();
                if let Some(&c) = self.lookup.get(&key) {
                    out.push(c);
                    pos += len;
                    continue 'outer;
                }
            }
            return Err(TranslitError::Leftover {
                letters: letters.to_string(),
                leftover: chars[pos..].iter().collect(),
            });
        }
        Ok(out)
    }
}

/// Letter form of `word`: identity without a table.
pub fn to_letters(word: &str, table: Option<&TranslitTable>) -> Result<String, TranslitError> {
    match table {
        Some(t) => t.to_letters(word),
        None => Ok(word.to_string()),
    }
}
