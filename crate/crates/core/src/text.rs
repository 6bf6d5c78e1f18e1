//! Small Unicode helpers shared by the pipeline stages.

use unicode_normalization::UnicodeNormalization;

/// NFC-normalizes and lowercases `s`.
pub fn normalize(s: &str) -> String {
    s.nfc().collect::<String>().to_lowercase()
}

/// Number of Unicode scalar values after NFC normalization.
pub fn letter_len(s: &str) -> usize {
    s.nfc().count()
}

/// True when every scalar is alphabetic (no digits, punctuation or spaces).
pub fn is_letters_only(s: &str) -> bool {
    !s.is_empty() && s.chars().all(char::is_alphabetic)
}

/// True when `s` has at least one cased letter and no lowercase letter.
///
/// Uncased scripts (Han, Thai, ...) are never "all uppercase".
pub fn is_all_uppercase(s: &str) -> bool {
    let mut cased = false;
    for c in s.chars() {
        if c.is_lowercase() {
            return false;
        }
        if c.is_uppercase() {
            cased = true;
        }
    }
    cased
}

/// First `n` scalars of `s` (the whole string when shorter).
pub fn prefix(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((idx, _)) => &s[..idx],
        None => s,
    }
}

/// Last `n` scalars of `s` (the whole string when shorter).
pub fn suffix(s: &str, n: usize) -> &str {
    let len = s.chars().count();
    if len <= n {
        return s;
    }
    let (idx, _) = s.char_indices().nth(len - n).expect("index within length");
    &s[idx..]
}
