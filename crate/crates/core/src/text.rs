//! Word-boundary tokenization shared by keyword matching and the encoder.
//!
//! A word is a maximal run of alphanumeric characters. Everything else
//! (whitespace, punctuation, hyphens, apostrophes) separates words, so
//! `women's` yields `women` and `s`, and `deir ez-zor` yields three words.

/// A word with its byte span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word<'a> {
    pub start: usize,
    pub end: usize,
    pub text: &'a str,
}

impl Word<'_> {
    pub fn lower(&self) -> String {
        self.text.to_lowercase()
    }
}

/// Splits `text` into words with byte offsets.
pub fn words(text: &str) -> Vec<Word<'_>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            out.push(Word { start: s, end: i, text: &text[s..i] });
        }
    }
    if let Some(s) = start {
        out.push(Word { start: s, end: text.len(), text: &text[s..] });
    }
    out
}

/// Lowercased word strings, in order.
pub fn lower_words(text: &str) -> Vec<String> {
    words(text).iter().map(Word::lower).collect()
}

/// True when the characters strictly between two byte offsets contain
/// sentence-final punctuation.
pub fn has_sentence_break(text: &str, from: usize, to: usize) -> bool {
    text[from..to].chars().any(|c| matches!(c, '.' | '!' | '?' | ';' | ':'))
}

/// Upper-cases the first character of `word` if `like` starts with an
/// uppercase character. No other casing is copied.
pub fn match_initial_case(word: &str, like: &str) -> String {
    let upper = like.chars().next().is_some_and(char::is_uppercase);
    if !upper {
        return word.to_string();
    }
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// FNV-1a over the UTF-8 bytes. Stable across platforms and releases.
pub fn stable_hash(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
