//! Word-level helpers shared by every stage.
//!
//! A word is a maximal run of non-whitespace characters.

/// Iterates over the words of `text`.
pub fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Lowercases a word and strips leading/trailing punctuation, for lexicon
/// lookups.
pub fn lexical_form(word: &str) -> alloc::string::String {
    word.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

/// Collapses every whitespace run to one space and trims the ends.
pub fn collapse_whitespace(text: &str) -> alloc::string::String {
    let mut out = alloc::string::String::with_capacity(text.len());
    for w in words(text) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(w);
    }
    out
}
