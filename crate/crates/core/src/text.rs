//! Case/diacritic folding and tokenization used by every string comparison.

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Lowercases and strips diacritics ("Bogotá" -> "bogota").
pub fn fold(s: &str) -> String {
    s.nfd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .collect()
}

/// Folded form with punctuation collapsed to single spaces, trimmed.
pub fn fold_key(s: &str) -> String {
    tokens(s).join(" ")
}

/// Whitespace tokens after folding and punctuation stripping.
pub fn tokens(s: &str) -> Vec<String> {
    let folded: String = fold(s)
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    folded.split_whitespace().map(str::to_owned).collect()
}

/// Overlapping word n-grams, each joined by a single space.
pub fn shingles(s: &str, n: usize) -> Vec<String> {
    let toks = tokens(s);
    if n == 0 || toks.len() < n {
        return Vec::new();
    }
    toks.windows(n).map(|w| w.join(" ")).collect()
}
