use unicode_normalization::UnicodeNormalization;

/// Canonical form shared by every matcher: NFKC, ASCII quotes, lowercase,
/// single spaces, trimmed.
pub fn normalize_text(s: &str) -> String {
    let folded: String = s
        .nfkc()
        .map(|c| match c {
            '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' | '\u{2032}' => '\'',
            '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' | '\u{2033}' => '"',
            other => other,
        })
        .collect();
    folded.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Contiguous character n-grams of `s` (a multiset, in order of position).
///
/// Strings shorter than `n` yield themselves as a single gram so that short
/// terms stay matchable.
pub fn char_ngrams(s: &str, n: usize) -> Vec<String> {
    assert!(n >= 2, "n-gram length must be at least 2");
    let chars: Vec<char> = s.chars().collect();
    if chars.is_empty() {
        return Vec::new();
    }
    if chars.len() < n {
        return vec![s.to_string()];
    }
    chars.windows(n).map(|w| w.iter().collect()).collect()
}

pub(crate) fn tokenize(normalized: &str) -> Vec<&str> {
    normalized.split(' ').filter(|t| !t.is_empty()).collect()
}
