use super::{CurationConfig, Decision, RejectReason, SeedDocument};

/// Fraction of characters that are control characters (excluding `\n`, `\t`,
/// `\r`) or the replacement character U+FFFD. Empty text scores 0.
pub fn garbled_ratio(text: &str) -> f64 {
    let mut total = 0usize;
    let mut bad = 0usize;
    for c in text.chars() {
        total += 1;
        if c == '\u{FFFD}' || (c.is_control() && !matches!(c, '\n' | '\t' | '\r')) {
            bad += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        bad as f64 / total as f64
    }
}

/// Basic Latin letters (`A-Z`, `a-z`) and CJK ideographs: unified block,
/// extensions A through F, and the compatibility ideograph blocks.
pub fn is_latin_or_cjk_letter(c: char) -> bool {
    c.is_ascii_alphabetic()
        || matches!(c as u32,
            0x3400..=0x4DBF
            | 0x4E00..=0x9FFF
            | 0xF900..=0xFAFF
            | 0x20000..=0x2A6DF
            | 0x2A700..=0x2EBEF
            | 0x2F800..=0x2FA1F)
}

/// Share of alphabetic code points that are Basic Latin or CJK. Text without
/// any letters scores 1.
pub fn latin_cjk_letter_ratio(text: &str) -> f64 {
    let (mut letters, mut ok) = (0usize, 0usize);
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        letters += 1;
        if is_latin_or_cjk_letter(c) {
            ok += 1;
        }
    }
    if letters == 0 {
        1.0
    } else {
        ok as f64 / letters as f64
    }
}

/// Checks run in order: length bounds (inclusive), garble ratio, language.
pub fn filter_document(doc: &SeedDocument, cfg: &CurationConfig) -> Decision {
    let chars = doc.text.chars().count();
    if chars < cfg.min_chars {
        return Decision::Reject(RejectReason::TooShort);
    }
    if chars > cfg.max_chars {
        return Decision::Reject(RejectReason::TooLong);
    }
    if garbled_ratio(&doc.text) > cfg.garbled_max {
        return Decision::Reject(RejectReason::Garbled);
    }
    if latin_cjk_letter_ratio(&doc.text) < cfg.language_min_ratio {
        return Decision::Reject(RejectReason::Language);
    }
    Decision::Keep
}
