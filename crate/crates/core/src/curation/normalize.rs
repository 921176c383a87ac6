use alloc::string::String;

use unicode_normalization::UnicodeNormalization;

use crate::corpus::Document;

/// Canonical text form used before deduplication and tokenizer training.
///
/// Control characters other than `\n` and `\t` are dropped, the text is put
/// in NFC, runs of non-newline, non-tab whitespace become one space and
/// every line is trimmed. The function is idempotent.
pub fn normalize_text(text: &str) -> String {
    let cleaned: String = text.chars().filter(|&c| !c.is_control() || c == '\n' || c == '\t').collect();
    let composed: String = cleaned.nfc().collect();

    let mut out = String::with_capacity(composed.len());
    for (i, line) in composed.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let mut pending_space = false;
        for c in line.trim().chars() {
            if c.is_whitespace() && c != '\t' {
                pending_space = true;
                continue;
            }
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    }
    // Dropping characters can leave a base letter next to a combining mark.
    if out.nfc().eq(out.chars()) {
        out
    } else {
        out.nfc().collect()
    }
}

pub fn normalize_document(doc: &Document) -> Document {
    Document { text: normalize_text(&doc.text), ..doc.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn composes_combining_accent() {
        assert_eq!(normalize_text("a\u{0301}"), "á");
    }

    #[test]
    fn collapses_spaces_and_trims_lines() {
        assert_eq!(normalize_text("a   b"), "a b");
        assert_eq!(normalize_text("  kaixo  \n   zer\u{00a0}\u{00a0}moduz  "), "kaixo\nzer moduz");
    }

    #[test]
    fn drops_controls_keeps_tab_and_newline() {
        assert_eq!(normalize_text("a\u{0007}b\tc\r\nd"), "ab\tc\nd");
    }

    #[test]
    fn document_metadata_preserved() {
        let d = Document::new("x", "s", " a  b ").with_author("u").with_timestamp(3);
        let n = normalize_document(&d);
        assert_eq!(n.text, "a b");
        assert_eq!((n.id.as_str(), n.author.as_deref(), n.timestamp), ("x", Some("u"), Some(3)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn idempotent(text in "[a-eA-E \t\n\r\u{0000}-\u{001f}\u{00a0}\u{0300}-\u{0308}\u{3000}áé]{0,40}") {
            let once = normalize_text(&text);
            prop_assert_eq!(normalize_text(&once), once);
        }
    }
}
