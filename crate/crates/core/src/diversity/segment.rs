//! Rule-based sentence segmentation.

use alloc::vec::Vec;

const TERMINATORS: [char; 4] = ['.', '!', '?', '…'];
const CLOSERS: [char; 8] = ['"', '\'', ')', ']', '»', '”', '’', '}'];

/// Lowercased tokens that end in a period without ending a sentence.
const ABBREVIATIONS: [&str; 20] = [
    "adib.", "etab.", "esk.", "or.", "zk.", "k.a.", "ik.", "e.g.", "i.e.", "etc.", "dr.", "mr.",
    "mrs.", "ms.", "st.", "prof.", "sr.", "jr.", "vs.", "approx.",
];

fn is_abbreviation(token: &str) -> bool {
    ABBREVIATIONS.iter().any(|a| token.eq_ignore_ascii_case(a))
}

/// Splits `text` into sentences.
///
/// A boundary is a run of `. ! ? …` (optionally followed by closing quotes
/// or brackets) that is followed by whitespace or the end of the text. A
/// lone period closing a known abbreviation is not a boundary. Sentences are
/// trimmed and never empty.
pub fn segment_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();

    while let Some((i, c)) = chars.next() {
        if !TERMINATORS.contains(&c) {
            continue;
        }
        let mut end = i + c.len_utf8();
        let mut run_len = 1;
        while let Some(&(j, n)) = chars.peek() {
            if TERMINATORS.contains(&n) {
                run_len += 1;
            } else if !CLOSERS.contains(&n) {
                break;
            }
            end = j + n.len_utf8();
            chars.next();
        }
        let at_break = match chars.peek() {
            None => true,
            Some(&(_, n)) => n.is_whitespace(),
        };
        if !at_break {
            continue;
        }
        if run_len == 1 && c == '.' {
            let token_start = text[..i].rfind(char::is_whitespace).map_or(0, |p| p + 1);
            let token_start = token_start.max(start);
            if is_abbreviation(&text[token_start..=i]) {
                continue;
            }
        }
        push_trimmed(&mut out, &text[start..end]);
        start = end;
    }
    push_trimmed(&mut out, &text[start..]);
    out
}

fn push_trimmed<'a>(out: &mut Vec<&'a str>, piece: &'a str) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::collapse_whitespace;
    use alloc::string::String;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn two_terminators() {
        assert_eq!(segment_sentences("Kaixo. Zer moduz?"), vec!["Kaixo.", "Zer moduz?"]);
    }

    #[test]
    fn no_terminator_is_one_sentence() {
        assert_eq!(segment_sentences("bat bi hiru"), vec!["bat bi hiru"]);
    }

    #[test]
    fn empty_and_blank_inputs() {
        assert!(segment_sentences("").is_empty());
        assert!(segment_sentences("  \n ").is_empty());
    }

    #[test]
    fn abbreviations_do_not_split() {
        assert_eq!(
            segment_sentences("Fruta asko jaten dut, adib. sagarrak. Bai!"),
            vec!["Fruta asko jaten dut, adib. sagarrak.", "Bai!"]
        );
    }

    #[test]
    fn terminator_runs_and_closers() {
        assert_eq!(
            segment_sentences("Benetan?! «Ez dakit.» Agian… bai"),
            vec!["Benetan?!", "«Ez dakit.»", "Agian…", "bai"]
        );
    }

    #[test]
    fn inner_periods_do_not_split() {
        assert_eq!(segment_sentences("3.5 kilo eta www.eus gunea."), vec!["3.5 kilo eta www.eus gunea."]);
    }

    #[test]
    fn thousand_fixture_sentences() {
        let mut text = String::new();
        for i in 0..1000 {
            let end = ["." , "!", "?", "…"][i % 4];
            text.push_str(&alloc::format!("Esaldi zenbaki {i} hemen dago{end}"));
            text.push_str(if i % 3 == 0 { "\n" } else { " " });
        }
        assert_eq!(segment_sentences(&text).len(), 1000);
    }

    proptest! {
        #[test]
        fn segments_reassemble_input(text in "[a-zA-Z.!? \n…]{0,120}") {
            let parts = segment_sentences(&text);
            prop_assert!(parts.iter().all(|p| !p.is_empty()));
            prop_assert_eq!(collapse_whitespace(&parts.join(" ")), collapse_whitespace(&text));
        }
    }
}
