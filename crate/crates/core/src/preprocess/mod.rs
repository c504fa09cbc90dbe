//! Deterministic text preprocessing: sentence splitting, entity
//! generalization, tokenization, stopword removal and Porter stemming.
//!
//! The word lists live in `data/` and are embedded at compile time. Each list
//! has one entry per line; `#` starts a comment line.

mod entities;
mod porter;

pub use entities::{EntityRecognizer, EntityTag};
pub use porter::stem;

use std::collections::HashSet;
use std::sync::LazyLock;

const STOPWORDS: &str = include_str!("../../data/stopwords.txt");
const ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");
const HONORIFICS: &str = include_str!("../../data/honorifics.txt");

/// Parses a word-list file: one entry per line, `#` comments, blanks skipped.
pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub struct Preprocessor {
    stopwords: HashSet<String>,
    abbreviations: HashSet<String>,
    entities: EntityRecognizer,
}

static DEFAULT: LazyLock<Preprocessor> = LazyLock::new(|| {
    Preprocessor::new(
        parse_word_list(STOPWORDS),
        parse_word_list(ABBREVIATIONS),
        parse_word_list(HONORIFICS),
    )
});

impl Preprocessor {
    pub fn new(stopwords: Vec<String>, abbreviations: Vec<String>, honorifics: Vec<String>) -> Self {
        Self {
            stopwords: stopwords.into_iter().map(|w| w.to_lowercase()).collect(),
            abbreviations: abbreviations.into_iter().map(|w| w.to_lowercase()).collect(),
            entities: EntityRecognizer::new(&honorifics),
        }
    }

    /// The preprocessor built from the embedded word lists.
    pub fn standard() -> &'static Preprocessor {
        &DEFAULT
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    /// Splits raw text into trimmed sentences.
    ///
    /// A boundary is a `.`, `!` or `?` (optionally followed by closing quotes
    /// or brackets) that is followed by whitespace and then an uppercase letter
    /// or digit. A period ending a listed abbreviation or a single-letter
    /// initial never splits.
    pub fn split_sentences(&self, text: &str) -> Vec<String> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut out = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            let (_, c) = chars[i];
            if matches!(c, '.' | '!' | '?') {
                let mut end = i + 1;
                while end < chars.len() && matches!(chars[end].1, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}') {
                    end += 1;
                }
                let mut next = end;
                while next < chars.len() && chars[next].1.is_whitespace() {
                    next += 1;
                }
                let boundary = next > end
                    && next < chars.len()
                    && (chars[next].1.is_uppercase() || chars[next].1.is_ascii_digit())
                    && !(c == '.' && self.ends_with_abbreviation(text, start, chars[i].0));
                if boundary {
                    let byte_end = if end < chars.len() { chars[end].0 } else { text.len() };
                    push_trimmed(&mut out, &text[start..byte_end]);
                    start = chars[next].0;
                    i = next;
                    continue;
                }
            }
            i += 1;
        }
        push_trimmed(&mut out, &text[start..]);
        out
    }

    /// Whether the word ending at the period at byte `dot` is an abbreviation.
    fn ends_with_abbreviation(&self, text: &str, start: usize, dot: usize) -> bool {
        let before = &text[start..dot];
        let word_start = before
            .rfind(|c: char| c.is_whitespace() || c == '(')
            .map(|p| p + 1)
            .unwrap_or(0);
        let word = &before[word_start..];
        if word.chars().count() == 1 && word.chars().all(char::is_alphabetic) {
            return true;
        }
        let candidate = format!("{}.", word.to_lowercase());
        self.abbreviations.contains(&candidate)
    }

    pub fn recognize_entities(&self, raw: &str) -> String {
        self.entities.recognize(raw)
    }

    /// Turns one raw sentence into its normalized token list.
    ///
    /// Entity tags pass through untouched; every other token is lowercased,
    /// dropped when it is a stopword, and stemmed. Stemming is repeated until
    /// the stem is stable so that preprocessing preprocessed text is a no-op.
    pub fn preprocess_sentence(&self, raw: &str) -> Vec<String> {
        let generalized = self.recognize_entities(raw);
        tokenize(&generalized)
            .filter_map(|tok| {
                if EntityTag::from_token(tok).is_some() {
                    return Some(tok.to_string());
                }
                let lower = tok.to_lowercase();
                if self.is_stopword(&lower) {
                    return None;
                }
                let stemmed = stable_stem(&lower);
                if self.is_stopword(&stemmed) {
                    return None;
                }
                Some(stemmed)
            })
            .collect()
    }

    /// Preprocesses a phrase into the token sequence used for phrase matching.
    pub fn preprocess_phrase(&self, phrase: &str) -> Vec<String> {
        self.preprocess_sentence(phrase)
    }
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let t = s.trim();
    if !t.is_empty() {
        out.push(t.to_string());
    }
}

/// Splits on Unicode whitespace and punctuation; hyphenated words split apart.
pub fn tokenize(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty())
}

/// Applies the Porter stemmer until its output no longer changes.
pub fn stable_stem(word: &str) -> String {
    let mut cur = stem(word);
    // each pass either shortens the word or leaves it unchanged
    for _ in 0..8 {
        let next = stem(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

/// Convenience wrappers over the standard preprocessor.
pub fn split_sentences(text: &str) -> Vec<String> {
    Preprocessor::standard().split_sentences(text)
}

pub fn preprocess_sentence(raw: &str) -> Vec<String> {
    Preprocessor::standard().preprocess_sentence(raw)
}

pub fn recognize_entities(raw: &str) -> String {
    Preprocessor::standard().recognize_entities(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn split_basic_boundary() {
        assert_eq!(
            split_sentences("A ends here. B starts."),
            vec!["A ends here.", "B starts."]
        );
    }

    #[test]
    fn split_respects_abbreviations() {
        assert_eq!(split_sentences("See Sec. 3 for details.").len(), 1);
        assert_eq!(split_sentences("Signed by Mr. Smith today.").len(), 1);
        assert_eq!(split_sentences("Contact J. Doe. Then leave.").len(), 2);
    }

    #[test]
    fn split_question_and_exclamation() {
        assert_eq!(split_sentences("Is it due? Yes."), vec!["Is it due?", "Yes."]);
        assert_eq!(split_sentences("Stop! Go.").len(), 2);
    }

    #[test]
    fn split_needs_uppercase_or_digit() {
        assert_eq!(split_sentences("value is 3.5 units. and more").len(), 1);
        assert_eq!(split_sentences("Item one. 2 items follow.").len(), 2);
        assert!(split_sentences("   ").is_empty());
        assert!(split_sentences("").is_empty());
    }

    #[test]
    fn paper_style_example() {
        assert_eq!(
            preprocess_sentence("Annex I takes effect from 1 January 2016"),
            toks(&["annex", "NUMBER", "take", "effect", "DATE"])
        );
    }

    #[test]
    fn all_stopwords() {
        assert!(preprocess_sentence("the of and").is_empty());
    }

    #[test]
    fn url_example() {
        assert_eq!(
            preprocess_sentence("Visit https://example.com today"),
            toks(&["visit", "URL", "todai"])
        );
    }

    #[test]
    fn hyphenated_words_split() {
        assert_eq!(preprocess_sentence("sub-fund"), toks(&["sub", "fund"]));
    }

    proptest! {
        #[test]
        fn split_preserves_text(words in proptest::collection::vec("[A-Za-z0-9]{1,8}[.!?]?", 0..30)) {
            let text = words.join(" ");
            let joined: String = split_sentences(&text).concat();
            let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
            prop_assert_eq!(strip(&joined), strip(&text));
        }

        #[test]
        fn preprocessing_is_idempotent(text in "[A-Za-z0-9 ,.%/@:-]{0,80}") {
            let once = preprocess_sentence(&text);
            let twice = preprocess_sentence(&once.join(" "));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn stemmed_tokens_are_never_uppercase(text in "[A-Za-z ]{0,60}") {
            for tok in preprocess_sentence(&text) {
                if EntityTag::from_token(&tok).is_none() {
                    prop_assert!(tok.chars().all(|c| !c.is_uppercase()));
                }
            }
        }
    }

    #[test]
    fn idempotent_on_real_words() {
        let words = include_str!("../../tests/data/porter_voc.txt");
        for w in words.lines() {
            let once = preprocess_sentence(w);
            let twice = preprocess_sentence(&once.join(" "));
            assert_eq!(once, twice, "word {w}");
        }
    }
}
