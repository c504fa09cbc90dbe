//! Rule-based named-entity generalization.
//!
//! Spans recognized as numbers, dates, person names or web addresses are
//! replaced by their uppercase category tag. Recognition is a single
//! left-to-right scan: at each step the earliest match wins, and among matches
//! starting at the same offset the longest one wins. Remaining ties go to the
//! pattern declared first (URL, DATE, PERSON, NUMBER).

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityTag {
    Number,
    Date,
    Person,
    Url,
}

impl EntityTag {
    pub const ALL: [EntityTag; 4] = [
        EntityTag::Number,
        EntityTag::Date,
        EntityTag::Person,
        EntityTag::Url,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityTag::Number => "NUMBER",
            EntityTag::Date => "DATE",
            EntityTag::Person => "PERSON",
            EntityTag::Url => "URL",
        }
    }

    pub fn from_token(token: &str) -> Option<EntityTag> {
        match token {
            "NUMBER" => Some(EntityTag::Number),
            "DATE" => Some(EntityTag::Date),
            "PERSON" => Some(EntityTag::Person),
            "URL" => Some(EntityTag::Url),
            _ => None,
        }
    }
}

impl fmt::Display for EntityTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const MONTH: &str = "(?:(?:January|February|March|April|May|June|July|August|September|October|November|December|Jan|Feb|Mar|Apr|Jun|Jul|Aug|Sept|Sep|Oct|Nov|Dec)\\b\\.?)";
const ORDINAL: &str = "(?:st|nd|rd|th)?";

struct Pattern {
    tag: EntityTag,
    regex: Regex,
    validate: Option<fn(&str) -> bool>,
}

pub struct EntityRecognizer {
    patterns: Vec<Pattern>,
}

fn is_roman_numeral(s: &str) -> bool {
    static CANONICAL: std::sync::LazyLock<Regex> = std::sync::LazyLock::new(|| {
        Regex::new("^(?:XL|L?X{0,3})(?:IX|IV|V?I{0,3})$").expect("valid regex")
    });
    !s.is_empty() && CANONICAL.is_match(s)
}

impl EntityRecognizer {
    /// Builds the recognizer; `honorifics` introduce PERSON spans.
    pub fn new(honorifics: &[String]) -> Self {
        let mut patterns = Vec::new();
        let mut push = |tag, re: &str, validate| {
            patterns.push(Pattern {
                tag,
                regex: Regex::new(re).expect("entity pattern compiles"),
                validate,
            })
        };

        push(
            EntityTag::Url,
            r#"\b(?:(?:https?|ftp)://|www\.)[^\s<>"]*[^\s<>".,;:!?)\]'}]"#,
            None,
        );
        push(
            EntityTag::Url,
            r"\b[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,}\b",
            None,
        );

        push(
            EntityTag::Date,
            &format!(r"\b\d{{1,2}}{ORDINAL}\s+(?:of\s+)?{MONTH},?\s+\d{{4}}\b"),
            None,
        );
        push(
            EntityTag::Date,
            &format!(r"\b{MONTH}\s+\d{{1,2}}{ORDINAL},?\s+\d{{4}}\b"),
            None,
        );
        push(EntityTag::Date, &format!(r"\b{MONTH}\s+\d{{4}}\b"), None);
        push(
            EntityTag::Date,
            &format!(r"\b\d{{1,2}}{ORDINAL}\s+(?:of\s+)?{MONTH}"),
            None,
        );
        push(
            EntityTag::Date,
            r"\b\d{1,2}[/.-]\d{1,2}[/.-](?:\d{4}|\d{2})\b",
            None,
        );
        push(EntityTag::Date, r"\b\d{4}-\d{2}-\d{2}\b", None);

        if !honorifics.is_empty() {
            let alts = honorifics
                .iter()
                .map(|h| regex::escape(h))
                .collect::<Vec<_>>()
                .join("|");
            push(
                EntityTag::Person,
                &format!(
                    r"\b(?:{alts})\.?\s+[A-Z](?:\.|[A-Za-z'-]*)(?:\s+[A-Z](?:\.|[A-Za-z'-]*))*"
                ),
                None,
            );
        }

        push(
            EntityTag::Number,
            r"\b\d+(?:[.,]\d+)*\b(?:\s?%|\s?per\s?cent\b)?",
            None,
        );
        push(EntityTag::Number, r"\b[IVXL]+\b", Some(is_roman_numeral));

        Self { patterns }
    }

    /// Earliest valid match of `pattern` starting at or after `from`.
    fn find_from(pattern: &Pattern, text: &str, from: usize) -> Option<(usize, usize)> {
        let mut pos = from;
        while pos <= text.len() {
            let m = pattern.regex.find_at(text, pos)?;
            match pattern.validate {
                Some(ok) if !ok(m.as_str()) => {
                    pos = m.end().max(m.start() + 1);
                    while pos < text.len() && !text.is_char_boundary(pos) {
                        pos += 1;
                    }
                }
                _ => return Some((m.start(), m.end())),
            }
        }
        None
    }

    /// Returns the spans `(start, end, tag)` that the scan replaces.
    pub fn spans(&self, text: &str) -> Vec<(usize, usize, EntityTag)> {
        let mut out = Vec::new();
        let mut pos = 0;
        // next candidate match per pattern, recomputed lazily once consumed
        let mut next: Vec<Option<(usize, usize)>> = self
            .patterns
            .iter()
            .map(|p| Self::find_from(p, text, 0))
            .collect();
        loop {
            let mut best: Option<(usize, usize, usize)> = None;
            for (i, cand) in next.iter_mut().enumerate() {
                if let Some((s, _)) = *cand {
                    if s < pos {
                        *cand = Self::find_from(&self.patterns[i], text, pos);
                    }
                }
                if let Some((s, e)) = *cand {
                    let better = match best {
                        None => true,
                        Some((bs, be, _)) => s < bs || (s == bs && e > be),
                    };
                    if better {
                        best = Some((s, e, i));
                    }
                }
            }
            match best {
                None => break,
                Some((s, e, i)) => {
                    out.push((s, e, self.patterns[i].tag));
                    pos = e;
                }
            }
        }
        out
    }

    pub fn recognize(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        let mut last = 0;
        for (s, e, tag) in self.spans(text) {
            out.push_str(&text[last..s]);
            out.push_str(tag.as_str());
            last = e;
        }
        out.push_str(&text[last..]);
        out
    }
}
