//! Seeded synthetic corpus generator.
//!
//! Each document is a run of boilerplate filler sentences into which one
//! section per information type is placed. A section is a contiguous block of
//! related sentences, expanded from the type's templates, padded by filler on
//! both sides. The confusion rate controls two kinds of distractors:
//!
//! * mentions: unannotated sentences that name a related phrase, placed a few
//!   sentences away from the block;
//! * near-duplicates: a related template whose key phrase is swapped for one
//!   of the type's confuser phrases, placed elsewhere in the document.
//!
//! Templates use `{...}` slots: `{key}` is the type's key phrase, `{a|b|c}`
//! picks one alternative, and the named slots `{num}`, `{pct}`, `{date}`,
//! `{amount}`, `{url}`, `{email}`, `{person}`, `{fund}`, `{days}` produce
//! entity-bearing values. `{slot:NAME}` draws from a custom pool declared in
//! the spec's `slots` map.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{contains_phrase, Corpus, Document, PhraseLists};
use crate::error::{Error, Result};
use crate::preprocess::Preprocessor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeTemplates {
    pub type_id: String,
    #[serde(default)]
    pub name: String,
    pub related_min: usize,
    pub related_max: usize,
    /// Phrases that express the type; they become the `rlist`.
    pub key_phrases: Vec<String>,
    /// Look-alike phrases that do not express the type; they become the `ulist`.
    #[serde(default)]
    pub confusers: Vec<String>,
    /// Related-sentence templates; each contains `{key}`.
    pub templates: Vec<String>,
    /// Unannotated sentences that name a key phrase; each contains `{key}`.
    #[serde(default)]
    pub mentions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub documents: usize,
    pub sentences_min: usize,
    pub sentences_max: usize,
    /// Per related sentence, the probability of spawning one mention and,
    /// independently, one near-duplicate.
    pub confusion_rate: f64,
    /// Fraction of a type's template pool that one document draws from.
    #[serde(default = "default_style_fraction")]
    pub style_fraction: f64,
    /// Probability of an unannotated filler sentence between two related ones.
    #[serde(default)]
    pub interleave_rate: f64,
    pub filler: Vec<String>,
    #[serde(default)]
    pub slots: BTreeMap<String, Vec<String>>,
    pub types: Vec<TypeTemplates>,
}

fn default_style_fraction() -> f64 {
    1.0
}

/// Filler sentences on each side of a related block.
const SECTION_PAD: usize = 10;
/// Mentions sit at least this many sentences away from the block.
const MENTION_MIN_DISTANCE: usize = 3;
/// Filler sentences between any two placed units.
const MIN_GAP: usize = 3;

const FIRST_NAMES: &[&str] = &[
    "John", "Marie", "Paul", "Anne", "Luc", "Sofia", "Peter", "Claire", "Marc", "Laura",
];
const LAST_NAMES: &[&str] = &[
    "Schmit", "Weber", "Muller", "Hoffmann", "Klein", "Wagner", "Thill", "Reuter", "Faber",
];
const HONORIFICS: &[&str] = &["Mr.", "Mrs.", "Ms.", "Dr."];
const MONTHS: &[&str] = &[
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];
const FUND_WORDS: &[&str] = &[
    "Global", "Euro", "Balanced", "Emerging", "Opportunities", "Income", "Growth", "Strategic",
    "Sustainable", "Dynamic", "Alpha", "Horizon",
];
const CURRENCIES: &[&str] = &["EUR", "USD", "CHF", "GBP"];

impl GeneratorSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidGeneratorSpec(e.to_string()))?;
        Ok(spec)
    }

    /// The template pool shipped with the crate (five prospectus-style types).
    pub fn builtin() -> Self {
        Self::parse(include_str!("../../data/generator/default.json"))
            .expect("embedded generator spec is valid")
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidGeneratorSpec(m));
        if self.documents == 0 {
            return bad("documents must be at least 1".into());
        }
        if self.sentences_min == 0 || self.sentences_min > self.sentences_max {
            return bad(format!(
                "sentence range {}..{} is empty",
                self.sentences_min, self.sentences_max
            ));
        }
        for (name, v) in [
            ("confusion_rate", self.confusion_rate),
            ("style_fraction", self.style_fraction),
            ("interleave_rate", self.interleave_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.filler.is_empty() {
            return bad("filler pool is empty".into());
        }
        if self.types.is_empty() {
            return bad("no information types declared".into());
        }
        let mut seen = BTreeSet::new();
        for t in &self.types {
            if !seen.insert(&t.type_id) {
                return bad(format!("type {} declared twice", t.type_id));
            }
            if t.templates.is_empty() {
                return bad(format!("type {}: empty template pool", t.type_id));
            }
            if t.key_phrases.is_empty() {
                return bad(format!("type {}: no key phrases", t.type_id));
            }
            if t.related_min == 0 || t.related_min > t.related_max {
                return bad(format!(
                    "type {}: related range {}..{} is invalid",
                    t.type_id, t.related_min, t.related_max
                ));
            }
            if let Some(tpl) = t.templates.iter().chain(&t.mentions).find(|s| !s.contains("{key}")) {
                return bad(format!("type {}: template without {{key}}: {tpl:?}", t.type_id));
            }
        }
        Ok(())
    }

    fn phrase_lists(&self, pp: &Preprocessor) -> Result<PhraseLists> {
        let raw = self
            .types
            .iter()
            .map(|t| (t.type_id.clone(), (t.key_phrases.clone(), t.confusers.clone())))
            .collect();
        PhraseLists::from_raw(&raw, pp).map_err(|e| Error::InvalidGeneratorSpec(e.to_string()))
    }
}

struct Expander<'a> {
    slots: &'a BTreeMap<String, Vec<String>>,
}

impl Expander<'_> {
    fn expand(&self, template: &str, key: &str, rng: &mut impl Rng) -> Result<String> {
        let mut out = String::with_capacity(template.len() + 16);
        let mut rest = template;
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let close = rest[open..].find('}').ok_or_else(|| {
                Error::InvalidGeneratorSpec(format!("unclosed slot in template {template:?}"))
            })? + open;
            let slot = &rest[open + 1..close];
            out.push_str(&self.fill(slot, key, template, rng)?);
            rest = &rest[close + 1..];
        }
        out.push_str(rest);
        Ok(out)
    }

    fn fill(&self, slot: &str, key: &str, template: &str, rng: &mut impl Rng) -> Result<String> {
        if slot.contains('|') {
            let alts: Vec<&str> = slot.split('|').collect();
            return Ok(alts.choose(rng).expect("non-empty").to_string());
        }
        let pick = |rng: &mut _, pool: &[&str]| pool.choose(rng).expect("non-empty").to_string();
        Ok(match slot {
            "key" => key.to_string(),
            "num" => rng.random_range(2..=60).to_string(),
            "days" => rng.random_range(1..=10).to_string(),
            "pct" => {
                if rng.random_bool(0.5) {
                    format!("{}%", rng.random_range(1..=5))
                } else {
                    format!("{}.{}%", rng.random_range(0..=3), rng.random_range(1..=9))
                }
            }
            "date" => format!(
                "{} {} {}",
                rng.random_range(1..=28),
                pick(rng, MONTHS),
                rng.random_range(2005..=2023)
            ),
            "amount" => format!(
                "{} {},000",
                pick(rng, CURRENCIES),
                rng.random_range(1..=500)
            ),
            "url" => format!("www.{}-funds.lu", pick(rng, FUND_WORDS).to_lowercase()),
            "email" => format!("info@{}-funds.lu", pick(rng, FUND_WORDS).to_lowercase()),
            "person" => format!(
                "{} {} {}",
                pick(rng, HONORIFICS),
                pick(rng, FIRST_NAMES),
                pick(rng, LAST_NAMES)
            ),
            "fund" => format!("{} {}", pick(rng, FUND_WORDS), pick(rng, FUND_WORDS)),
            other => match other.strip_prefix("slot:").and_then(|n| self.slots.get(n)) {
                Some(pool) if !pool.is_empty() => pool.choose(rng).expect("non-empty").clone(),
                _ => {
                    return Err(Error::InvalidGeneratorSpec(format!(
                        "unknown slot {{{other}}} in template {template:?}"
                    )))
                }
            },
        })
    }
}

/// One generated sentence and the type it is annotated for, if any.
#[derive(Debug, Clone)]
struct Line {
    text: String,
    related_to: Option<usize>,
}

struct DocBuilder<'a> {
    spec: &'a GeneratorSpec,
    expander: Expander<'a>,
    phrases: &'a PhraseLists,
    pp: &'a Preprocessor,
}

impl DocBuilder<'_> {
    /// A filler sentence free of every listed phrase.
    fn filler(&self, rng: &mut ChaCha8Rng) -> Result<Line> {
        for _ in 0..64 {
            let tpl = self.spec.filler.choose(rng).expect("validated non-empty");
            let text = self.expander.expand(tpl, "", rng)?;
            let tokens = self.pp.preprocess_sentence(&text);
            let clean = self
                .phrases
                .types
                .values()
                .all(|tp| {
                    !tp.rlist
                        .iter()
                        .chain(&tp.ulist)
                        .any(|p| contains_phrase(&tokens, &p.tokens))
                });
            if clean {
                return Ok(Line {
                    text,
                    related_to: None,
                });
            }
        }
        Err(Error::InvalidGeneratorSpec(
            "filler templates keep producing listed phrases".into(),
        ))
    }

    fn fillers(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Line>> {
        (0..n).map(|_| self.filler(rng)).collect()
    }

    fn section(&self, ti: usize, rng: &mut ChaCha8Rng) -> Result<(Vec<Line>, Vec<Line>)> {
        let t = &self.spec.types[ti];
        let count = rng.random_range(t.related_min..=t.related_max);

        let style_size = ((t.templates.len() as f64 * self.spec.style_fraction).ceil() as usize)
            .clamp(1, t.templates.len());
        let mut style: Vec<&String> = t.templates.iter().collect();
        style.shuffle(rng);
        style.truncate(style_size);

        let mut block = Vec::new();
        for j in 0..count {
            if j > 0 && rng.random_bool(self.spec.interleave_rate) {
                block.push(self.filler(rng)?);
            }
            let tpl = style[j % style.len()];
            let key = t.key_phrases.choose(rng).expect("validated non-empty");
            block.push(Line {
                text: self.expander.expand(tpl, key, rng)?,
                related_to: Some(ti),
            });
        }

        let mut pre = self.fillers(SECTION_PAD, rng)?;
        let mut post = self.fillers(SECTION_PAD, rng)?;
        if !t.mentions.is_empty() {
            // slots at distance MENTION_MIN_DISTANCE..=SECTION_PAD on both sides
            let mut slots: Vec<(bool, usize)> = (MENTION_MIN_DISTANCE..=SECTION_PAD)
                .flat_map(|d| [(true, d), (false, d)])
                .collect();
            slots.shuffle(rng);
            let wanted = (0..count)
                .filter(|_| rng.random_bool(self.spec.confusion_rate))
                .count()
                .min(slots.len());
            for &(before, d) in &slots[..wanted] {
                let tpl = t.mentions.choose(rng).expect("non-empty");
                let key = t.key_phrases.choose(rng).expect("validated non-empty");
                let line = Line {
                    text: self.expander.expand(tpl, key, rng)?,
                    related_to: None,
                };
                if before {
                    pre[SECTION_PAD - d] = line;
                } else {
                    post[d - 1] = line;
                }
            }
        }

        let mut near_dups = Vec::new();
        if !t.confusers.is_empty() {
            for _ in 0..count {
                if rng.random_bool(self.spec.confusion_rate) {
                    let tpl = t.templates.choose(rng).expect("validated non-empty");
                    let confuser = t.confusers.choose(rng).expect("non-empty");
                    near_dups.push(Line {
                        text: self.expander.expand(tpl, confuser, rng)?,
                        related_to: None,
                    });
                }
            }
        }

        let mut section = pre;
        section.extend(block);
        section.extend(post);
        Ok((section, near_dups))
    }

    fn document(&self, doc_id: String, rng: &mut ChaCha8Rng) -> Result<Document> {
        let target = rng.random_range(self.spec.sentences_min..=self.spec.sentences_max);
        let mut units: Vec<Vec<Line>> = Vec::new();
        for ti in 0..self.spec.types.len() {
            let (section, dups) = self.section(ti, rng)?;
            units.push(section);
            units.extend(dups.into_iter().map(|d| vec![d]));
        }
        units.shuffle(rng);

        let fixed: usize = units.iter().map(Vec::len).sum();
        let gaps = units.len() + 1;
        let free = target.saturating_sub(fixed).max(MIN_GAP * gaps);
        // distribute the spare filler over the gaps, MIN_GAP each at least
        let spare = free - MIN_GAP * gaps;
        let mut cuts: Vec<usize> = (0..gaps - 1).map(|_| rng.random_range(0..=spare)).collect();
        cuts.sort_unstable();
        let mut sizes = Vec::with_capacity(gaps);
        let mut prev = 0;
        for c in cuts.iter().chain(std::iter::once(&spare)) {
            sizes.push(MIN_GAP + c - prev);
            prev = *c;
        }

        let mut lines = Vec::with_capacity(fixed + free);
        for (i, unit) in units.into_iter().enumerate() {
            lines.extend(self.fillers(sizes[i], rng)?);
            lines.extend(unit);
        }
        lines.extend(self.fillers(sizes[gaps - 1], rng)?);

        let mut annotations: BTreeMap<String, BTreeSet<usize>> = self
            .spec
            .types
            .iter()
            .map(|t| (t.type_id.clone(), BTreeSet::new()))
            .collect();
        for (i, line) in lines.iter().enumerate() {
            if let Some(ti) = line.related_to {
                let type_id = &self.spec.types[ti].type_id;
                annotations.get_mut(type_id).expect("seeded").insert(i);
            }
        }
        Document::new(doc_id, lines.into_iter().map(|l| l.text).collect(), annotations)
    }
}

/// Generates a corpus and its phrase lists. Output depends only on `spec`
/// and `seed`. Documents are returned unpreprocessed.
pub fn generate_synthetic(spec: &GeneratorSpec, seed: u64) -> Result<(Corpus, PhraseLists)> {
    spec.validate()?;
    let pp = Preprocessor::standard();
    let phrases = spec.phrase_lists(pp)?;
    let builder = DocBuilder {
        spec,
        expander: Expander { slots: &spec.slots },
        phrases: &phrases,
        pp,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = spec.documents.to_string().len().max(3);
    let mut docs = Vec::with_capacity(spec.documents);
    for i in 0..spec.documents {
        let doc = builder.document(format!("syn-{i:0width$}"), &mut rng)?;
        check_annotation_soundness(&doc, &phrases, pp)?;
        docs.push(doc);
    }
    Ok((Corpus::new(docs)?, phrases))
}

fn check_annotation_soundness(doc: &Document, phrases: &PhraseLists, pp: &Preprocessor) -> Result<()> {
    for (type_id, set) in &doc.annotations {
        let tp = &phrases.types[type_id];
        for &i in set {
            let tokens = pp.preprocess_sentence(&doc.sentences[i].raw);
            if !tp.rlist.iter().any(|p| contains_phrase(&tokens, &p.tokens)) {
                return Err(Error::InvalidGeneratorSpec(format!(
                    "type {type_id}: generated related sentence lacks a key phrase after preprocessing: {:?}",
                    doc.sentences[i].raw
                )));
            }
        }
    }
    Ok(())
}
