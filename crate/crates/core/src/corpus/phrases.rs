//! Related (`rlist`) and unrelated (`ulist`) phrase lists per information type.
//!
//! Phrase files map each type id to its two lists of raw phrases:
//!
//! ```text
//! {"T3": {"rlist": ["swing factor"], "ulist": ["dilution adjustment"]}}
//! ```
//!
//! Phrases are preprocessed with the same pipeline as sentences and matched as
//! contiguous token subsequences.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::Preprocessor;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phrase {
    pub text: String,
    pub tokens: Vec<String>,
}

impl Phrase {
    pub fn new(text: &str, pp: &Preprocessor) -> Self {
        Self {
            text: text.to_string(),
            tokens: pp.preprocess_phrase(text),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TypePhrases {
    pub rlist: Vec<Phrase>,
    pub ulist: Vec<Phrase>,
}

impl TypePhrases {
    pub fn from_raw(rlist: &[String], ulist: &[String], pp: &Preprocessor) -> Self {
        Self {
            rlist: rlist.iter().map(|p| Phrase::new(p, pp)).collect(),
            ulist: ulist.iter().map(|p| Phrase::new(p, pp)).collect(),
        }
    }

    pub fn any_related<'a>(&self, tokens: impl IntoIterator<Item = &'a [String]> + Clone) -> bool {
        self.rlist
            .iter()
            .any(|p| tokens.clone().into_iter().any(|t| contains_phrase(t, &p.tokens)))
    }

    pub fn any_unrelated<'a>(&self, tokens: impl IntoIterator<Item = &'a [String]> + Clone) -> bool {
        self.ulist
            .iter()
            .any(|p| tokens.clone().into_iter().any(|t| contains_phrase(t, &p.tokens)))
    }

    /// The keyword rule: at least one related phrase and no unrelated phrase
    /// in any of the given token runs.
    pub fn accepts<'a>(&self, tokens: impl IntoIterator<Item = &'a [String]> + Clone) -> bool {
        self.any_related(tokens.clone()) && !self.any_unrelated(tokens)
    }

    fn validate(&self, type_id: &str) -> Result<()> {
        for p in self.rlist.iter().chain(&self.ulist) {
            if p.tokens.is_empty() {
                return Err(Error::InvalidPhrases(format!(
                    "type {type_id}: phrase {:?} is empty after preprocessing",
                    p.text
                )));
            }
        }
        if let Some(p) = self
            .rlist
            .iter()
            .find(|r| self.ulist.iter().any(|u| u.tokens == r.tokens))
        {
            return Err(Error::InvalidPhrases(format!(
                "type {type_id}: phrase {:?} appears in both rlist and ulist",
                p.text
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhraseLists {
    pub types: BTreeMap<String, TypePhrases>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLists {
    #[serde(default)]
    rlist: Vec<String>,
    #[serde(default)]
    ulist: Vec<String>,
}

impl PhraseLists {
    pub fn get(&self, type_id: &str) -> Option<&TypePhrases> {
        self.types.get(type_id)
    }

    /// Builds phrase lists from raw strings, preprocessing every phrase.
    pub fn from_raw(
        raw: &BTreeMap<String, (Vec<String>, Vec<String>)>,
        pp: &Preprocessor,
    ) -> Result<Self> {
        let mut types = BTreeMap::new();
        for (type_id, (r, u)) in raw {
            let tp = TypePhrases::from_raw(r, u, pp);
            tp.validate(type_id)?;
            types.insert(type_id.clone(), tp);
        }
        Ok(Self { types })
    }

    pub fn parse(text: &str, pp: &Preprocessor) -> Result<Self> {
        let raw: BTreeMap<String, RawLists> = serde_json::from_str(text)
            .map_err(|e| Error::InvalidPhrases(e.to_string()))?;
        let raw = raw
            .into_iter()
            .map(|(k, v)| (k, (v.rlist, v.ulist)))
            .collect();
        Self::from_raw(&raw, pp)
    }

    pub fn to_json(&self) -> String {
        let raw: BTreeMap<&String, RawLists> = self
            .types
            .iter()
            .map(|(k, v)| {
                (
                    k,
                    RawLists {
                        rlist: v.rlist.iter().map(|p| p.text.clone()).collect(),
                        ulist: v.ulist.iter().map(|p| p.text.clone()).collect(),
                    },
                )
            })
            .collect();
        serde_json::to_string_pretty(&raw).expect("phrase lists serialize")
    }
}

pub fn load_phrase_lists(path: impl AsRef<Path>, pp: &Preprocessor) -> Result<PhraseLists> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PhraseLists::parse(&text, pp).map_err(|e| match e {
        Error::InvalidPhrases(m) => Error::InvalidPhrases(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Whether `phrase` occurs in `tokens` as a contiguous run.
pub fn contains_phrase(tokens: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && tokens.windows(phrase.len()).any(|w| w == phrase)
}
