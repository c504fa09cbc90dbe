//! Documents, annotations, phrase lists and corpora.
//!
//! Corpus files are JSON Lines, one document per line:
//!
//! ```text
//! {"doc_id":"d1","sentences":["First.","Second."],"annotations":{"T1":[1]}}
//! ```
//!
//! Annotation indices are 0-based sentence positions. A sentence may be
//! annotated for several types.

mod folds;
mod generator;
mod phrases;

pub use folds::{split_folds, Fold};
pub use generator::{generate_synthetic, GeneratorSpec, TypeTemplates};
pub use phrases::{contains_phrase, load_phrase_lists, Phrase, PhraseLists, TypePhrases};

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::Preprocessor;

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub index: usize,
    pub raw: String,
    /// Preprocessed tokens; empty until [`Document::preprocess`] runs.
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub sentences: Vec<Sentence>,
    pub annotations: BTreeMap<String, BTreeSet<usize>>,
}

static EMPTY: BTreeSet<usize> = BTreeSet::new();

impl Document {
    /// Builds a document, checking that every annotation index is in range.
    pub fn new(
        doc_id: impl Into<String>,
        sentences: Vec<String>,
        annotations: BTreeMap<String, BTreeSet<usize>>,
    ) -> Result<Self> {
        let doc_id = doc_id.into();
        let len = sentences.len();
        for (type_id, set) in &annotations {
            if let Some(&index) = set.iter().find(|&&i| i >= len) {
                return Err(Error::AnnotationOutOfRange {
                    doc_id,
                    type_id: type_id.clone(),
                    index,
                    len,
                });
            }
        }
        let sentences = sentences
            .into_iter()
            .enumerate()
            .map(|(index, raw)| Sentence {
                index,
                raw,
                tokens: Vec::new(),
            })
            .collect();
        Ok(Self {
            doc_id,
            sentences,
            annotations,
        })
    }

    /// An unannotated document from plain text, split into sentences.
    pub fn from_text(doc_id: impl Into<String>, text: &str, pp: &Preprocessor) -> Self {
        let mut doc = Self::new(doc_id, pp.split_sentences(text), BTreeMap::new())
            .expect("no annotations to validate");
        doc.preprocess(pp);
        doc
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Sentences annotated as related to `type_id` (empty when none).
    pub fn related(&self, type_id: &str) -> &BTreeSet<usize> {
        self.annotations.get(type_id).unwrap_or(&EMPTY)
    }

    pub fn preprocess(&mut self, pp: &Preprocessor) {
        for s in &mut self.sentences {
            s.tokens = pp.preprocess_sentence(&s.raw);
        }
    }

    pub fn is_preprocessed(&self) -> bool {
        self.sentences.iter().any(|s| !s.tokens.is_empty())
    }

    /// Tokens of sentences `[lo, hi]`, clipped to the document, concatenated.
    pub fn window_tokens(&self, lo: isize, hi: isize) -> impl Iterator<Item = &String> {
        let lo = lo.max(0) as usize;
        let hi = (hi + 1).clamp(0, self.len() as isize) as usize;
        self.sentences[lo.min(hi)..hi].iter().flat_map(|s| s.tokens.iter())
    }

    /// A copy without annotations, for inference.
    pub fn without_annotations(&self) -> Document {
        Document {
            annotations: BTreeMap::new(),
            ..self.clone()
        }
    }

    fn to_record(&self) -> DocumentRecord {
        DocumentRecord {
            doc_id: self.doc_id.clone(),
            sentences: self.sentences.iter().map(|s| s.raw.clone()).collect(),
            annotations: self
                .annotations
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().copied().collect()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    /// Sorted union of annotation type ids.
    pub type_ids: Vec<String>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::new();
        for d in &documents {
            if !seen.insert(d.doc_id.as_str()) {
                return Err(Error::DuplicateDocument(d.doc_id.clone()));
            }
        }
        let type_ids: BTreeSet<String> = documents
            .iter()
            .flat_map(|d| d.annotations.keys().cloned())
            .collect();
        Ok(Self {
            documents,
            type_ids: type_ids.into_iter().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(Document::len).sum()
    }

    pub fn preprocess(&mut self, pp: &Preprocessor) {
        for d in &mut self.documents {
            d.preprocess(pp);
        }
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    /// Sub-corpus of the documents whose ids satisfy `keep`, in corpus order.
    pub fn filter(&self, mut keep: impl FnMut(&Document) -> bool) -> Corpus {
        let docs = self.documents.iter().filter(|d| keep(d)).cloned().collect();
        Corpus::new(docs).expect("subset of a valid corpus is valid")
    }

    /// Total number of sentences related to `type_id`.
    pub fn related_count(&self, type_id: &str) -> usize {
        self.documents.iter().map(|d| d.related(type_id).len()).sum()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentRecord {
    doc_id: String,
    sentences: Vec<String>,
    #[serde(default)]
    annotations: BTreeMap<String, Vec<usize>>,
}

fn corpus_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::InvalidCorpus(format!(
                "{}: directory contains no .jsonl corpus files",
                path.display()
            )));
        }
        Ok(files)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

/// Parses JSON Lines corpus text; `path` is used for error messages only.
pub fn parse_corpus_records(text: &str, path: &Path) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: DocumentRecord = serde_json::from_str(line).map_err(|e| Error::Record {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if let Some(pos) = record.sentences.iter().position(|s| s.trim().is_empty()) {
            return Err(Error::Record {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("field `sentences`: sentence {pos} is empty"),
            });
        }
        let annotations = record
            .annotations
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().collect()))
            .collect();
        docs.push(Document::new(record.doc_id, record.sentences, annotations)?);
    }
    Ok(docs)
}

/// Loads a corpus file, or every `.jsonl` file of a directory in name order.
/// Sentences are returned raw; call [`Corpus::preprocess`] before analysis.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let mut docs = Vec::new();
    for file in corpus_files(path)? {
        let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        docs.extend(parse_corpus_records(&text, &file)?);
    }
    Corpus::new(docs)
}

pub fn write_corpus(corpus: &Corpus, mut out: impl Write) -> std::io::Result<()> {
    for d in &corpus.documents {
        let line = serde_json::to_string(&d.to_record()).map_err(std::io::Error::other)?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_corpus(corpus, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}
