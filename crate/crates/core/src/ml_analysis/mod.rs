//! Training-instance sampling, feature extraction and the random forest
//! that estimates how likely a sentence is to be related to a type.
//!
//! Features, all computed over the sentence plus `n_cxt` neighbours on each
//! side unless noted:
//!
//! | index  | meaning                                                    |
//! |--------|------------------------------------------------------------|
//! | 0..10  | presence of the 10 most important terms                    |
//! | 10..20 | presence of the 10 most frequent related phrases           |
//! | 20     | token count of the bare sentence                           |
//! | 21..25 | counts of `NUMBER`, `DATE`, `PERSON`, `URL` tags           |

mod forest;

pub use forest::{predict_prob, train_forest, Forest, ForestError, ForestParams, Node};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{contains_phrase, Corpus, Document, TypePhrases};
use crate::error::{Error, Result};
use crate::ir_analysis::ImportanceTable;
use crate::preprocess::EntityTag;
use crate::vectorize::{context_vectors, cosine, SparseVector, Vocabulary};

pub const N_FEATURES: usize = 25;
const TOP_TERMS: usize = 10;
const TOP_PHRASES: usize = 10;

pub type FeatureVector = [f64; N_FEATURES];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SentenceRef {
    pub doc: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingInstances {
    pub positives: Vec<SentenceRef>,
    pub negatives: Vec<SentenceRef>,
}

/// Positives are all related sentences. Negatives are as many unrelated
/// sentences as there are positives, taken by decreasing context similarity
/// to the group vector, plus every unrelated neighbour of a related
/// sentence. `contexts[d]` holds the context vectors of document `d`.
pub fn build_training_instances_with(
    train: &Corpus,
    type_id: &str,
    gvec: &SparseVector,
    contexts: &[Vec<SparseVector>],
) -> Result<TrainingInstances> {
    let mut positives = Vec::new();
    let mut unrelated: Vec<(f64, SentenceRef)> = Vec::new();
    let mut neighbours = BTreeSet::new();
    for (d, doc) in train.documents.iter().enumerate() {
        let related = doc.related(type_id);
        for (i, ctx) in contexts[d].iter().enumerate() {
            let r = SentenceRef { doc: d, index: i };
            if related.contains(&i) {
                positives.push(r);
                for j in [i.wrapping_sub(1), i + 1] {
                    if j < doc.len() && !related.contains(&j) {
                        neighbours.insert(SentenceRef { doc: d, index: j });
                    }
                }
            } else {
                unrelated.push((cosine(gvec, ctx), r));
            }
        }
    }
    if positives.is_empty() {
        return Err(Error::training(
            type_id,
            "training instances",
            "no related sentences in the training corpus",
        ));
    }
    unrelated.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut negatives: BTreeSet<SentenceRef> = unrelated
        .iter()
        .take(positives.len())
        .map(|&(_, r)| r)
        .collect();
    negatives.extend(neighbours);
    Ok(TrainingInstances {
        positives,
        negatives: negatives.into_iter().collect(),
    })
}

pub fn build_training_instances(
    train: &Corpus,
    type_id: &str,
    gvec: &SparseVector,
    vocab: &Vocabulary,
    n_cxt: usize,
) -> Result<TrainingInstances> {
    let contexts: Vec<Vec<SparseVector>> = train
        .documents
        .iter()
        .map(|d| context_vectors(d, n_cxt, vocab))
        .collect();
    build_training_instances_with(train, type_id, gvec, &contexts)
}

/// The learned vocabulary of the feature families: which terms and phrases
/// the presence features look for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureExtractor {
    pub top_terms: Vec<String>,
    pub top_phrases: Vec<Vec<String>>,
    pub n_cxt: usize,
}

impl FeatureExtractor {
    /// Picks the most important terms (ties in lexicographic order) and the
    /// related phrases occurring most often in the related training
    /// sentences (ties in list order).
    pub fn fit(
        train: &Corpus,
        type_id: &str,
        table: &ImportanceTable,
        phrases: &TypePhrases,
        n_cxt: usize,
    ) -> Self {
        let top_terms = table
            .ranked_terms()
            .into_iter()
            .take(TOP_TERMS)
            .map(|(t, _)| t.to_string())
            .collect();
        let mut counted: Vec<(usize, usize, &Vec<String>)> = phrases
            .rlist
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let n = train
                    .documents
                    .iter()
                    .flat_map(|d| d.related(type_id).iter().map(move |&i| &d.sentences[i].tokens))
                    .map(|toks| {
                        toks.windows(p.tokens.len())
                            .filter(|w| *w == p.tokens.as_slice())
                            .count()
                    })
                    .sum();
                (n, k, &p.tokens)
            })
            .collect();
        counted.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut top_phrases: Vec<Vec<String>> = Vec::new();
        for (_, _, p) in counted {
            if !top_phrases.contains(p) {
                top_phrases.push(p.clone());
            }
        }
        top_phrases.truncate(TOP_PHRASES);
        Self {
            top_terms,
            top_phrases,
            n_cxt,
        }
    }

    pub fn extract(&self, doc: &Document, index: usize) -> FeatureVector {
        let (i, w) = (index as isize, self.n_cxt as isize);
        let window: Vec<String> = doc.window_tokens(i - w, i + w).cloned().collect();
        let mut fv = [0.0; N_FEATURES];
        for (k, term) in self.top_terms.iter().enumerate() {
            fv[k] = f64::from(u8::from(window.contains(term)));
        }
        for (k, phrase) in self.top_phrases.iter().enumerate() {
            fv[TOP_TERMS + k] = f64::from(u8::from(contains_phrase(&window, phrase)));
        }
        fv[20] = doc.sentences[index].tokens.len() as f64;
        for (k, tag) in EntityTag::ALL.iter().enumerate() {
            fv[21 + k] = window.iter().filter(|t| t.as_str() == tag.as_str()).count() as f64;
        }
        fv
    }
}

/// Features of sentence `index` of `doc`.
pub fn extract_features(
    doc: &Document,
    index: usize,
    table: &ImportanceTable,
    phrases: &TypePhrases,
    train: &Corpus,
    type_id: &str,
    n_cxt: usize,
) -> FeatureVector {
    FeatureExtractor::fit(train, type_id, table, phrases, n_cxt).extract(doc, index)
}
