//! Similarity of candidate sentences to the related training sentences at
//! three granularities: the whole related group, individual related
//! sentences, and individual words weighted by importance.
//!
//! The importance of a term `w` for a type is the product of
//!
//! * its average relative frequency over the related sentences,
//! * its specificity: related sentences containing `w` over all labeled
//!   sentences containing `w`,
//! * its universality: documents whose related sentences contain `w` over
//!   documents having related sentences.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::vectorize::{cosine, SparseVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceTable {
    /// Importance of every term that occurs in a related sentence.
    pub imp: BTreeMap<String, f64>,
    /// Sum of `imp` over the distinct related-set terms.
    pub normalizer: f64,
}

impl ImportanceTable {
    pub fn get(&self, term: &str) -> f64 {
        self.imp.get(term).copied().unwrap_or(0.0)
    }

    /// Terms by decreasing importance, ties in lexicographic order.
    pub fn ranked_terms(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self
            .imp
            .iter()
            .filter(|(_, &x)| x > 0.0)
            .map(|(t, &x)| (t.as_str(), x))
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }
}

pub fn word_importance_table(train: &Corpus, type_id: &str) -> Result<ImportanceTable> {
    let mut freq_sum: BTreeMap<&str, f64> = BTreeMap::new();
    let mut related_containing: BTreeMap<&str, usize> = BTreeMap::new();
    let mut docs_containing: BTreeMap<&str, usize> = BTreeMap::new();
    let mut n_related = 0usize;
    let mut n_docs = 0usize;

    for doc in &train.documents {
        let related = doc.related(type_id);
        if related.is_empty() {
            continue;
        }
        n_docs += 1;
        let mut doc_terms: BTreeSet<&str> = BTreeSet::new();
        for &i in related {
            let tokens = &doc.sentences[i].tokens;
            n_related += 1;
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for t in tokens {
                *counts.entry(t.as_str()).or_default() += 1;
            }
            for (t, c) in counts {
                *freq_sum.entry(t).or_default() += c as f64 / tokens.len() as f64;
                *related_containing.entry(t).or_default() += 1;
                doc_terms.insert(t);
            }
        }
        for t in doc_terms {
            *docs_containing.entry(t).or_default() += 1;
        }
    }
    if n_related == 0 {
        return Err(Error::training(
            type_id,
            "word importance",
            "no related sentences in the training corpus",
        ));
    }

    let mut labeled_containing: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &train.documents {
        for s in &doc.sentences {
            let distinct: BTreeSet<&str> = s.tokens.iter().map(String::as_str).collect();
            for t in distinct {
                if freq_sum.contains_key(t) {
                    *labeled_containing.entry(t).or_default() += 1;
                }
            }
        }
    }

    let imp: BTreeMap<String, f64> = freq_sum
        .iter()
        .map(|(&t, &fs)| {
            let freq_avg = fs / n_related as f64;
            let spec = related_containing[t] as f64 / labeled_containing[t] as f64;
            let univ = docs_containing[t] as f64 / n_docs as f64;
            (t.to_string(), freq_avg * spec * univ)
        })
        .collect();
    let normalizer = imp.values().sum();
    Ok(ImportanceTable { imp, normalizer })
}

/// Summed importance of the sentence's tokens (with multiplicity) relative
/// to the related set, capped at 1.
pub fn word_importance_similarity(tokens: &[String], table: &ImportanceTable) -> f64 {
    if table.normalizer <= 0.0 {
        return 0.0;
    }
    let num: f64 = tokens.iter().map(|t| table.get(t)).sum();
    (num / table.normalizer).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrScores {
    pub group: f64,
    pub avg_s: f64,
    pub max_s: f64,
    pub word: f64,
}

/// The four IR scores of one sentence given its context vector and tokens.
pub fn score_sentence_ir(
    context: &SparseVector,
    tokens: &[String],
    related_context: &[SparseVector],
    gvec: &SparseVector,
    table: &ImportanceTable,
) -> IrScores {
    let mut sum = 0.0;
    let mut max = 0.0f64;
    if !context.is_empty() {
        let mut dense: Vec<f64> = Vec::new();
        let top = context.entries().last().map_or(0, |&(i, _)| i as usize + 1);
        dense.resize(top, 0.0);
        for &(i, w) in context.entries() {
            dense[i as usize] = w;
        }
        for r in related_context {
            if r.is_empty() {
                continue;
            }
            let dot: f64 = r
                .entries()
                .iter()
                .take_while(|&&(i, _)| (i as usize) < top)
                .map(|&(i, w)| w * dense[i as usize])
                .sum();
            let c = (dot / (r.norm() * context.norm())).clamp(0.0, 1.0);
            sum += c;
            max = max.max(c);
        }
    }
    let avg = if related_context.is_empty() {
        0.0
    } else {
        (sum / related_context.len() as f64).min(max)
    };
    IrScores {
        group: cosine(gvec, context),
        avg_s: avg,
        max_s: max,
        word: word_importance_similarity(tokens, table),
    }
}

/// IR scores for each candidate index of `doc`, given the document's
/// context vectors.
pub fn score_candidates_ir(
    doc_context: &[SparseVector],
    doc_tokens: &[&[String]],
    candidates: &[usize],
    related_context: &[SparseVector],
    gvec: &SparseVector,
    table: &ImportanceTable,
) -> Result<Vec<IrScores>> {
    if related_context.is_empty() {
        return Err(Error::InvalidCorpus(
            "IR scoring needs at least one related sentence".into(),
        ));
    }
    Ok(candidates
        .iter()
        .map(|&i| score_sentence_ir(&doc_context[i], doc_tokens[i], related_context, gvec, table))
        .collect())
}
