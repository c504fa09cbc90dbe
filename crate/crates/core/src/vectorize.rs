//! Vocabulary, TF-IDF sparse vectors and cosine similarity.
//!
//! A term `w` occurring `f` times in a text gets weight `f * ln(N / n_w)`,
//! where `N` is the number of training sentences and `n_w` the number of
//! training sentences containing `w`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRecord", into = "VocabularyRecord")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    n_sentences: u32,
    ids: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRecord {
    n_sentences: u32,
    terms: Vec<String>,
    doc_freq: Vec<u32>,
}

impl From<VocabularyRecord> for Vocabulary {
    fn from(r: VocabularyRecord) -> Self {
        let ids = r
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            terms: r.terms,
            doc_freq: r.doc_freq,
            n_sentences: r.n_sentences,
            ids,
        }
    }
}

impl From<Vocabulary> for VocabularyRecord {
    fn from(v: Vocabulary) -> Self {
        VocabularyRecord {
            n_sentences: v.n_sentences,
            terms: v.terms,
            doc_freq: v.doc_freq,
        }
    }
}

impl Vocabulary {
    /// Builds the vocabulary from token lists, one per sentence. Term ids
    /// follow lexicographic order.
    pub fn from_sentences<'a>(sentences: impl IntoIterator<Item = &'a [String]>) -> Result<Self> {
        let mut counts: HashMap<&str, u32> = HashMap::new();
        let mut n = 0u32;
        let mut seen: Vec<&str> = Vec::new();
        for tokens in sentences {
            n += 1;
            seen.clear();
            seen.extend(tokens.iter().map(String::as_str));
            seen.sort_unstable();
            seen.dedup();
            for &t in &seen {
                *counts.entry(t).or_default() += 1;
            }
        }
        if n == 0 {
            return Err(Error::InvalidCorpus(
                "cannot build a vocabulary from zero sentences".into(),
            ));
        }
        let mut pairs: Vec<(&str, u32)> = counts.into_iter().collect();
        pairs.sort_unstable();
        Ok(VocabularyRecord {
            n_sentences: n,
            terms: pairs.iter().map(|(t, _)| t.to_string()).collect(),
            doc_freq: pairs.iter().map(|&(_, c)| c).collect(),
        }
        .into())
    }

    pub fn build(train: &Corpus) -> Result<Self> {
        Self::from_sentences(
            train
                .documents
                .iter()
                .flat_map(|d| d.sentences.iter().map(|s| s.tokens.as_slice())),
        )
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_sentences(&self) -> u32 {
        self.n_sentences
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    /// Number of training sentences containing the term.
    pub fn doc_freq(&self, id: u32) -> u32 {
        self.doc_freq[id as usize]
    }

    pub fn idf(&self, id: u32) -> f64 {
        (self.n_sentences as f64 / self.doc_freq(id) as f64).ln()
    }
}

pub fn build_vocabulary(train: &Corpus) -> Result<Vocabulary> {
    Vocabulary::build(train)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<(u32, f64)>", into = "Vec<(u32, f64)>")]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
    norm: f64,
}

impl From<Vec<(u32, f64)>> for SparseVector {
    fn from(entries: Vec<(u32, f64)>) -> Self {
        SparseVector::from_entries(entries)
    }
}

impl From<SparseVector> for Vec<(u32, f64)> {
    fn from(v: SparseVector) -> Self {
        v.entries
    }
}

impl SparseVector {
    /// Sorts by term id, sums repeated ids and drops zero weights.
    pub fn from_entries(mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_by_key(|&(id, _)| id);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (id, w) in entries {
            match merged.last_mut() {
                Some((last, acc)) if *last == id => *acc += w,
                _ => merged.push((id, w)),
            }
        }
        merged.retain(|&(_, w)| w != 0.0);
        let norm = merged.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
        Self {
            entries: merged,
            norm,
        }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn get(&self, id: u32) -> f64 {
        self.entries
            .binary_search_by_key(&id, |&(i, _)| i)
            .map_or(0.0, |p| self.entries[p].1)
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        let mut sum = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }

    pub fn scaled(&self, alpha: f64) -> SparseVector {
        SparseVector::from_entries(self.entries.iter().map(|&(i, w)| (i, w * alpha)).collect())
    }
}

/// TF-IDF vector of a token sequence. Unknown tokens and terms present in
/// every training sentence contribute nothing.
pub fn tfidf_vector<'a>(tokens: impl IntoIterator<Item = &'a String>, vocab: &Vocabulary) -> SparseVector {
    let mut counts: HashMap<u32, u32> = HashMap::new();
    for t in tokens {
        if let Some(id) = vocab.id(t) {
            *counts.entry(id).or_default() += 1;
        }
    }
    SparseVector::from_entries(
        counts
            .into_iter()
            .map(|(id, f)| (id, f as f64 * vocab.idf(id)))
            .collect(),
    )
}

/// Vector of sentence `index` together with `n_cxt` neighbours on each side.
pub fn context_vector(doc: &Document, index: usize, n_cxt: usize, vocab: &Vocabulary) -> SparseVector {
    let (i, w) = (index as isize, n_cxt as isize);
    tfidf_vector(doc.window_tokens(i - w, i + w), vocab)
}

/// Context vectors of every sentence of `doc`.
pub fn context_vectors(doc: &Document, n_cxt: usize, vocab: &Vocabulary) -> Vec<SparseVector> {
    (0..doc.len())
        .map(|i| context_vector(doc, i, n_cxt, vocab))
        .collect()
}

/// Vector of the concatenation of several sentences.
pub fn group_vector<'a>(sentences: impl IntoIterator<Item = &'a [String]>, vocab: &Vocabulary) -> SparseVector {
    tfidf_vector(sentences.into_iter().flatten(), vocab)
}

/// Cosine similarity in `[0, 1]`; zero when either vector is empty.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    (a.dot(b) / (a.norm * b.norm)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    fn vocab(sents: &[&[&str]]) -> Vocabulary {
        let owned: Vec<Vec<String>> = sents.iter().map(|x| s(x)).collect();
        Vocabulary::from_sentences(owned.iter().map(Vec::as_slice)).unwrap()
    }

    #[test]
    fn counts_containment() {
        let v = vocab(&[&["a", "b"], &["b", "c"]]);
        assert_eq!(v.len(), 3);
        assert_eq!(v.n_sentences(), 2);
        assert_eq!(v.doc_freq(v.id("a").unwrap()), 1);
        assert_eq!(v.doc_freq(v.id("b").unwrap()), 2);
        let v = vocab(&[&["b", "b"], &["c"]]);
        assert_eq!(v.doc_freq(v.id("b").unwrap()), 1);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(Vocabulary::from_sentences(std::iter::empty()).is_err());
    }

    #[test]
    fn tfidf_weights() {
        let v = vocab(&[&["w"], &["x"], &["x"], &["x", "y"]]);
        let vec = tfidf_vector(&s(&["w", "w", "zzz"]), &v);
        assert_eq!(vec.len(), 1);
        assert!((vec.get(v.id("w").unwrap()) - 2.0 * 4f64.ln()).abs() < 1e-12);
        assert!(tfidf_vector(&s(&["unseen"]), &v).is_empty());

        let all = vocab(&[&["a"], &["a", "b"]]);
        assert!(tfidf_vector(&s(&["a"]), &all).is_empty());
    }

    #[test]
    fn context_windows() {
        let mut doc = Document::new(
            "d",
            vec!["alpha".into(), "beta".into(), "gamma".into()],
            BTreeMap::new(),
        )
        .unwrap();
        doc.preprocess(crate::preprocess::Preprocessor::standard());
        let v = Vocabulary::from_sentences(doc.sentences.iter().map(|x| x.tokens.as_slice())).unwrap();
        assert_eq!(context_vector(&doc, 1, 1, &v).len(), 3);
        assert_eq!(context_vector(&doc, 0, 1, &v).len(), 2);
        assert_eq!(
            context_vector(&doc, 2, 0, &v),
            tfidf_vector(&doc.sentences[2].tokens, &v)
        );
    }

    #[test]
    fn group_vectors() {
        let v = vocab(&[&["a"], &["b"], &["c"]]);
        let one = s(&["a", "b"]);
        assert_eq!(group_vector([one.as_slice()], &v), tfidf_vector(&one, &v));
        let a = s(&["a"]);
        let g = group_vector([a.as_slice(), a.as_slice()], &v);
        assert!((g.get(v.id("a").unwrap()) - 2.0 * 3f64.ln()).abs() < 1e-12);
        assert!(group_vector(std::iter::empty(), &v).is_empty());
    }

    #[test]
    fn cosine_examples() {
        let a = SparseVector::from_entries(vec![(0, 1.0), (1, 1.0)]);
        let b = SparseVector::from_entries(vec![(0, 1.0), (2, 1.0)]);
        assert!((cosine(&a, &b) - 0.5).abs() < 1e-12);
        assert!((cosine(&a, &a) - 1.0).abs() < 1e-12);
        let c = SparseVector::from_entries(vec![(5, 2.0)]);
        assert_eq!(cosine(&a, &c), 0.0);
        assert_eq!(cosine(&a, &SparseVector::default()), 0.0);
    }

    #[test]
    fn serde_round_trip() {
        let v = vocab(&[&["a", "b"], &["b", "c"]]);
        let text = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
        let sv = SparseVector::from_entries(vec![(3, 0.1), (1, 2.0 / 3.0)]);
        let back: SparseVector = serde_json::from_str(&serde_json::to_string(&sv).unwrap()).unwrap();
        assert_eq!(back, sv);
    }

    fn sparse() -> impl Strategy<Value = SparseVector> {
        proptest::collection::vec((0u32..20, 0.0f64..5.0), 0..10).prop_map(SparseVector::from_entries)
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_bounded(a in sparse(), b in sparse()) {
            let x = cosine(&a, &b);
            prop_assert!((x - cosine(&b, &a)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&x));
        }

        #[test]
        fn cosine_scale_invariant(a in sparse(), b in sparse(), alpha in 0.01f64..100.0) {
            prop_assert!((cosine(&a.scaled(alpha), &b) - cosine(&a, &b)).abs() < 1e-9);
        }

        #[test]
        fn entries_sorted_and_nonzero(a in sparse()) {
            prop_assert!(a.entries().windows(2).all(|w| w[0].0 < w[1].0));
            prop_assert!(a.entries().iter().all(|&(_, w)| w != 0.0));
        }
    }
}
