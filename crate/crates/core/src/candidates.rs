//! Candidate retrieval: the sentences of a document whose context is most
//! similar to a type's group vector.

use crate::corpus::Document;
use crate::vectorize::{context_vectors, cosine, SparseVector, Vocabulary};

/// Ranks precomputed context vectors by cosine to `gvec` and keeps the
/// best `n_c`. Ties go to the lower sentence index.
pub fn rank_candidates(context: &[SparseVector], gvec: &SparseVector, n_c: usize) -> Vec<usize> {
    let mut scored: Vec<(usize, f64)> = context
        .iter()
        .enumerate()
        .map(|(i, v)| (i, cosine(gvec, v)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(n_c);
    scored.into_iter().map(|(i, _)| i).collect()
}

pub fn select_candidates(
    doc: &Document,
    gvec: &SparseVector,
    vocab: &Vocabulary,
    n_c: usize,
    n_cxt: usize,
) -> Vec<usize> {
    rank_candidates(&context_vectors(doc, n_cxt, vocab), gvec, n_c)
}
