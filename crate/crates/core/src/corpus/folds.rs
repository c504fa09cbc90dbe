use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Fold {
    pub train: Corpus,
    pub test: Corpus,
}

/// K-fold split over the non-pinned documents. Pinned documents are always
/// in the training side. Test folds differ in size by at most one.
pub fn split_folds(
    corpus: &Corpus,
    k: usize,
    pinned: &BTreeSet<String>,
    seed: u64,
) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidSplit(format!("k must be at least 2, got {k}")));
    }
    if let Some(missing) = pinned.iter().find(|id| corpus.get(id).is_none()) {
        return Err(Error::InvalidSplit(format!(
            "pinned document {missing} is not in the corpus"
        )));
    }
    let mut free: Vec<&str> = corpus
        .documents
        .iter()
        .map(|d| d.doc_id.as_str())
        .filter(|id| !pinned.contains(*id))
        .collect();
    if free.len() < k {
        return Err(Error::InvalidSplit(format!(
            "{k} folds requested but only {} documents are not pinned",
            free.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    free.shuffle(&mut rng);

    let base = free.len() / k;
    let extra = free.len() % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        let test_ids: BTreeSet<&str> = free[start..start + size].iter().copied().collect();
        start += size;
        folds.push(Fold {
            train: corpus.filter(|d| !test_ids.contains(d.doc_id.as_str())),
            test: corpus.filter(|d| test_ids.contains(d.doc_id.as_str())),
        });
    }
    Ok(folds)
}
