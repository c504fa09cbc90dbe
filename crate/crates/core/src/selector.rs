//! Final selection of related sentences from scored candidates.
//!
//! 1. Candidates whose context vectors are more similar than `theta` form
//!    duplicate classes that are always selected or left out together.
//! 2. Any candidate with an IR score above `theta` is selected.
//! 3. The remaining candidates are ranked by the mode's fused score and
//!    taken until the selection holds at least `n_r` sentences.
//! 4. Selected sentences at most two positions apart are chained into groups.
//! 5. A group survives if its sentences, plus one sentence on each side,
//!    contain a related phrase and no unrelated phrase.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, TypePhrases};
use crate::error::{Error, Result};
use crate::ir_analysis::IrScores;
use crate::vectorize::{cosine, SparseVector};

/// Largest index gap between neighbouring sentences of one group.
pub const GROUP_GAP: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateScores {
    pub index: usize,
    pub group: f64,
    pub avg_s: f64,
    pub max_s: f64,
    pub word: f64,
    pub prob: f64,
}

impl CandidateScores {
    pub fn new(index: usize, ir: IrScores, prob: f64) -> Self {
        Self {
            index,
            group: ir.group,
            avg_s: ir.avg_s,
            max_s: ir.max_s,
            word: ir.word,
            prob,
        }
    }

    fn ir(&self) -> [f64; 4] {
        [self.group, self.avg_s, self.max_s, self.word]
    }

    pub fn fused(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Full => (self.ir().iter().sum::<f64>() + self.prob) / 5.0,
            Mode::IrOnly => self.ir().iter().sum::<f64>() / 4.0,
            Mode::MlOnly => self.prob,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Full,
    IrOnly,
    MlOnly,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Full, Mode::IrOnly, Mode::MlOnly];
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(Mode::Full),
            "ir" | "ir_only" => Ok(Mode::IrOnly),
            "ml" | "ml_only" => Ok(Mode::MlOnly),
            other => Err(format!("unknown mode {other:?} (expected full, ir or ml)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::IrOnly => "ir",
            Mode::MlOnly => "ml",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub selected: Vec<usize>,
    pub groups: Vec<Vec<usize>>,
    pub missing_warning: bool,
}

impl Selection {
    fn from_groups(groups: Vec<Vec<usize>>) -> Self {
        let selected: Vec<usize> = groups.iter().flatten().copied().collect();
        Selection {
            missing_warning: selected.is_empty(),
            selected,
            groups,
        }
    }
}

/// Partition of candidate positions into duplicate classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateClasses {
    /// Class id of each candidate position.
    pub class_of: Vec<usize>,
    /// Candidate positions of each class, ascending.
    pub members: Vec<Vec<usize>>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Joins candidates whose context vectors have cosine above `theta`,
/// closing transitively. Positions refer to `context`.
pub fn merge_duplicates(context: &[&SparseVector], theta: f64) -> DuplicateClasses {
    let n = context.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for a in 0..n {
        for b in a + 1..n {
            if cosine(context[a], context[b]) > theta {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut class_of = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for x in 0..n {
        let root = find(&mut parent, x);
        if class_of[root] == usize::MAX {
            class_of[root] = members.len();
            members.push(Vec::new());
        }
        class_of[x] = class_of[root];
        members[class_of[x]].push(x);
    }
    DuplicateClasses { class_of, members }
}

/// Chains sorted indices into runs whose neighbours are at most
/// [`GROUP_GAP`] apart.
pub fn group_indices(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in sorted {
        match groups.last_mut() {
            Some(g) if i - g[g.len() - 1] <= GROUP_GAP => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Whether a group passes the phrase filter.
pub fn group_passes(doc: &Document, group: &[usize], phrases: &TypePhrases) -> bool {
    let lo = group[0].saturating_sub(1);
    let hi = (group[group.len() - 1] + 1).min(doc.len().saturating_sub(1));
    phrases.accepts(doc.sentences[lo..=hi].iter().map(|s| s.tokens.as_slice()))
}

/// Indices chosen by the threshold and ranking stages, before grouping.
pub fn preselect(
    candidates: &[CandidateScores],
    classes: &DuplicateClasses,
    n_r: usize,
    theta: f64,
    mode: Mode,
) -> BTreeSet<usize> {
    let mut taken = vec![false; classes.members.len()];
    let mut selected = BTreeSet::new();
    let mut take = |class: usize, selected: &mut BTreeSet<usize>| {
        if !taken[class] {
            taken[class] = true;
            selected.extend(classes.members[class].iter().map(|&p| candidates[p].index));
        }
    };

    if mode != Mode::MlOnly {
        for (p, c) in candidates.iter().enumerate() {
            if c.ir().iter().any(|&x| x > theta) {
                take(classes.class_of[p], &mut selected);
            }
        }
    }

    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        candidates[b]
            .fused(mode)
            .total_cmp(&candidates[a].fused(mode))
            .then(candidates[a].index.cmp(&candidates[b].index))
    });
    for p in order {
        if selected.len() >= n_r {
            break;
        }
        take(classes.class_of[p], &mut selected);
    }
    selected
}

/// Runs every stage. `context[k]` is the context vector of `candidates[k]`.
pub fn select(
    doc: &Document,
    candidates: &[CandidateScores],
    context: &[&SparseVector],
    n_r: usize,
    phrases: &TypePhrases,
    theta: f64,
    mode: Mode,
) -> Selection {
    if candidates.is_empty() {
        return Selection::from_groups(Vec::new());
    }
    let classes = merge_duplicates(context, theta);
    select_with_classes(doc, candidates, &classes, n_r, phrases, theta, mode)
}

/// [`select`] with precomputed duplicate classes, so that several modes can
/// share one merge.
pub fn select_with_classes(
    doc: &Document,
    candidates: &[CandidateScores],
    classes: &DuplicateClasses,
    n_r: usize,
    phrases: &TypePhrases,
    theta: f64,
    mode: Mode,
) -> Selection {
    let chosen: Vec<usize> = preselect(candidates, classes, n_r, theta, mode)
        .into_iter()
        .collect();
    let groups = group_indices(&chosen)
        .into_iter()
        .filter(|g| group_passes(doc, g, phrases))
        .collect();
    Selection::from_groups(groups)
}

/// Ceiling of the mean related-sentence count over documents that have any.
pub fn compute_n_r(train: &Corpus, type_id: &str) -> Result<usize> {
    let counts: Vec<usize> = train
        .documents
        .iter()
        .map(|d| d.related(type_id).len())
        .filter(|&c| c > 0)
        .collect();
    if counts.is_empty() {
        return Err(Error::training(
            type_id,
            "selection budget",
            "no document has related sentences",
        ));
    }
    Ok(counts.iter().sum::<usize>().div_ceil(counts.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::Preprocessor;
    use std::collections::BTreeMap;

    fn cand(index: usize, v: f64) -> CandidateScores {
        CandidateScores { index, group: v, avg_s: v, max_s: v, word: v, prob: v }
    }

    fn doc(sents: &[&str]) -> Document {
        let mut d = Document::new("d", sents.iter().map(|s| s.to_string()).collect(), BTreeMap::new()).unwrap();
        d.preprocess(Preprocessor::standard());
        d
    }

    fn phrases(r: &[&str], u: &[&str]) -> TypePhrases {
        let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        TypePhrases::from_raw(&own(r), &own(u), Preprocessor::standard())
    }

    fn unit(i: u32) -> SparseVector {
        SparseVector::from_entries(vec![(i, 1.0)])
    }

    #[test]
    fn identical_contexts_merge() {
        let v = unit(0);
        let c = merge_duplicates(&[&v, &v], 0.9);
        assert_eq!(c.members, vec![vec![0, 1]]);
    }

    #[test]
    fn dissimilar_stay_apart() {
        let (a, b) = (unit(0), unit(1));
        assert_eq!(merge_duplicates(&[&a, &b], 0.9).members.len(), 2);
    }

    #[test]
    fn transitive_merge() {
        // a~b and b~c above 0.6, a~c below
        let a = SparseVector::from_entries(vec![(0, 1.0), (1, 1.0)]);
        let b = SparseVector::from_entries(vec![(0, 1.0), (1, 1.0), (2, 1.0)]);
        let c = SparseVector::from_entries(vec![(1, 1.0), (2, 1.0), (3, 0.5)]);
        assert!(cosine(&a, &b) > 0.6 && cosine(&b, &c) > 0.6 && cosine(&a, &c) < 0.6);
        assert_eq!(merge_duplicates(&[&a, &b, &c], 0.6).members, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn grouping_gap_two() {
        assert_eq!(group_indices(&[10, 12, 30]), vec![vec![10, 12], vec![30]]);
        assert_eq!(group_indices(&[1, 4]), vec![vec![1], vec![4]]);
        assert_eq!(group_indices(&[1, 3, 5]), vec![vec![1, 3, 5]]);
    }

    #[test]
    fn threshold_and_filter_pass() {
        let d = doc(&["Intro text.", "The swing factor applies.", "Other text."]);
        let mut c = cand(1, 0.1);
        c.max_s = 0.95;
        let ctx = unit(0);
        let s = select(&d, &[c], &[&ctx], 1, &phrases(&["swing factor"], &["dilution adjustment"]), 0.9, Mode::Full);
        assert_eq!(s.selected, vec![1]);
        assert!(!s.missing_warning);
    }

    #[test]
    fn unrelated_phrase_drops_group() {
        let d = doc(&["Intro.", "A dilution adjustment applies to the swing factor.", "End."]);
        let ctx = unit(0);
        let s = select(&d, &[cand(1, 0.95)], &[&ctx], 1, &phrases(&["swing factor"], &["dilution adjustment"]), 0.9, Mode::Full);
        assert!(s.selected.is_empty());
        assert!(s.missing_warning);
    }

    #[test]
    fn empty_candidates_warn() {
        let d = doc(&["Only."]);
        let s = select(&d, &[], &[], 3, &phrases(&["x"], &[]), 0.9, Mode::Full);
        assert!(s.missing_warning && s.selected.is_empty());
    }

    #[test]
    fn ml_mode_skips_threshold() {
        let ctx: Vec<SparseVector> = (0..3).map(unit).collect();
        let refs: Vec<&SparseVector> = ctx.iter().collect();
        let mut cs = vec![cand(0, 0.1), cand(1, 0.1), cand(2, 0.1)];
        cs[0].max_s = 0.99;
        cs[2].prob = 0.9;
        let classes = merge_duplicates(&refs, 0.9);
        assert_eq!(preselect(&cs, &classes, 1, 0.9, Mode::MlOnly), BTreeSet::from([2]));
        assert_eq!(preselect(&cs, &classes, 1, 0.9, Mode::Full), BTreeSet::from([0]));
    }

    #[test]
    fn n_r_is_ceiling_mean() {
        let mk = |id: &str, n: usize| {
            Document::new(
                id,
                vec!["x.".to_string(); 10],
                BTreeMap::from([("T".to_string(), (0..n).collect())]),
            )
            .unwrap()
        };
        let c = Corpus::new(vec![mk("a", 3), mk("b", 4), mk("c", 0)]).unwrap();
        assert_eq!(compute_n_r(&c, "T").unwrap(), 4);
        let c = Corpus::new(vec![mk("a", 5)]).unwrap();
        assert_eq!(compute_n_r(&c, "T").unwrap(), 5);
        let c = Corpus::new(vec![mk("a", 0)]).unwrap();
        assert!(compute_n_r(&c, "T").is_err());
    }

    #[test]
    fn mode_names() {
        for m in Mode::ALL {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
        assert!("bogus".parse::<Mode>().is_err());
    }
}
