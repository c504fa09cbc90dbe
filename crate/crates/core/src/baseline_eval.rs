//! Keyword baseline, precision/recall metrics and the evaluation protocols:
//! k-fold cross-validation, training-size sweeps and missing-type detection
//! on documents with related passages removed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{split_folds, Corpus, Document, PhraseLists, TypePhrases};
use crate::error::{Error, Result};
use crate::pipeline::{train_models, Config, TypeModel};
use crate::selector::{Mode, Selection};

/// Candidate sentences holding a related phrase and no unrelated phrase.
pub fn kw_select(doc: &Document, candidates: &[usize], phrases: &TypePhrases) -> Selection {
    let mut selected: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&i| phrases.accepts([doc.sentences[i].tokens.as_slice()]))
        .collect();
    selected.sort_unstable();
    Selection {
        missing_warning: selected.is_empty(),
        groups: selected.iter().map(|&i| vec![i]).collect(),
        selected,
    }
}

pub fn kw_baseline(model: &TypeModel, doc: &Document) -> Selection {
    kw_select(doc, &model.candidates(doc), &model.phrases)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn from_sets(selected: &BTreeSet<usize>, truth: &BTreeSet<usize>) -> Self {
        let tp = selected.intersection(truth).count();
        Self {
            tp,
            fp: selected.len() - tp,
            fn_: truth.len() - tp,
        }
    }

    pub fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    /// Precision is 1 when nothing was selected and nothing was expected,
    /// 0 when nothing was selected but something was expected; recall
    /// mirrors this.
    pub fn metrics(&self) -> Metrics {
        let ratio = |num: usize, den: usize, other_empty: bool| {
            if den == 0 {
                if other_empty {
                    1.0
                } else {
                    0.0
                }
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(self.tp, self.tp + self.fp, self.tp + self.fn_ == 0);
        let recall = ratio(self.tp, self.tp + self.fn_, self.tp + self.fp == 0);
        Metrics::new(precision, recall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
        }
    }

    /// Component-wise mean; F1 is averaged, not recomputed.
    pub fn mean(all: &[Metrics]) -> Metrics {
        let n = all.len() as f64;
        Metrics {
            precision: all.iter().map(|m| m.precision).sum::<f64>() / n,
            recall: all.iter().map(|m| m.recall).sum::<f64>() / n,
            f1: all.iter().map(|m| m.f1).sum::<f64>() / n,
        }
    }
}

pub fn prf(selected: &BTreeSet<usize>, truth: &BTreeSet<usize>) -> Metrics {
    Counts::from_sets(selected, truth).metrics()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "fiti")]
    Fiti,
    #[serde(rename = "fiti-ir")]
    FitiIr,
    #[serde(rename = "fiti-ml")]
    FitiMl,
    #[serde(rename = "kw")]
    Kw,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Fiti, Method::FitiIr, Method::FitiMl, Method::Kw];

    pub fn mode(self) -> Option<Mode> {
        match self {
            Method::Fiti => Some(Mode::Full),
            Method::FitiIr => Some(Mode::IrOnly),
            Method::FitiMl => Some(Mode::MlOnly),
            Method::Kw => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Fiti => "fiti",
            Method::FitiIr => "fiti-ir",
            Method::FitiMl => "fiti-ml",
            Method::Kw => "kw",
        }
    }

    /// Parses a comma-separated method list.
    pub fn parse_list(s: &str) -> std::result::Result<Vec<Method>, String> {
        let mut out: Vec<Method> = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m: Method = part.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err("no methods given".into());
        }
        Ok(out)
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method {s:?} (expected fiti, fiti-ir, fiti-ml or kw)"))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A corpus in which some documents lost every related sentence of the
/// listed types together with their neighbourhoods.
#[derive(Debug, Clone)]
pub struct SimulatedMissing {
    pub corpus: Corpus,
    /// Ids of the documents that were cut.
    pub gutted: BTreeSet<String>,
    /// `(doc_id, type_id)` pairs with no related sentence left.
    pub missing: BTreeSet<(String, String)>,
}

/// Removes, from `⌈fraction·|test|⌉` seeded-random documents, every related
/// sentence of each listed type plus `window` sentences on each side.
/// Sentence tokens are carried over; annotations are re-indexed.
pub fn simulate_missing(
    test: &Corpus,
    types: &[String],
    fraction: f64,
    window: usize,
    seed: u64,
) -> Result<SimulatedMissing> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "missing fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let n = ((fraction * test.len() as f64).ceil() as usize).min(test.len());
    let mut ids: Vec<&str> = test.documents.iter().map(|d| d.doc_id.as_str()).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let gutted: BTreeSet<String> = ids[..n].iter().map(|s| s.to_string()).collect();

    let docs = test
        .documents
        .iter()
        .map(|d| {
            if gutted.contains(&d.doc_id) {
                remove_types(d, types, window)
            } else {
                Ok(d.clone())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let corpus = Corpus::new(docs)?;
    let missing = corpus
        .documents
        .iter()
        .flat_map(|d| {
            types
                .iter()
                .filter(|t| d.related(t).is_empty())
                .map(|t| (d.doc_id.clone(), t.clone()))
        })
        .collect();
    Ok(SimulatedMissing {
        corpus,
        gutted,
        missing,
    })
}

fn remove_types(doc: &Document, types: &[String], window: usize) -> Result<Document> {
    let mut drop = vec![false; doc.len()];
    for t in types {
        for &i in doc.related(t) {
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(doc.len() - 1);
            drop[lo..=hi].iter_mut().for_each(|x| *x = true);
        }
    }
    let mut new_index = vec![usize::MAX; doc.len()];
    let mut kept = Vec::new();
    for (i, s) in doc.sentences.iter().enumerate() {
        if !drop[i] {
            new_index[i] = kept.len();
            kept.push(s);
        }
    }
    let annotations = doc
        .annotations
        .iter()
        .map(|(t, set)| {
            let moved = set
                .iter()
                .filter(|&&i| !drop[i])
                .map(|&i| new_index[i])
                .collect();
            (t.clone(), moved)
        })
        .collect();
    let mut out = Document::new(
        doc.doc_id.clone(),
        kept.iter().map(|s| s.raw.clone()).collect(),
        annotations,
    )?;
    for (s, old) in out.sentences.iter_mut().zip(&kept) {
        s.tokens = old.tokens.clone();
    }
    Ok(out)
}

/// Per-type detection counts: a warning on a missing type is a true
/// positive, a warning on a present type a false positive, silence on a
/// missing type a false negative.
pub fn missing_detection_metrics(
    warnings: &[(String, String, bool)],
    missing: &BTreeSet<(String, String)>,
) -> BTreeMap<String, Counts> {
    let mut out: BTreeMap<String, Counts> = BTreeMap::new();
    for (doc_id, type_id, warned) in warnings {
        let truly = missing.contains(&(doc_id.clone(), type_id.clone()));
        let c = out.entry(type_id.clone()).or_default();
        match (*warned, truly) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub folds: usize,
    pub pinned: BTreeSet<String>,
    pub methods: Vec<Method>,
    /// Types to evaluate; all types with phrase lists when `None`.
    pub types: Option<Vec<String>>,
    /// Training-set sizes to sweep; the full training side when `None`.
    pub train_sizes: Option<Vec<usize>>,
    /// Fraction of test documents to cut for missing-type detection.
    pub simulate_missing: Option<f64>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            folds: 5,
            pinned: BTreeSet::new(),
            methods: Method::ALL.to_vec(),
            types: None,
            train_sizes: None,
            simulate_missing: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Identify,
    Missing,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Identify => "identify",
            Task::Missing => "missing",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub task: Task,
    #[serde(rename = "type")]
    pub type_id: String,
    pub method: Method,
    /// Requested training size; `None` for the full training side.
    pub train_size: Option<usize>,
    /// Fold number; `None` for the aggregate over folds.
    pub fold: Option<usize>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: Config,
    pub folds: usize,
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn aggregate(
        &self,
        task: Task,
        type_id: &str,
        method: Method,
        train_size: Option<usize>,
    ) -> Option<Metrics> {
        self.rows
            .iter()
            .find(|r| {
                r.task == task
                    && r.type_id == type_id
                    && r.method == method
                    && r.train_size == train_size
                    && r.fold.is_none()
            })
            .map(|r| Metrics {
                precision: r.precision,
                recall: r.recall,
                f1: r.f1,
            })
    }

    pub fn type_ids(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.rows.iter().map(|r| &r.type_id).collect();
        set.into_iter().cloned().collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("type,method,precision,recall,f1,fold,task,train_size\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{},{},{}\n",
                r.type_id,
                r.method,
                r.precision,
                r.recall,
                r.f1,
                r.fold.map_or("aggregate".to_string(), |f| f.to_string()),
                r.task.as_str(),
                r.train_size.map_or("all".to_string(), |s| s.to_string()),
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

struct UnitResult {
    identify: BTreeMap<(String, Method), Counts>,
    missing: BTreeMap<(String, Method), Counts>,
}

/// Runs the protocol. The corpus must be preprocessed. Pinned documents
/// always train and never test. Identification counts are pooled per fold
/// and type, then metrics are averaged over folds; missing-detection counts
/// are pooled over all folds.
pub fn cross_validate(
    corpus: &Corpus,
    phrases: &PhraseLists,
    config: &Config,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    config.validate()?;
    let types: Vec<String> = match &opts.types {
        Some(t) => t.clone(),
        None => phrases
            .types
            .keys()
            .filter(|t| corpus.type_ids.contains(t))
            .cloned()
            .collect(),
    };
    if let Some(t) = types.iter().find(|t| phrases.get(t).is_none()) {
        return Err(Error::UnknownType(t.clone()));
    }
    let folds = split_folds(corpus, opts.folds, &opts.pinned, config.seed)?;
    let sizes: Vec<Option<usize>> = match &opts.train_sizes {
        Some(s) => s.iter().map(|&x| Some(x)).collect(),
        None => vec![None],
    };
    let units: Vec<(Option<usize>, usize)> = sizes
        .iter()
        .flat_map(|&s| (0..folds.len()).map(move |f| (s, f)))
        .collect();

    let results: Vec<UnitResult> = units
        .par_iter()
        .map(|&(size, f)| {
            let train = subsample(&folds[f].train, size, config.seed, f);
            let models = train_models(&train, &types, phrases, config)?;
            let identify = evaluate_docs(&models, &folds[f].test, &opts.methods);
            let missing = match opts.simulate_missing {
                None => BTreeMap::new(),
                Some(fraction) => {
                    let sim = simulate_missing(
                        &folds[f].test,
                        &types,
                        fraction,
                        config.window,
                        config.seed.wrapping_add(f as u64),
                    )?;
                    detect_missing(&models, &sim, &opts.methods)
                }
            };
            Ok(UnitResult { identify, missing })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for &size in &sizes {
        let unit_results: Vec<&UnitResult> = units
            .iter()
            .zip(&results)
            .filter(|((s, _), _)| *s == size)
            .map(|(_, r)| r)
            .collect();
        for t in &types {
            for &m in &opts.methods {
                let key = (t.clone(), m);
                let per_fold: Vec<Metrics> = unit_results
                    .iter()
                    .map(|r| r.identify.get(&key).copied().unwrap_or_default().metrics())
                    .collect();
                let row = |fold: Option<usize>, x: Metrics, task: Task| ReportRow {
                    task,
                    type_id: t.clone(),
                    method: m,
                    train_size: size,
                    fold,
                    precision: x.precision,
                    recall: x.recall,
                    f1: x.f1,
                };
                for (f, x) in per_fold.iter().enumerate() {
                    rows.push(row(Some(f), *x, Task::Identify));
                }
                rows.push(row(None, Metrics::mean(&per_fold), Task::Identify));

                if opts.simulate_missing.is_some() {
                    let mut pooled = Counts::default();
                    for (f, r) in unit_results.iter().enumerate() {
                        let c = r.missing.get(&key).copied().unwrap_or_default();
                        pooled.add(c);
                        rows.push(row(Some(f), c.metrics(), Task::Missing));
                    }
                    rows.push(row(None, pooled.metrics(), Task::Missing));
                }
            }
        }
    }
    Ok(EvalReport {
        config: *config,
        folds: folds.len(),
        rows,
    })
}

fn subsample(train: &Corpus, size: Option<usize>, seed: u64, fold: usize) -> Corpus {
    match size {
        Some(s) if s < train.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((s as u64) << 16) | fold as u64);
            let mut order: Vec<usize> = (0..train.len()).collect();
            order.shuffle(&mut rng);
            let keep: BTreeSet<usize> = order[..s].iter().copied().collect();
            let ids: BTreeSet<&str> = keep.iter().map(|&i| train.documents[i].doc_id.as_str()).collect();
            train.filter(|d| ids.contains(d.doc_id.as_str()))
        }
        _ => train.clone(),
    }
}

/// Selections of every method for every test document and model.
fn selections(model: &TypeModel, doc: &Document, methods: &[Method]) -> Vec<(Method, Selection)> {
    let scored = model.score(doc);
    methods
        .iter()
        .map(|&m| {
            let sel = match m.mode() {
                Some(mode) => model.select(doc, &scored, mode),
                None => {
                    let cands: Vec<usize> = scored.candidates.iter().map(|c| c.index).collect();
                    kw_select(doc, &cands, &model.phrases)
                }
            };
            (m, sel)
        })
        .collect()
}

fn evaluate_docs(
    models: &[TypeModel],
    test: &Corpus,
    methods: &[Method],
) -> BTreeMap<(String, Method), Counts> {
    let per_doc: Vec<Vec<(String, Method, Counts)>> = test
        .documents
        .par_iter()
        .map(|doc| {
            models
                .iter()
                .flat_map(|model| {
                    let truth = doc.related(&model.type_id);
                    selections(model, doc, methods).into_iter().map(move |(m, sel)| {
                        let chosen: BTreeSet<usize> = sel.selected.iter().copied().collect();
                        (model.type_id.clone(), m, Counts::from_sets(&chosen, truth))
                    })
                })
                .collect()
        })
        .collect();
    let mut out: BTreeMap<(String, Method), Counts> = BTreeMap::new();
    for (t, m, c) in per_doc.into_iter().flatten() {
        out.entry((t, m)).or_default().add(c);
    }
    out
}

fn detect_missing(
    models: &[TypeModel],
    sim: &SimulatedMissing,
    methods: &[Method],
) -> BTreeMap<(String, Method), Counts> {
    let per_doc: Vec<Vec<(String, String, Method, bool)>> = sim
        .corpus
        .documents
        .par_iter()
        .map(|doc| {
            models
                .iter()
                .flat_map(|model| {
                    selections(model, doc, methods).into_iter().map(|(m, sel)| {
                        (doc.doc_id.clone(), model.type_id.clone(), m, sel.missing_warning)
                    })
                })
                .collect()
        })
        .collect();
    let mut out = BTreeMap::new();
    for &m in methods {
        let warnings: Vec<(String, String, bool)> = per_doc
            .iter()
            .flatten()
            .filter(|x| x.2 == m)
            .map(|(d, t, _, w)| (d.clone(), t.clone(), *w))
            .collect();
        for (t, c) in missing_detection_metrics(&warnings, &sim.missing) {
            out.insert((t, m), c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::Preprocessor;

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn prf_counting() {
        let m = prf(&set(&[1, 2, 3]), &set(&[2, 3, 4]));
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn prf_degenerate() {
        let m = prf(&set(&[]), &set(&[1]));
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        let m = prf(&set(&[]), &set(&[]));
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        let m = prf(&set(&[4, 5]), &set(&[4, 5]));
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    }

    fn doc(sents: &[&str]) -> Document {
        let mut d = Document::new("d", sents.iter().map(|s| s.to_string()).collect(), Default::default()).unwrap();
        d.preprocess(Preprocessor::standard());
        d
    }

    #[test]
    fn kw_rule() {
        let pp = Preprocessor::standard();
        let tp = TypePhrases::from_raw(&["swing factor".into()], &["dilution adjustment".into()], pp);
        let d = doc(&[
            "The swing factor applies.",
            "The swing factor and the dilution adjustment apply.",
            "Another swing factor sentence.",
        ]);
        let s = kw_select(&d, &[0, 1], &tp);
        assert_eq!(s.selected, vec![0]);
        assert!(!s.missing_warning);
    }

    #[test]
    fn method_lists() {
        assert_eq!(Method::parse_list("fiti,kw").unwrap(), vec![Method::Fiti, Method::Kw]);
        assert!(Method::parse_list("fiti,bogus").is_err());
        assert!(Method::parse_list("").is_err());
    }

    fn annotated(id: &str, n: usize, related: &[usize]) -> Document {
        let mut d = Document::new(
            id,
            (0..n).map(|i| format!("Sentence {i}.")).collect(),
            BTreeMap::from([("T".to_string(), related.iter().copied().collect())]),
        )
        .unwrap();
        d.preprocess(Preprocessor::standard());
        d
    }

    #[test]
    fn gutting_removes_neighbourhoods() {
        let docs: Vec<Document> = (0..50).map(|i| annotated(&format!("d{i:02}"), 60, &[20, 21, 22])).collect();
        let c = Corpus::new(docs).unwrap();
        let sim = simulate_missing(&c, &["T".to_string()], 0.2, 10, 1).unwrap();
        assert_eq!(sim.gutted.len(), 10);
        for d in &sim.corpus.documents {
            if sim.gutted.contains(&d.doc_id) {
                assert_eq!(d.len(), 60 - 23);
                assert!(d.related("T").is_empty());
                assert!(sim.missing.contains(&(d.doc_id.clone(), "T".to_string())));
            } else {
                assert_eq!(d.len(), 60);
            }
        }
        let sim = simulate_missing(&c, &["T".to_string()], 0.2, 0, 1).unwrap();
        let g = sim.corpus.documents.iter().find(|d| sim.gutted.contains(&d.doc_id)).unwrap();
        assert_eq!(g.len(), 57);
        assert!(simulate_missing(&c, &["T".to_string()], 0.0, 0, 1).is_err());
    }

    #[test]
    fn reindexes_other_types() {
        let mut d = annotated("a", 10, &[2]);
        d.annotations.insert("U".to_string(), set(&[8]));
        let c = Corpus::new(vec![d]).unwrap();
        let sim = simulate_missing(&c, &["T".to_string()], 1.0, 1, 0).unwrap();
        let g = &sim.corpus.documents[0];
        assert_eq!(g.related("U"), &set(&[5]));
        assert_eq!(g.sentences[5].raw, "Sentence 8.");
        assert_eq!(g.sentences[5].index, 5);
        assert!(!g.sentences[5].tokens.is_empty());
    }

    #[test]
    fn detection_counts() {
        let missing = BTreeSet::from([("a".to_string(), "T".to_string())]);
        let w = vec![
            ("a".to_string(), "T".to_string(), true),
            ("b".to_string(), "T".to_string(), false),
        ];
        let m = missing_detection_metrics(&w, &missing)["T"].metrics();
        assert_eq!((m.precision, m.recall), (1.0, 1.0));
        let w = vec![
            ("a".to_string(), "T".to_string(), false),
            ("b".to_string(), "T".to_string(), false),
        ];
        assert_eq!(missing_detection_metrics(&w, &missing)["T"].metrics().recall, 0.0);
    }
}
