#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use proptest::test_runner::{Config as RunnerConfig, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reqtrace::corpus::{Corpus, Document, TypePhrases};
use reqtrace::ir_analysis::IrScores;
use reqtrace::preprocess::Preprocessor;
use reqtrace::selector::{
    group_indices, merge_duplicates, preselect, select_with_classes, CandidateScores, Mode,
};
use reqtrace::vectorize::SparseVector;

// ---------------------------------------------------------------- fixtures

/// A small random corpus over a six-word alphabet with one type `T`, and
/// at least one related sentence.
pub fn random_fixture(rng: &mut ChaCha8Rng) -> Corpus {
    const WORDS: [&str; 6] = ["alpha", "beta", "gamma", "delta", "eps", "zeta"];
    let n_docs = rng.random_range(1..=4);
    let mut docs = Vec::new();
    for d in 0..n_docs {
        let n = rng.random_range(1..=8);
        let mut related = BTreeSet::new();
        for i in 0..n {
            if rng.random_bool(0.4) {
                related.insert(i);
            }
        }
        if d == 0 && related.is_empty() {
            related.insert(0);
        }
        let mut doc = Document::new(
            format!("f{d}"),
            (0..n).map(|i| format!("s{i}")).collect(),
            BTreeMap::from([("T".to_string(), related)]),
        )
        .unwrap();
        for s in &mut doc.sentences {
            let len = rng.random_range(0..=6);
            s.tokens = (0..len)
                .map(|_| WORDS[rng.random_range(0..WORDS.len())].to_string())
                .collect();
        }
        docs.push(doc);
    }
    Corpus::new(docs).unwrap()
}

pub fn random_tokens(rng: &mut ChaCha8Rng) -> Vec<String> {
    const WORDS: [&str; 7] = ["alpha", "beta", "gamma", "delta", "eps", "zeta", "unseen"];
    let len = rng.random_range(0..=8);
    (0..len)
        .map(|_| WORDS[rng.random_range(0..WORDS.len())].to_string())
        .collect()
}

// ---------------------------------------------------------------- oracles

pub fn all_sentences(c: &Corpus) -> Vec<&Vec<String>> {
    c.documents
        .iter()
        .flat_map(|d| d.sentences.iter().map(|s| &s.tokens))
        .collect()
}

/// Sorted distinct terms of the corpus.
pub fn dense_terms(c: &Corpus) -> Vec<String> {
    let mut t: Vec<String> = all_sentences(c).into_iter().flatten().cloned().collect();
    t.sort();
    t.dedup();
    t
}

/// Dense TF-IDF of `tokens`: raw count times ln(N / sentences containing).
pub fn dense_tfidf(c: &Corpus, terms: &[String], tokens: &[String]) -> Vec<f64> {
    let sents = all_sentences(c);
    let n = sents.len() as f64;
    terms
        .iter()
        .map(|t| {
            let tf = tokens.iter().filter(|x| *x == t).count() as f64;
            let df = sents.iter().filter(|s| s.contains(t)).count() as f64;
            if tf == 0.0 {
                0.0
            } else {
                tf * (n / df).ln()
            }
        })
        .collect()
}

pub fn dense_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn to_dense(v: &SparseVector, vocab: &reqtrace::vectorize::Vocabulary, terms: &[String]) -> Vec<f64> {
    terms
        .iter()
        .map(|t| vocab.id(t).map_or(0.0, |id| v.get(id)))
        .collect()
}

/// Importance of every term occurring in a related sentence of `T`.
pub fn dense_importance(c: &Corpus) -> BTreeMap<String, f64> {
    let related: Vec<(usize, &Vec<String>)> = c
        .documents
        .iter()
        .enumerate()
        .flat_map(|(d, doc)| doc.related("T").iter().map(move |&i| (d, &doc.sentences[i].tokens)))
        .collect();
    let docs_with_related: BTreeSet<usize> = related.iter().map(|(d, _)| *d).collect();
    let sents = all_sentences(c);
    let mut out = BTreeMap::new();
    for (_, toks) in &related {
        for w in toks.iter() {
            if out.contains_key(w) {
                continue;
            }
            let mut freq = 0.0;
            for (_, s) in &related {
                let k = s.iter().filter(|x| *x == w).count();
                if k > 0 {
                    freq += k as f64 / s.len() as f64;
                }
            }
            freq /= related.len() as f64;
            let in_related = related.iter().filter(|(_, s)| s.contains(w)).count() as f64;
            let in_all = sents.iter().filter(|s| s.contains(w)).count() as f64;
            let docs: BTreeSet<usize> = related
                .iter()
                .filter(|(_, s)| s.contains(w))
                .map(|(d, _)| *d)
                .collect();
            let univ = docs.len() as f64 / docs_with_related.len() as f64;
            out.insert(w.clone(), freq * (in_related / in_all) * univ);
        }
    }
    out
}

// ---------------------------------------------------------------- selector

pub const RLIST: &str = "swing factor";
pub const ULIST: &str = "dilution adjustment";

pub fn type_phrases() -> TypePhrases {
    TypePhrases::from_raw(&[RLIST.to_string()], &[ULIST.to_string()], Preprocessor::standard())
}

#[derive(Debug, Clone)]
pub struct SelectorCase {
    pub doc: Document,
    pub candidates: Vec<CandidateScores>,
    pub context: Vec<SparseVector>,
    pub n_r: usize,
    pub theta: f64,
    pub mode: Mode,
}

fn sentence_strategy() -> impl Strategy<Value = Vec<String>> {
    let word = prop_oneof![
        4 => Just("fund"), 4 => Just("share"), 2 => Just("swing"), 2 => Just("factor"),
        1 => Just("dilut"), 1 => Just("adjust"), 3 => Just("report"),
    ];
    prop::collection::vec(word.prop_map(String::from), 0..6)
}

pub fn selector_case() -> impl Strategy<Value = SelectorCase> {
    (
        prop::collection::vec(sentence_strategy(), 1..40),
        any::<u64>(),
        1usize..10,
        0.5f64..=1.0,
        prop_oneof![Just(Mode::Full), Just(Mode::IrOnly), Just(Mode::MlOnly)],
    )
        .prop_map(|(sents, seed, n_r, theta, mode)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut doc = Document::new(
                "p",
                (0..sents.len()).map(|i| format!("s{i}")).collect(),
                BTreeMap::new(),
            )
            .unwrap();
            for (s, toks) in doc.sentences.iter_mut().zip(sents) {
                s.tokens = toks;
            }
            let mut indices: Vec<usize> = (0..doc.len()).filter(|_| rng.random_bool(0.6)).collect();
            if indices.is_empty() {
                indices.push(0);
            }
            let mut context: Vec<SparseVector> = Vec::new();
            let candidates = indices
                .iter()
                .map(|&index| {
                    let v = if !context.is_empty() && rng.random_bool(0.3) {
                        // near or exact copy of an earlier candidate
                        let base = context[rng.random_range(0..context.len())].clone();
                        base.scaled(rng.random_range(0.5..2.0))
                    } else {
                        let n = rng.random_range(1..5);
                        SparseVector::from_entries(
                            (0..n).map(|_| (rng.random_range(0..8u32), rng.random_range(0.1..3.0))).collect(),
                        )
                    };
                    context.push(v);
                    let mut s = || {
                        if rng.random_bool(0.1) {
                            rng.random_range(0.9..=1.0)
                        } else {
                            rng.random_range(0.0..0.9)
                        }
                    };
                    let ir = IrScores { group: s(), avg_s: s(), max_s: s(), word: s() };
                    CandidateScores::new(index, ir, rng.random_range(0.0..=1.0))
                })
                .collect();
            SelectorCase { doc, candidates, context, n_r, theta, mode }
        })
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg.into()))
    }
}

/// Every duplicate class is preselected whole or not at all.
pub fn check_class_atomicity(c: &SelectorCase) -> Result<(), TestCaseError> {
    let refs: Vec<&SparseVector> = c.context.iter().collect();
    let classes = merge_duplicates(&refs, c.theta);
    let chosen = preselect(&c.candidates, &classes, c.n_r, c.theta, c.mode);
    for members in &classes.members {
        let inside = members.iter().filter(|&&p| chosen.contains(&c.candidates[p].index)).count();
        ensure(inside == 0 || inside == members.len(), format!("class {members:?} split"))?;
    }
    // members of one class are pairwise linked by a chain above theta
    for (p, q) in (0..refs.len()).flat_map(|p| (p + 1..refs.len()).map(move |q| (p, q))) {
        if reqtrace::vectorize::cosine(refs[p], refs[q]) > c.theta {
            ensure(classes.class_of[p] == classes.class_of[q], "similar pair in different classes")?;
        }
    }
    Ok(())
}

/// Groups chain indices at most two apart and split at larger gaps.
pub fn check_grouping(indices: &BTreeSet<usize>) -> Result<(), TestCaseError> {
    let sorted: Vec<usize> = indices.iter().copied().collect();
    let groups = group_indices(&sorted);
    let flat: Vec<usize> = groups.iter().flatten().copied().collect();
    ensure(flat == sorted, "grouping reorders or drops indices")?;
    for g in &groups {
        ensure(g.windows(2).all(|w| w[1] - w[0] <= 2), format!("gap > 2 inside {g:?}"))?;
    }
    for w in groups.windows(2) {
        ensure(w[1][0] - w[0][w[0].len() - 1] > 2, "adjacent groups within gap 2")?;
    }
    Ok(())
}

fn span_has(doc: &Document, g: &[usize], phrase: &str) -> bool {
    let toks = Preprocessor::standard().preprocess_phrase(phrase);
    let lo = g[0].saturating_sub(1);
    let hi = (g[g.len() - 1] + 1).min(doc.len() - 1);
    doc.sentences[lo..=hi]
        .iter()
        .any(|s| s.tokens.windows(toks.len()).any(|w| w == toks.as_slice()))
}

/// Kept groups carry a related phrase and no unrelated phrase in their
/// padded span; dropped groups fail that test.
pub fn check_filter_soundness(c: &SelectorCase) -> Result<(), TestCaseError> {
    let refs: Vec<&SparseVector> = c.context.iter().collect();
    let classes = merge_duplicates(&refs, c.theta);
    let tp = type_phrases();
    let sel = select_with_classes(&c.doc, &c.candidates, &classes, c.n_r, &tp, c.theta, c.mode);
    let chosen: Vec<usize> = preselect(&c.candidates, &classes, c.n_r, c.theta, c.mode)
        .into_iter()
        .collect();
    for g in group_indices(&chosen) {
        let ok = span_has(&c.doc, &g, RLIST) && !span_has(&c.doc, &g, ULIST);
        ensure(ok == sel.groups.contains(&g), format!("group {g:?} kept={} expected {ok}", !ok))?;
    }
    ensure(sel.missing_warning == sel.selected.is_empty(), "warning flag disagrees")?;
    let flat: Vec<usize> = sel.groups.iter().flatten().copied().collect();
    ensure(flat == sel.selected, "selected is not the union of groups")?;
    Ok(())
}

/// The ranking stage stops as soon as the budget is met: dropping the
/// last class it took would fall short of `n_r`.
pub fn check_budget(c: &SelectorCase) -> Result<(), TestCaseError> {
    let refs: Vec<&SparseVector> = c.context.iter().collect();
    let classes = merge_duplicates(&refs, c.theta);
    let chosen = preselect(&c.candidates, &classes, c.n_r, c.theta, c.mode);
    let all: BTreeSet<usize> = c.candidates.iter().map(|x| x.index).collect();
    ensure(chosen.is_subset(&all), "selection outside candidates")?;
    ensure(chosen.len() >= c.n_r.min(all.len()), "budget not met")?;

    let thresholded: BTreeSet<usize> = if c.mode == Mode::MlOnly {
        BTreeSet::new()
    } else {
        c.candidates
            .iter()
            .enumerate()
            .filter(|(_, x)| [x.group, x.avg_s, x.max_s, x.word].iter().any(|&s| s > c.theta))
            .flat_map(|(p, _)| classes.members[classes.class_of[p]].iter().map(|&q| c.candidates[q].index))
            .collect()
    };
    ensure(thresholded.is_subset(&chosen), "threshold stage ignored")?;
    if chosen.len() > thresholded.len() {
        let extra: Vec<&Vec<usize>> = classes
            .members
            .iter()
            .filter(|m| {
                let idx: BTreeSet<usize> = m.iter().map(|&p| c.candidates[p].index).collect();
                idx.is_subset(&chosen) && idx.is_disjoint(&thresholded)
            })
            .collect();
        let minimal = extra.iter().any(|m| chosen.len() - m.len() < c.n_r);
        ensure(minimal, "ranking stage overshot the budget")?;
    }
    Ok(())
}

/// Runs `cases` random selector cases through every check.
pub fn run_selector_properties(cases: u32) -> Result<(), String> {
    let mut runner = TestRunner::new(RunnerConfig { cases, failure_persistence: None, ..RunnerConfig::default() });
    runner
        .run(&selector_case(), |c| {
            check_class_atomicity(&c)?;
            check_filter_soundness(&c)?;
            check_budget(&c)?;
            let chosen: BTreeSet<usize> = c.candidates.iter().map(|x| x.index).collect();
            check_grouping(&chosen)
        })
        .map_err(|e| e.to_string())?;
    let mut runner = TestRunner::new(RunnerConfig { cases, failure_persistence: None, ..RunnerConfig::default() });
    runner
        .run(&prop::collection::btree_set(0usize..60, 0..25), |s| check_grouping(&s))
        .map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- porter

pub fn porter_agreement() -> (usize, usize, Vec<(String, String, String)>) {
    let voc = include_str!("../data/porter_voc.txt");
    let out = include_str!("../data/porter_output.txt");
    let mut total = 0;
    let mut agree = 0;
    let mut diverging = Vec::new();
    for (w, e) in voc.lines().zip(out.lines()) {
        total += 1;
        let got = reqtrace::preprocess::stem(w);
        if got == e {
            agree += 1;
        } else {
            diverging.push((w.to_string(), e.to_string(), got));
        }
    }
    (agree, total, diverging)
}

// ---------------------------------------------------------------- formulas

/// Compares TF-IDF, cosine and importance against the dense versions on
/// `n` seeded fixtures; returns the largest absolute difference seen.
pub fn run_formula_oracles(n: usize, seed: u64) -> Result<f64, String> {
    use reqtrace::ir_analysis::word_importance_table;
    use reqtrace::vectorize::{cosine, tfidf_vector, Vocabulary};

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut note = |what: &str, k: usize, a: f64, b: f64| -> Result<(), String> {
        let d = (a - b).abs();
        worst = worst.max(d);
        if d > 1e-9 {
            Err(format!("fixture {k}: {what} {a} vs oracle {b}"))
        } else {
            Ok(())
        }
    };
    for k in 0..n {
        let c = random_fixture(&mut rng);
        let terms = dense_terms(&c);
        let vocab = Vocabulary::build(&c).map_err(|e| e.to_string())?;
        let q1 = random_tokens(&mut rng);
        let q2 = random_tokens(&mut rng);
        let (s1, s2) = (tfidf_vector(&q1, &vocab), tfidf_vector(&q2, &vocab));
        let (d1, d2) = (dense_tfidf(&c, &terms, &q1), dense_tfidf(&c, &terms, &q2));
        for (a, b) in to_dense(&s1, &vocab, &terms).iter().zip(&d1) {
            note("tf-idf weight", k, *a, *b)?;
        }
        note("cosine", k, cosine(&s1, &s2), dense_cosine(&d1, &d2))?;

        let table = word_importance_table(&c, "T").map_err(|e| e.to_string())?;
        let oracle = dense_importance(&c);
        if table.imp.len() != oracle.len() {
            return Err(format!("fixture {k}: importance term sets differ"));
        }
        for (t, v) in &oracle {
            note(&format!("imp({t})"), k, table.get(t), *v)?;
        }
    }
    Ok(worst)
}
