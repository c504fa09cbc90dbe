//! Training per-type models and identifying related sentences end to end.

mod config;

pub use config::Config;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidates::rank_candidates;
use crate::corpus::{Corpus, Document, PhraseLists, TypePhrases};
use crate::error::{Error, Result};
use crate::ir_analysis::{score_sentence_ir, word_importance_table, ImportanceTable};
use crate::ml_analysis::{build_training_instances_with, train_forest, FeatureExtractor, Forest};
use crate::selector::{
    compute_n_r, merge_duplicates, select_with_classes, CandidateScores, DuplicateClasses, Mode,
    Selection,
};
use crate::vectorize::{context_vectors, group_vector, SparseVector, Vocabulary};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Everything learned for one information type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeModel {
    pub type_id: String,
    pub config: Config,
    pub n_r: usize,
    pub phrases: TypePhrases,
    pub vocabulary: Vocabulary,
    pub group_vector: SparseVector,
    pub related_context: Vec<SparseVector>,
    pub importance: ImportanceTable,
    pub features: FeatureExtractor,
    pub forest: Forest,
}

/// Type-independent training state shared by the models of one corpus.
pub struct TrainingContext<'a> {
    pub corpus: &'a Corpus,
    pub vocabulary: Vocabulary,
    /// Context vectors of every training sentence, per document.
    pub contexts: Vec<Vec<SparseVector>>,
    pub config: Config,
}

impl<'a> TrainingContext<'a> {
    pub fn new(corpus: &'a Corpus, config: Config) -> Result<Self> {
        config.validate()?;
        let vocabulary = Vocabulary::build(corpus)?;
        let contexts = corpus
            .documents
            .par_iter()
            .map(|d| context_vectors(d, config.n_cxt, &vocabulary))
            .collect();
        Ok(Self {
            corpus,
            vocabulary,
            contexts,
            config,
        })
    }

    pub fn train(&self, type_id: &str, phrases: &PhraseLists) -> Result<TypeModel> {
        let train = self.corpus;
        let cfg = self.config;
        let phrases = phrases
            .get(type_id)
            .ok_or_else(|| Error::training(type_id, "phrase lists", "type has no phrase lists"))?
            .clone();
        if phrases.rlist.is_empty() {
            return Err(Error::training(type_id, "phrase lists", "related phrase list is empty"));
        }

        let related: Vec<(usize, usize)> = train
            .documents
            .iter()
            .enumerate()
            .flat_map(|(d, doc)| doc.related(type_id).iter().map(move |&i| (d, i)))
            .collect();
        if related.is_empty() {
            return Err(Error::training(
                type_id,
                "related sentences",
                "no training document has annotated sentences",
            ));
        }
        let group_vector = group_vector(
            related
                .iter()
                .map(|&(d, i)| train.documents[d].sentences[i].tokens.as_slice()),
            &self.vocabulary,
        );
        let related_context = related
            .iter()
            .map(|&(d, i)| self.contexts[d][i].clone())
            .collect();

        let importance = word_importance_table(train, type_id)?;
        let instances = build_training_instances_with(train, type_id, &group_vector, &self.contexts)?;
        let features = FeatureExtractor::fit(train, type_id, &importance, &phrases, cfg.n_cxt);

        let mut rows = Vec::with_capacity(instances.positives.len() + instances.negatives.len());
        let mut labels = Vec::with_capacity(rows.capacity());
        for (refs, label) in [(&instances.positives, true), (&instances.negatives, false)] {
            for r in refs {
                rows.push(features.extract(&train.documents[r.doc], r.index).to_vec());
                labels.push(label);
            }
        }
        let forest = train_forest(&rows, &labels, cfg.forest_params(), cfg.seed)
            .map_err(|e| Error::training(type_id, "random forest", e.to_string()))?;
        let n_r = compute_n_r(train, type_id)?;

        Ok(TypeModel {
            type_id: type_id.to_string(),
            config: cfg,
            n_r,
            phrases,
            vocabulary: self.vocabulary.clone(),
            group_vector,
            related_context,
            importance,
            features,
            forest,
        })
    }
}

pub fn train_type_model(
    train: &Corpus,
    type_id: &str,
    phrases: &PhraseLists,
    config: &Config,
) -> Result<TypeModel> {
    TrainingContext::new(train, *config)?.train(type_id, phrases)
}

/// Trains one model per type, in the order given.
pub fn train_models(
    train: &Corpus,
    type_ids: &[String],
    phrases: &PhraseLists,
    config: &Config,
) -> Result<Vec<TypeModel>> {
    let ctx = TrainingContext::new(train, *config)?;
    type_ids.par_iter().map(|t| ctx.train(t, phrases)).collect()
}

/// The candidates of one document for one model, fully scored.
#[derive(Debug, Clone)]
pub struct ScoredDocument {
    pub candidates: Vec<CandidateScores>,
    pub classes: DuplicateClasses,
}

impl TypeModel {
    /// Candidate sentence indices of `doc`, best first.
    pub fn candidates(&self, doc: &Document) -> Vec<usize> {
        let ctx = context_vectors(doc, self.config.n_cxt, &self.vocabulary);
        rank_candidates(&ctx, &self.group_vector, self.config.n_c)
    }

    /// Runs retrieval and both analyses; the result feeds the selector in
    /// any mode.
    pub fn score(&self, doc: &Document) -> ScoredDocument {
        let ctx = context_vectors(doc, self.config.n_cxt, &self.vocabulary);
        let picked = rank_candidates(&ctx, &self.group_vector, self.config.n_c);
        let candidates: Vec<CandidateScores> = picked
            .iter()
            .map(|&i| {
                let ir = score_sentence_ir(
                    &ctx[i],
                    &doc.sentences[i].tokens,
                    &self.related_context,
                    &self.group_vector,
                    &self.importance,
                );
                let prob = self.forest.predict_prob(&self.features.extract(doc, i));
                CandidateScores::new(i, ir, prob)
            })
            .collect();
        let cand_ctx: Vec<&SparseVector> = picked.iter().map(|&i| &ctx[i]).collect();
        let classes = merge_duplicates(&cand_ctx, self.config.theta);
        ScoredDocument {
            candidates,
            classes,
        }
    }

    pub fn select(&self, doc: &Document, scored: &ScoredDocument, mode: Mode) -> Selection {
        select_with_classes(
            doc,
            &scored.candidates,
            &scored.classes,
            self.n_r,
            &self.phrases,
            self.config.theta,
            mode,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Identification {
    pub type_id: String,
    pub mode: Mode,
    pub selection: Selection,
    /// Every candidate with its five scores, in candidate rank order.
    pub scores: Vec<CandidateScores>,
}

/// Identifies the sentences of a preprocessed document related to the
/// model's type. Annotations of `doc` are never read.
pub fn identify(model: &TypeModel, doc: &Document, mode: Mode) -> Identification {
    let scored = model.score(doc);
    Identification {
        type_id: model.type_id.clone(),
        mode,
        selection: model.select(doc, &scored, mode),
        scores: scored.candidates,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub version: u32,
    pub config: Config,
    pub models: Vec<TypeModel>,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

impl ModelBundle {
    pub fn new(config: Config, models: Vec<TypeModel>) -> Self {
        Self {
            version: MODEL_FORMAT_VERSION,
            config,
            models,
        }
    }

    pub fn get(&self, type_id: &str) -> Result<&TypeModel> {
        self.models
            .iter()
            .find(|m| m.type_id == type_id)
            .ok_or_else(|| Error::UnknownType(type_id.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("model bundle serializes");
        s.push('\n');
        s
    }

    /// Parses a bundle; `path` is used in error messages only.
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |e: serde_json::Error| {
            let (line, column) = (e.line(), e.column());
            Error::ModelParse {
                path: path.to_path_buf(),
                line,
                column,
                offset: byte_offset(text, line, column),
                message: e.to_string(),
            }
        };
        let probe: VersionProbe = serde_json::from_str(text).map_err(parse_err)?;
        if probe.version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion {
                path: path.to_path_buf(),
                found: probe.version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        serde_json::from_str(text).map_err(parse_err)
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (start + column).min(text.len())
}

pub fn save_model(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, bundle.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ModelBundle::from_json(&text, path)
}
