//! End-to-end protocol: per-annotator grid search with k-fold
//! cross-validation, family selection on the validation split, final
//! retraining, test prediction, aggregation and scoring.

pub mod config;
pub mod store;
pub mod submission;

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{dist_binary, dist_multiclass, subtask1_emit, subtask1_valid_sets, Target, TieMode, ValidLabelSet};
use crate::classifiers::{
    compute_class_weights, train_forest, train_mlp, train_svm, AnnotatorModel, Classifier, Family, ForestConfig, MlpConfig,
    SvmConfig,
};
use crate::corpus::{annotator_view, count_labels, kfold_split, AnnotatedComment, AnnotatorId, Dataset, Label, LabeledSet, Provenance};
use crate::embed_store::{align, EmbeddingTable};
use crate::error::{Error, Result};
use crate::metrics::{macro_f1, score_subtask1, score_subtask2, DistributionRow, ScoreReport, Subtask1Gold, Subtask1Predictions};
use crate::seed::{derive_seed, hash_str};

pub use config::{DataConfig, ExperimentConfig, GridConfig, Hyperparams, ModelSettings};
pub use store::ModelStore;
pub use submission::{export_submission, Submission};

const ALL_LABELS: [u8; Label::NUM_CLASSES] = [0, 1, 2, 3, 4];

/// Outcome of one annotator's grid search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunedChoice {
    pub annotator: AnnotatorId,
    pub params: Hyperparams,
    pub mean_score: f64,
    pub fold_scores: Vec<f64>,
}

impl TunedChoice {
    pub fn family(&self) -> Family {
        self.params.family()
    }
}

/// Per-annotator seed, independent of annotator order.
pub fn annotator_seed(seed: u64, a: &AnnotatorId) -> u64 {
    derive_seed(seed, &[hash_str(a.as_str())])
}

/// Feature rows for `ids`, in that order.
pub fn feature_rows<S: AsRef<str>>(features: &EmbeddingTable, ids: &[S]) -> Result<Array2<f64>> {
    Ok(align(features, ids)?.to_f64())
}

/// Trains one classifier. Single-class training data gives a constant model
/// for every family.
pub fn fit_model(params: &Hyperparams, x: ArrayView2<f64>, y: &[Label], settings: &ModelSettings, seed: u64) -> Result<Classifier> {
    let first = *y.first().ok_or(Error::EmptyInput)?;
    if y.iter().all(|&l| l == first) {
        if x.nrows() != y.len() {
            return Err(Error::ShapeMismatch(format!("{} feature rows for {} labels", x.nrows(), y.len())));
        }
        return Ok(Classifier::constant(params.family(), x.ncols(), first));
    }
    match *params {
        Hyperparams::Mlp { hidden_size } => {
            let cfg = MlpConfig {
                hidden_size,
                seed,
                ..settings.mlp.clone()
            };
            train_mlp(x, y, &cfg)
        }
        Hyperparams::Svm { c } => {
            let cfg = SvmConfig { c, ..settings.svm.clone() };
            let weights = compute_class_weights(&count_labels(y.iter().copied()))?;
            train_svm(x, y, &cfg, &weights)
        }
        Hyperparams::Forest { n_estimators, max_depth } => {
            let cfg = ForestConfig {
                n_estimators,
                max_depth,
                seed,
            };
            let weights = compute_class_weights(&count_labels(y.iter().copied()))?;
            train_forest(x, y, &cfg, &weights)
        }
    }
}

/// Unweighted five-class macro-F1 of hard predictions against single gold
/// labels.
pub fn annotator_f1(pred: &[Label], gold: &[Label]) -> Result<f64> {
    let p: Vec<u8> = pred.iter().map(|l| l.value()).collect();
    let g: Vec<ValidLabelSet> = gold.iter().map(|l| ValidLabelSet::single(l.value())).collect();
    macro_f1(&p, &g, &ALL_LABELS)
}

/// Cross-validated selection over `grid`: one model per (grid point, fold),
/// scored by macro-F1 on the held-out fold and averaged. The earliest grid
/// point wins ties.
pub fn grid_search(
    set: &LabeledSet,
    features: &EmbeddingTable,
    family: Family,
    grid: &[Hyperparams],
    k: usize,
    seed: u64,
    settings: &ModelSettings,
) -> Result<TunedChoice> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(p) = grid.iter().find(|p| p.family() != family) {
        return Err(Error::InvalidArgument(format!("grid point {p:?} is not a {family} point")));
    }
    let folds = kfold_split(set, k, seed)?;
    let x = feature_rows(features, &set.ids())?;
    let y = set.labels();

    let scores: Vec<f64> = (0..grid.len() * k)
        .into_par_iter()
        .map(|task| {
            let (g, f) = (task / k, task % k);
            let fold = &folds[f];
            let train_y: Vec<Label> = fold.train.iter().map(|&i| y[i]).collect();
            let held_y: Vec<Label> = fold.held_out.iter().map(|&i| y[i]).collect();
            let model = fit_model(
                &grid[g],
                x.select(Axis(0), &fold.train).view(),
                &train_y,
                settings,
                derive_seed(seed, &[f as u64]),
            )?;
            let pred = model.predict(x.select(Axis(0), &fold.held_out).view())?;
            annotator_f1(&pred, &held_y)
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(usize, f64)> = None;
    for (g, fold_scores) in scores.chunks(k).enumerate() {
        let mean = fold_scores.iter().sum::<f64>() / k as f64;
        if best.is_none_or(|(_, m)| mean > m) {
            best = Some((g, mean));
        }
    }
    let (g, mean_score) = best.expect("grid is non-empty");
    log::debug!("{}: {:?} scored {mean_score:.4}", set.annotator, grid[g]);
    Ok(TunedChoice {
        annotator: set.annotator.clone(),
        params: grid[g],
        mean_score,
        fold_scores: scores[g * k..(g + 1) * k].to_vec(),
    })
}

fn require_training_data(d: &Dataset, what: &str) -> Result<()> {
    match d.provenance() {
        Provenance::Full | Provenance::ExplorationTrain => Ok(()),
        p => Err(Error::Provenance(format!("{what} refuses {p:?} data"))),
    }
}

/// Grid search for every annotator with at least one annotation, in
/// annotator order.
pub fn tune_annotators(
    d: &Dataset,
    features: &EmbeddingTable,
    family: Family,
    grid: &GridConfig,
    k: usize,
    seed: u64,
    settings: &ModelSettings,
) -> Result<Vec<TunedChoice>> {
    require_training_data(d, "hyperparameter search")?;
    let points = grid.points(family);
    let annotators: Vec<AnnotatorId> = d.annotators().into_iter().collect();
    annotators
        .par_iter()
        .map(|a| {
            let set = annotator_view(d, a);
            grid_search(&set, features, family, &points, k, annotator_seed(seed, a), settings)
        })
        .collect()
}

/// Retrains every annotator in its chosen configuration on all of its rows.
/// Annotators without annotations are skipped.
pub fn train_all_annotators(
    d: &Dataset,
    features: &EmbeddingTable,
    choices: &[TunedChoice],
    settings: &ModelSettings,
    seed: u64,
) -> Result<ModelStore> {
    require_training_data(d, "training")?;
    let by_annotator: BTreeMap<&AnnotatorId, &TunedChoice> = choices.iter().map(|c| (&c.annotator, c)).collect();
    let present = d.annotators();
    for a in by_annotator.keys().filter(|a| !present.contains(**a)) {
        log::info!("skipping annotator {a}: no annotations");
    }
    for a in d.listed_annotators().difference(&present) {
        if !by_annotator.contains_key(a) {
            log::info!("skipping annotator {a}: no annotations");
        }
    }
    let jobs: Vec<(&AnnotatorId, &TunedChoice)> = present
        .iter()
        .map(|a| by_annotator.get(a).map(|c| (a, *c)).ok_or_else(|| Error::MissingChoice(a.to_string())))
        .collect::<Result<_>>()?;
    let models: Vec<AnnotatorModel> = jobs
        .par_iter()
        .map(|(a, choice)| {
            let set = annotator_view(d, a);
            let x = feature_rows(features, &set.ids())?;
            let classifier = fit_model(&choice.params, x.view(), &set.labels(), settings, annotator_seed(seed, a))?;
            Ok(AnnotatorModel {
                annotator: (*a).clone(),
                classifier,
            })
        })
        .collect::<Result<_>>()?;
    let mut store = ModelStore::new();
    for m in models {
        store.insert(m);
    }
    Ok(store)
}

/// Predicted label multisets, one per comment: one label per listed
/// annotator, in listing order.
pub fn predict_dataset(comments: &[AnnotatedComment], store: &ModelStore, features: &EmbeddingTable) -> Result<Vec<Vec<Label>>> {
    let mut rows_by_annotator: BTreeMap<&AnnotatorId, Vec<(usize, usize)>> = BTreeMap::new();
    for (ci, c) in comments.iter().enumerate() {
        for (slot, a) in c.annotator_ids.iter().enumerate() {
            if store.get(a).is_none() {
                return Err(Error::MissingModel(a.to_string()));
            }
            rows_by_annotator.entry(a).or_default().push((ci, slot));
        }
    }
    let ids: Vec<&str> = comments.iter().map(|c| c.id.as_str()).collect();
    let x = feature_rows(features, &ids)?;
    let mut out: Vec<Vec<Option<Label>>> = comments.iter().map(|c| vec![None; c.annotator_ids.len()]).collect();
    for (a, rows) in rows_by_annotator {
        let sel: Vec<usize> = rows.iter().map(|&(ci, _)| ci).collect();
        let pred = store.get(a).expect("checked above").predict(x.select(Axis(0), &sel).view())?;
        for (&(ci, slot), label) in rows.iter().zip(pred) {
            out[ci][slot] = Some(label);
        }
    }
    Ok(out
        .into_iter()
        .map(|row| row.into_iter().map(|l| l.expect("every slot predicted")).collect())
        .collect())
}

pub fn predict_comment(c: &AnnotatedComment, store: &ModelStore, features: &EmbeddingTable) -> Result<Vec<Label>> {
    Ok(predict_dataset(std::slice::from_ref(c), store, features)?.remove(0))
}

/// Single-valued subtask-1 targets from label multisets.
pub fn subtask1_from_multisets(ids: Vec<String>, multisets: &[Vec<Label>], mode: TieMode) -> Result<Subtask1Predictions> {
    let mut targets: BTreeMap<Target, Vec<u8>> = Target::ALL.iter().map(|&t| (t, Vec::with_capacity(ids.len()))).collect();
    for labels in multisets {
        for (t, v) in Target::ALL.iter().zip(subtask1_emit(labels, mode)?) {
            targets.get_mut(t).unwrap().push(v);
        }
    }
    Ok(Subtask1Predictions { ids, targets })
}

pub fn subtask2_from_multisets(ids: Vec<String>, multisets: &[Vec<Label>]) -> Result<Vec<DistributionRow>> {
    ids.into_iter()
        .zip(multisets)
        .map(|(id, labels)| {
            Ok(DistributionRow {
                id,
                binary: dist_binary(labels)?,
                multi: dist_multiclass(labels)?,
            })
        })
        .collect()
}

pub fn run_subtask1(test: &Dataset, store: &ModelStore, features: &EmbeddingTable, mode: TieMode) -> Result<Subtask1Predictions> {
    let multisets = predict_dataset(test.comments(), store, features)?;
    subtask1_from_multisets(test.ids(), &multisets, mode)
}

pub fn run_subtask2(test: &Dataset, store: &ModelStore, features: &EmbeddingTable) -> Result<Vec<DistributionRow>> {
    let multisets = predict_dataset(test.comments(), store, features)?;
    subtask2_from_multisets(test.ids(), &multisets)
}

/// Gold subtask-1 valid sets from the human annotations.
pub fn gold_subtask1(d: &Dataset, mode: TieMode) -> Result<Subtask1Gold> {
    let mut targets: BTreeMap<Target, Vec<ValidLabelSet>> = Target::ALL.iter().map(|&t| (t, Vec::new())).collect();
    for c in d.comments() {
        for (t, set) in Target::ALL.iter().zip(subtask1_valid_sets(&c.labels(), mode)?) {
            targets.get_mut(t).unwrap().push(set);
        }
    }
    Ok(Subtask1Gold { ids: d.ids(), targets })
}

pub fn gold_subtask2(d: &Dataset) -> Result<Vec<DistributionRow>> {
    let multisets: Vec<Vec<Label>> = d.comments().iter().map(|c| c.labels()).collect();
    subtask2_from_multisets(d.ids(), &multisets)
}

/// Validation scores of one family after tuning and retraining on the
/// exploration training part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyEvaluation {
    pub family: Family,
    pub choices: Vec<TunedChoice>,
    pub subtask1: ScoreReport,
    pub subtask2: ScoreReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exploration {
    pub evaluations: Vec<FamilyEvaluation>,
    pub best: Family,
}

impl Exploration {
    pub fn evaluation(&self, family: Family) -> Option<&FamilyEvaluation> {
        self.evaluations.iter().find(|e| e.family == family)
    }
}

/// Tunes and retrains each configured family on `train`, scores it on
/// `validation`, and picks the family with the highest subtask-1 average
/// macro-F1. Ties go to the lower subtask-2 distance, then to the earlier
/// family in the config.
pub fn explore(train: &Dataset, validation: &Dataset, features: &EmbeddingTable, cfg: &ExperimentConfig) -> Result<Exploration> {
    if train.provenance() != Provenance::ExplorationTrain {
        return Err(Error::Provenance(format!("exploration trains on ExplorationTrain data, got {:?}", train.provenance())));
    }
    if validation.provenance() != Provenance::Validation {
        return Err(Error::Provenance(format!("exploration scores on Validation data, got {:?}", validation.provenance())));
    }
    let settings = cfg.models();
    let gold1 = gold_subtask1(validation, cfg.tie_mode)?;
    let gold2 = gold_subtask2(validation)?;
    let mut evaluations = Vec::with_capacity(cfg.families.len());
    for &family in &cfg.families {
        let family_seed = derive_seed(cfg.seed, &[family as u64]);
        let choices = tune_annotators(train, features, family, &cfg.grid, cfg.folds, family_seed, &settings)?;
        let store = train_all_annotators(train, features, &choices, &settings, family_seed)?;
        let multisets = predict_dataset(validation.comments(), &store, features)?;
        let pred1 = subtask1_from_multisets(validation.ids(), &multisets, cfg.tie_mode)?;
        let pred2 = subtask2_from_multisets(validation.ids(), &multisets)?;
        let evaluation = FamilyEvaluation {
            family,
            choices,
            subtask1: score_subtask1(&pred1, &gold1)?,
            subtask2: score_subtask2(&pred2, &gold2, cfg.js_base)?,
        };
        log::info!(
            "{family}: validation macro-F1 {:.4}, JS distance {:.4}",
            evaluation.subtask1.average,
            evaluation.subtask2.average
        );
        evaluations.push(evaluation);
    }
    let mut best = &evaluations[0];
    for e in &evaluations[1..] {
        let better = e.subtask1.average > best.subtask1.average
            || (e.subtask1.average == best.subtask1.average && e.subtask2.average < best.subtask2.average);
        if better {
            best = e;
        }
    }
    let best = best.family;
    Ok(Exploration { evaluations, best })
}
