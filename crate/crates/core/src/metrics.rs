//! Macro-F1 under valid-set gold, Jensen–Shannon distance, and the two
//! per-subtask score reports.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::aggregate::{LabelDistribution, Target, ValidLabelSet};
use crate::error::{Error, Result};

/// Unweighted mean of per-class F1 over the classes of `domain` that occur
/// in the (effective) gold or the predictions.
///
/// A prediction inside its gold set is a true positive. A prediction
/// outside a singleton gold set is a false positive for the prediction and a
/// false negative for the gold class. A prediction outside an ambiguous
/// (multi-element) gold set is only a false positive: no single gold class
/// exists to charge the miss to.
pub fn macro_f1(preds: &[u8], golds: &[ValidLabelSet], domain: &[u8]) -> Result<f64> {
    if preds.len() != golds.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} gold rows",
            preds.len(),
            golds.len()
        )));
    }
    let slot: HashMap<u8, usize> = domain.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut tp = vec![0usize; domain.len()];
    let mut fp = vec![0usize; domain.len()];
    let mut fneg = vec![0usize; domain.len()];
    for (&pred, &gold) in preds.iter().zip(golds) {
        let p = *slot.get(&pred).ok_or(Error::OutsideDomain { value: pred })?;
        if gold.contains(pred) {
            tp[p] += 1;
            continue;
        }
        fp[p] += 1;
        if gold.len() == 1 {
            let g = gold.smallest();
            let g = *slot.get(&g).ok_or(Error::OutsideDomain { value: g })?;
            fneg[g] += 1;
        }
    }
    let present: Vec<f64> = (0..domain.len())
        .filter(|&c| tp[c] + fp[c] + fneg[c] > 0)
        .map(|c| 2.0 * tp[c] as f64 / (2 * tp[c] + fp[c] + fneg[c]) as f64)
        .collect();
    if present.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(present.iter().sum::<f64>() / present.len() as f64)
}

/// Square root of the Jensen–Shannon divergence in the given log base.
///
/// Computed as `½·KL(p‖m) + ½·KL(q‖m)`, which equals
/// `H(m) − (H(p) + H(q))/2` with `0·log 0 = 0` but avoids cancellation.
pub fn js_distance(p: &[f64], q: &[f64], base: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(format!("distributions of length {} and {}", p.len(), q.len())));
    }
    if !(base > 0.0 && base != 1.0 && base.is_finite()) {
        return Err(Error::InvalidArgument(format!("log base {base}")));
    }
    check_distribution(p)?;
    check_distribution(q)?;
    let mut divergence = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            divergence += 0.5 * a * (a / m).ln();
        }
        if b > 0.0 {
            divergence += 0.5 * b * (b / m).ln();
        }
    }
    Ok((divergence / base.ln()).max(0.0).sqrt())
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidDistribution(format!("entry {x} is negative or not finite")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub scores: Vec<(String, f64)>,
    pub average: f64,
}

impl ScoreReport {
    pub fn from_scores(scores: Vec<(String, f64)>) -> Self {
        let average = scores.iter().map(|(_, s)| s).sum::<f64>() / scores.len() as f64;
        ScoreReport { scores, average }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.scores.iter().find(|(n, _)| n == name).map(|(_, s)| *s)
    }

    /// One `prefix.name<TAB>value` line per metric, then `prefix.average`.
    pub fn to_text(&self, prefix: &str) -> String {
        let mut out = String::new();
        for (name, score) in &self.scores {
            writeln!(out, "{prefix}.{name}\t{score:.6}").unwrap();
        }
        writeln!(out, "{prefix}.average\t{:.6}", self.average).unwrap();
        out
    }
}

/// One categorical value per comment per target.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Subtask1Predictions {
    pub ids: Vec<String>,
    pub targets: BTreeMap<Target, Vec<u8>>,
}

/// One valid set per comment per target.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Subtask1Gold {
    pub ids: Vec<String>,
    pub targets: BTreeMap<Target, Vec<ValidLabelSet>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistributionRow {
    pub id: String,
    pub binary: LabelDistribution,
    pub multi: LabelDistribution,
}

/// Row permutation mapping each predicted id to its gold row.
fn match_ids(pred_ids: &[String], gold_ids: &[String]) -> Result<Vec<usize>> {
    let gold_pos: HashMap<&str, usize> = gold_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    if gold_pos.len() != gold_ids.len() {
        return Err(Error::IdMismatch("duplicate ids in gold".into()));
    }
    let mut seen = HashSet::new();
    let mut order = Vec::with_capacity(pred_ids.len());
    for id in pred_ids {
        let g = *gold_pos
            .get(id.as_str())
            .ok_or_else(|| Error::IdMismatch(format!("predicted id {id:?} has no gold")))?;
        if !seen.insert(g) {
            return Err(Error::IdMismatch(format!("id {id:?} predicted twice")));
        }
        order.push(g);
    }
    if order.len() != gold_ids.len() {
        let missing = gold_ids.iter().enumerate().find(|(i, _)| !seen.contains(i)).map(|(_, id)| id.clone());
        return Err(Error::IdMismatch(format!("gold id {:?} has no prediction", missing.unwrap_or_default())));
    }
    Ok(order)
}

pub fn score_subtask1(predictions: &Subtask1Predictions, gold: &Subtask1Gold) -> Result<ScoreReport> {
    let order = match_ids(&predictions.ids, &gold.ids)?;
    let mut scores = Vec::with_capacity(Target::ALL.len());
    for target in Target::ALL {
        let preds = predictions
            .targets
            .get(&target)
            .ok_or_else(|| Error::MissingTarget(target.name().into()))?;
        let golds = gold.targets.get(&target).ok_or_else(|| Error::MissingTarget(target.name().into()))?;
        if preds.len() != order.len() || golds.len() != order.len() {
            return Err(Error::ShapeMismatch(format!("target {} has the wrong number of rows", target.name())));
        }
        let aligned: Vec<ValidLabelSet> = order.iter().map(|&g| golds[g]).collect();
        scores.push((target.name().to_string(), macro_f1(preds, &aligned, target.domain())?));
    }
    Ok(ScoreReport::from_scores(scores))
}

pub fn score_subtask2(predicted: &[DistributionRow], gold: &[DistributionRow], base: f64) -> Result<ScoreReport> {
    let pred_ids: Vec<String> = predicted.iter().map(|r| r.id.clone()).collect();
    let gold_ids: Vec<String> = gold.iter().map(|r| r.id.clone()).collect();
    let order = match_ids(&pred_ids, &gold_ids)?;
    if order.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut binary = 0.0;
    let mut multi = 0.0;
    for (p, &g) in predicted.iter().zip(&order) {
        binary += js_distance(p.binary.probs(), gold[g].binary.probs(), base)?;
        multi += js_distance(p.multi.probs(), gold[g].multi.probs(), base)?;
    }
    let n = order.len() as f64;
    Ok(ScoreReport::from_scores(vec![
        ("dist_bin".to_string(), binary / n),
        ("dist_multi".to_string(), multi / n),
    ]))
}
