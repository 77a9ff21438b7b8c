//! The three classifier families, trained from scratch on fixed feature
//! vectors: a one-hidden-layer perceptron, an RBF support vector machine
//! and a gini random forest.

mod blob;
pub mod forest;
pub mod mlp;
pub mod svm;
pub mod weights;

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatorId, Label};
use crate::error::{Error, Result};

pub use forest::{gini, train_forest, ForestConfig};
pub use mlp::{mlp_loss_and_grad, train_mlp, MlpBatch, MlpConfig, MlpShape};
pub use svm::{rbf_kernel, train_svm, train_svm_with_report, Gamma, SvmConfig};
pub use weights::{compute_class_weights, oversample, oversample_indices, ClassWeights};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Mlp,
    Svm,
    #[serde(rename = "rf")]
    Forest,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Mlp, Family::Svm, Family::Forest];

    pub fn name(self) -> &'static str {
        match self {
            Family::Mlp => "mlp",
            Family::Svm => "svm",
            Family::Forest => "rf",
        }
    }

    fn tag(self) -> u8 {
        match self {
            Family::Mlp => 1,
            Family::Svm => 2,
            Family::Forest => 3,
        }
    }

    fn from_tag(tag: u8) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.tag() == tag)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mlp" => Ok(Family::Mlp),
            "svm" | "svc" => Ok(Family::Svm),
            "rf" | "rfc" | "forest" => Ok(Family::Forest),
            other => Err(Error::Config(format!("unknown classifier family {other:?}"))),
        }
    }
}

/// Learned parameters of one classifier.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelParams {
    /// Training data held a single class.
    Constant,
    Mlp(mlp::MlpParams),
    Svm(svm::SvmParams),
    Forest(forest::ForestParams),
}

/// A trained classifier. Outputs are indices into `classes`, which is the
/// sorted list of labels seen in training.
#[derive(Clone, Debug, PartialEq)]
pub struct Classifier {
    pub family: Family,
    pub dim: usize,
    pub classes: Vec<Label>,
    pub params: ModelParams,
}

impl Classifier {
    pub fn constant(family: Family, dim: usize, label: Label) -> Self {
        Classifier {
            family,
            dim,
            classes: vec![label],
            params: ModelParams::Constant,
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<Label>> {
        if x.ncols() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "model expects dimension {}, features have {}",
                self.dim,
                x.ncols()
            )));
        }
        let indices = match &self.params {
            ModelParams::Constant => vec![0; x.nrows()],
            ModelParams::Mlp(p) => p.predict_indices(x),
            ModelParams::Svm(p) => p.predict_indices(x),
            ModelParams::Forest(p) => p.predict_indices(x),
        };
        Ok(indices.into_iter().map(|i| self.classes[i]).collect())
    }
}

/// A classifier bound to the annotator whose labels it imitates.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatorModel {
    pub annotator: AnnotatorId,
    pub classifier: Classifier,
}

impl AnnotatorModel {
    pub fn family(&self) -> Family {
        self.classifier.family
    }

    pub fn classes_seen(&self) -> &[Label] {
        &self.classifier.classes
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<Label>> {
        self.classifier.predict(x)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        blob::encode(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        blob::decode(bytes)
    }
}

pub fn predict(m: &AnnotatorModel, x: ArrayView2<f64>) -> Result<Vec<Label>> {
    m.predict(x)
}

/// Sorted distinct labels and, per row, the index of its label in that list.
pub(crate) fn index_classes(y: &[Label]) -> (Vec<Label>, Vec<usize>) {
    let mut classes: Vec<Label> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let idx = y
        .iter()
        .map(|l| classes.binary_search(l).expect("label collected above"))
        .collect();
    (classes, idx)
}

pub(crate) fn check_inputs(x: ArrayView2<f64>, y: &[Label]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::ShapeMismatch(format!("{} feature rows for {} labels", x.nrows(), y.len())));
    }
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    for ((row, col), v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(())
}

/// Index of the largest score; ties go to the lowest index.
pub(crate) fn argmax(scores: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, s) in scores.into_iter().enumerate() {
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
            assert_eq!(Family::from_tag(f.tag()), Some(f));
        }
        assert!("knn".parse::<Family>().is_err());
    }

    #[test]
    fn constant_model_predictions() {
        let m = Classifier::constant(Family::Svm, 3, Label::new(2).unwrap());
        let x = Array2::<f64>::zeros((4, 3));
        assert_eq!(m.predict(x.view()).unwrap(), vec![Label::new(2).unwrap(); 4]);
        let empty = Array2::<f64>::zeros((0, 3));
        assert!(m.predict(empty.view()).unwrap().is_empty());
        let wrong = Array2::<f64>::zeros((1, 2));
        assert!(matches!(m.predict(wrong.view()), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax([1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax([0.0, 0.0]), 0);
    }
}
