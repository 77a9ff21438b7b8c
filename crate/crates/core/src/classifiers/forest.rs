//! Random forest of gini decision trees with balanced class weights.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, check_inputs, index_classes, ClassWeights, Classifier, Family, ModelParams};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::seed::derive_seed;

pub const N_ESTIMATORS_RANGE: (usize, usize) = (10, 560);
pub const MAX_DEPTH_RANGE: (usize, usize) = (1, 91);

/// Minimum weighted impurity decrease for a split to be taken.
const MIN_GAIN: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: 100,
            max_depth: 11,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = N_ESTIMATORS_RANGE;
        if !(lo..=hi).contains(&self.n_estimators) {
            return Err(Error::Config(format!("n_estimators {} outside [{lo}, {hi}]", self.n_estimators)));
        }
        let (lo, hi) = MAX_DEPTH_RANGE;
        if !(lo..=hi).contains(&self.max_depth) {
            return Err(Error::Config(format!("max_depth {} outside [{lo}, {hi}]", self.max_depth)));
        }
        Ok(())
    }
}

/// `1 − Σ (countᶜ / n)²` over (possibly weighted) class counts.
pub fn gini(counts: &[f64]) -> Result<f64> {
    let n: f64 = counts.iter().sum();
    if !(n > 0.0) {
        return Err(Error::EmptyInput);
    }
    Ok(gini_unchecked(counts, n))
}

fn gini_unchecked(counts: &[f64], n: f64) -> f64 {
    1.0 - counts.iter().map(|c| (c / n) * (c / n)).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    /// Weighted class distribution of the training samples in the leaf.
    Leaf { dist: Vec<f64> },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_dist(&self, row: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { dist } => return dist,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature as usize] <= *threshold { *left } else { *right } as usize;
                }
            }
        }
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForestParams {
    pub n_classes: usize,
    pub trees: Vec<Tree>,
}

impl ForestParams {
    /// Summed leaf distributions per class. Each class's contributions are
    /// sorted before summation, so the total does not depend on the order
    /// in which trees were evaluated.
    pub fn vote(&self, per_tree: &[&[f64]]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| {
                let mut parts: Vec<f64> = per_tree.iter().map(|d| d[c]).collect();
                parts.sort_by(f64::total_cmp);
                parts.iter().sum()
            })
            .collect()
    }

    pub fn predict_indices(&self, x: ArrayView2<f64>) -> Vec<usize> {
        x.rows()
            .into_iter()
            .map(|row| {
                let row = row.to_vec();
                let dists: Vec<&[f64]> = self.trees.iter().map(|t| t.leaf_dist(&row)).collect();
                argmax(self.vote(&dists))
            })
            .collect()
    }
}

struct TreeBuilder<'a> {
    x: ArrayView2<'a, f64>,
    yi: &'a [usize],
    n_classes: usize,
    max_depth: usize,
    n_candidates: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    left: Vec<(usize, f64)>,
    right: Vec<(usize, f64)>,
}

impl TreeBuilder<'_> {
    fn class_weights(&self, samples: &[(usize, f64)]) -> Vec<f64> {
        let mut w = vec![0.0; self.n_classes];
        for &(i, sw) in samples {
            w[self.yi[i]] += sw;
        }
        w
    }

    fn build(&mut self, samples: Vec<(usize, f64)>, depth: usize) -> u32 {
        let at = self.nodes.len() as u32;
        let counts = self.class_weights(&samples);
        let total: f64 = counts.iter().sum();
        let impurity = gini_unchecked(&counts, total);
        let split = if depth < self.max_depth && samples.len() >= 2 && impurity > 0.0 {
            self.best_split(&samples, total * impurity)
        } else {
            None
        };
        match split {
            None => {
                let dist = counts.iter().map(|c| c / total).collect();
                self.nodes.push(Node::Leaf { dist });
            }
            Some(s) => {
                self.nodes.push(Node::Leaf { dist: Vec::new() });
                let left = self.build(s.left, depth + 1);
                let right = self.build(s.right, depth + 1);
                self.nodes[at as usize] = Node::Split {
                    feature: s.feature as u32,
                    threshold: s.threshold,
                    left,
                    right,
                };
            }
        }
        at
    }

    /// Best weighted-gini split over a random subset of features. Features
    /// are scanned in ascending order and only strict improvements replace
    /// the incumbent, so ties go to the lowest feature, then the lowest
    /// threshold.
    fn best_split(&mut self, samples: &[(usize, f64)], parent_cost: f64) -> Option<BestSplit> {
        let dim = self.x.ncols();
        let mut features = sample(&mut self.rng, dim, self.n_candidates.min(dim)).into_vec();
        features.sort_unstable();

        let total = self.class_weights(samples);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = samples.to_vec();
        for &f in &features {
            sorted.sort_by(|a, b| self.x[[a.0, f]].total_cmp(&self.x[[b.0, f]]).then(a.0.cmp(&b.0)));
            let mut left = vec![0.0; self.n_classes];
            let mut left_w = 0.0;
            let total_w: f64 = total.iter().sum();
            for k in 0..sorted.len() - 1 {
                let (i, w) = sorted[k];
                left[self.yi[i]] += w;
                left_w += w;
                let (v, next) = (self.x[[i, f]], self.x[[sorted[k + 1].0, f]]);
                if v == next {
                    continue;
                }
                let right_w = total_w - left_w;
                let right: Vec<f64> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let cost = left_w * gini_unchecked(&left, left_w) + right_w * gini_unchecked(&right, right_w);
                if parent_cost - cost > MIN_GAIN && best.is_none_or(|(c, _, _)| cost < c) {
                    let mut threshold = v + (next - v) / 2.0;
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some((cost, f, threshold));
                }
            }
        }
        let (_, feature, threshold) = best?;
        let (left, right) = samples.iter().partition(|(i, _)| self.x[[*i, feature]] <= threshold);
        Some(BestSplit {
            feature,
            threshold,
            left,
            right,
        })
    }
}

/// Trains `n_estimators` trees, each on a bootstrap sample of size n with
/// sample weight `multiplicity × class weight`. `weights` is indexed by
/// label value.
pub fn train_forest(x: ArrayView2<f64>, y: &[Label], cfg: &ForestConfig, weights: &ClassWeights) -> Result<Classifier> {
    cfg.validate()?;
    check_inputs(x, y)?;
    let (classes, yi) = index_classes(y);
    let class_w: Vec<f64> = classes
        .iter()
        .map(|l| {
            weights
                .get(l.index())
                .ok_or_else(|| Error::InvalidArgument(format!("no class weight for label {l}")))
        })
        .collect::<Result<_>>()?;
    let n = y.len();
    let n_candidates = ((x.ncols() as f64).sqrt().floor() as usize).max(1);

    let trees = (0..cfg.n_estimators)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[t as u64]));
            let mut multiplicity = vec![0u32; n];
            for _ in 0..n {
                multiplicity[rng.random_range(0..n)] += 1;
            }
            let samples: Vec<(usize, f64)> = (0..n)
                .filter(|&i| multiplicity[i] > 0)
                .map(|i| (i, multiplicity[i] as f64 * class_w[yi[i]]))
                .collect();
            let mut builder = TreeBuilder {
                x,
                yi: &yi,
                n_classes: classes.len(),
                max_depth: cfg.max_depth,
                n_candidates,
                rng,
                nodes: Vec::new(),
            };
            builder.build(samples, 0);
            Tree { nodes: builder.nodes }
        })
        .collect();

    Ok(Classifier {
        family: Family::Forest,
        dim: x.ncols(),
        params: ModelParams::Forest(ForestParams {
            n_classes: classes.len(),
            trees,
        }),
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::compute_class_weights;
    use crate::corpus::count_labels;
    use ndarray::Array2;

    fn balanced(y: &[Label]) -> ClassWeights {
        compute_class_weights(&count_labels(y.iter().copied())).unwrap()
    }

    fn toy(seed: u64, n: usize, dim: usize) -> (Array2<f64>, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, dim), |_| rng.random_range(-1.0..1.0));
        let y = x
            .rows()
            .into_iter()
            .map(|r| Label::new(if r[0] > 0.2 { 2 } else if r[0] < -0.4 { 0 } else { 4 }).unwrap())
            .collect();
        (x, y)
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[5.0, 5.0]).unwrap(), 0.5);
        assert_eq!(gini(&[7.0, 0.0]).unwrap(), 0.0);
        assert!((gini(&[1.0; 5]).unwrap() - 0.8).abs() < 1e-12);
        assert!(gini(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn stumps_have_depth_one() {
        let (x, y) = toy(1, 60, 4);
        let cfg = ForestConfig {
            n_estimators: 20,
            max_depth: 1,
            seed: 4,
        };
        let m = train_forest(x.view(), &y, &cfg, &balanced(&y)).unwrap();
        let ModelParams::Forest(p) = &m.params else { unreachable!() };
        assert!(p.trees.iter().all(|t| t.depth() <= 1));
        assert!(p.trees.iter().any(|t| t.depth() == 1));
    }

    #[test]
    fn pure_data_predicts_its_class() {
        let (x, _) = toy(2, 30, 3);
        let y = vec![Label::new(3).unwrap(); 30];
        let m = train_forest(x.view(), &y, &ForestConfig::default(), &balanced(&y)).unwrap();
        assert!(m.predict(x.view()).unwrap().iter().all(|l| l.value() == 3));
    }

    #[test]
    fn deterministic_and_fits_training_data() {
        let (x, y) = toy(3, 80, 2);
        let cfg = ForestConfig {
            n_estimators: 30,
            max_depth: 12,
            seed: 11,
        };
        let a = train_forest(x.view(), &y, &cfg, &balanced(&y)).unwrap();
        let b = train_forest(x.view(), &y, &cfg, &balanced(&y)).unwrap();
        assert_eq!(a, b);
        let pred = a.predict(x.view()).unwrap();
        let correct = pred.iter().zip(&y).filter(|(p, t)| p == t).count();
        assert!(correct >= 78, "{correct}/80");
    }

    #[test]
    fn vote_ignores_tree_order() {
        let (x, y) = toy(5, 50, 3);
        let cfg = ForestConfig {
            n_estimators: 25,
            max_depth: 4,
            seed: 2,
        };
        let m = train_forest(x.view(), &y, &cfg, &balanced(&y)).unwrap();
        let ModelParams::Forest(p) = &m.params else { unreachable!() };
        for row in x.rows() {
            let row = row.to_vec();
            let forward: Vec<&[f64]> = p.trees.iter().map(|t| t.leaf_dist(&row)).collect();
            let backward: Vec<&[f64]> = p.trees.iter().rev().map(|t| t.leaf_dist(&row)).collect();
            assert_eq!(p.vote(&forward), p.vote(&backward));
        }
    }

    #[test]
    fn config_ranges() {
        assert!(ForestConfig { n_estimators: 5, ..ForestConfig::default() }.validate().is_err());
        assert!(ForestConfig { max_depth: 92, ..ForestConfig::default() }.validate().is_err());
    }
}
