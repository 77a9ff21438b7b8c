//! Soft-margin RBF support vector machine.
//!
//! Each pair of classes gets a binary dual problem
//!
//! ```text
//! max  Σαᵢ − ½ ΣΣ αᵢαⱼ yᵢyⱼ K(xᵢ, xⱼ)
//! s.t. 0 ≤ αᵢ ≤ Cᵢ,  Σ αᵢyᵢ = 0
//! ```
//!
//! solved by sequential minimal optimization with second-order working-set
//! selection. Cᵢ is C times the class weight of sample i. Multiclass
//! prediction is a one-vs-one vote, ties going to the lowest label.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{argmax, check_inputs, index_classes, ClassWeights, Classifier, Family, ModelParams};
use crate::corpus::Label;
use crate::error::{Error, Result};

pub const C_RANGE: (f64, f64) = (1.0, 91.0);
const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GammaRepr", into = "GammaRepr")]
pub enum Gamma {
    /// `1 / (dim · variance of all training feature values)`.
    Scale,
    Value(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GammaRepr {
    Name(String),
    Value(f64),
}

impl TryFrom<GammaRepr> for Gamma {
    type Error = String;

    fn try_from(r: GammaRepr) -> std::result::Result<Self, String> {
        match r {
            GammaRepr::Name(s) if s == "scale" => Ok(Gamma::Scale),
            GammaRepr::Name(s) => Err(format!("unknown gamma {s:?}")),
            GammaRepr::Value(v) => Ok(Gamma::Value(v)),
        }
    }
}

impl From<Gamma> for GammaRepr {
    fn from(g: Gamma) -> Self {
        match g {
            Gamma::Scale => GammaRepr::Name("scale".into()),
            Gamma::Value(v) => GammaRepr::Value(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: Gamma,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    /// Defaults to `max(10⁷, 100·n)` per pairwise problem.
    pub max_iter: Option<usize>,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            gamma: Gamma::Scale,
            tol: 1e-3,
            max_iter: None,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = C_RANGE;
        if !(lo..=hi).contains(&self.c) {
            return Err(Error::Config(format!("C = {} outside [{lo}, {hi}]", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if let Gamma::Value(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("gamma = {g} must be positive")));
            }
        }
        Ok(())
    }
}

pub fn rbf_kernel(u: &[f64], v: &[f64], gamma: f64) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::ShapeMismatch(format!("vectors of length {} and {}", u.len(), v.len())));
    }
    Ok((-gamma * squared_distance(u, v)).exp())
}

fn squared_distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// The "scale" heuristic, falling back to 1 for constant features.
pub fn scale_gamma(x: ArrayView2<f64>) -> f64 {
    let n = x.len() as f64;
    if n == 0.0 {
        return 1.0;
    }
    let mean = x.sum() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (x.ncols() as f64 * var)
    } else {
        1.0
    }
}

/// Full RBF Gram matrix via `‖u‖² + ‖v‖² − 2u·v`, diagonal pinned to 1.
fn gram_matrix(x: ArrayView2<f64>, gamma: f64) -> Array2<f64> {
    let norms: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r)).collect();
    let mut k = x.dot(&x.t());
    for ((i, j), v) in k.indexed_iter_mut() {
        *v = if i == j {
            1.0
        } else {
            (-gamma * (norms[i] + norms[j] - 2.0 * *v).max(0.0)).exp()
        };
    }
    k
}

/// Outcome of one binary dual problem.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSolution {
    /// Class indices: `positive` gets y = +1, `negative` y = −1.
    pub positive: usize,
    pub negative: usize,
    /// Training-row indices taking part in this problem, ascending.
    pub rows: Vec<usize>,
    pub y: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Box bounds Cᵢ.
    pub upper: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Dual objective after every update, starting from α = 0.
    pub objective_trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmFitReport {
    pub gamma: f64,
    pub pairs: Vec<PairSolution>,
}

struct BinaryProblem<'a> {
    gram: &'a Array2<f64>,
    rows: &'a [usize],
    y: &'a [f64],
    upper: &'a [f64],
}

impl BinaryProblem<'_> {
    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram[[self.rows[i], self.rows[j]]]
    }

    fn solve(&self, tol: f64, max_iter: usize) -> (Vec<f64>, f64, usize, bool, Vec<f64>) {
        let l = self.rows.len();
        let y = self.y;
        let c = self.upper;
        let mut alpha = vec![0.0; l];
        let mut grad = vec![-1.0; l];
        let mut trace = vec![0.0];
        let mut iterations = 0;
        let mut converged = false;

        while iterations < max_iter {
            let Some((i, j)) = self.select_working_set(&alpha, &grad, tol) else {
                converged = true;
                break;
            };
            iterations += 1;

            let (old_i, old_j) = (alpha[i], alpha[j]);
            let (mut ai, mut aj) = (old_i, old_j);
            let kij = self.k(i, j);
            let quad = (self.k(i, i) + self.k(j, j) - 2.0 * kij).max(TAU);
            if y[i] != y[j] {
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = ai - aj;
                ai += delta;
                aj += delta;
                if diff > 0.0 {
                    if aj < 0.0 {
                        aj = 0.0;
                        ai = diff;
                    }
                } else if ai < 0.0 {
                    ai = 0.0;
                    aj = -diff;
                }
                if diff > c[i] - c[j] {
                    if ai > c[i] {
                        ai = c[i];
                        aj = c[i] - diff;
                    }
                } else if aj > c[j] {
                    aj = c[j];
                    ai = c[j] + diff;
                }
            } else {
                let delta = (grad[i] - grad[j]) / quad;
                let sum = ai + aj;
                ai -= delta;
                aj += delta;
                if sum > c[i] {
                    if ai > c[i] {
                        ai = c[i];
                        aj = sum - c[i];
                    }
                } else if aj < 0.0 {
                    aj = 0.0;
                    ai = sum;
                }
                if sum > c[j] {
                    if aj > c[j] {
                        aj = c[j];
                        ai = sum - c[j];
                    }
                } else if ai < 0.0 {
                    ai = 0.0;
                    aj = sum;
                }
            }
            alpha[i] = ai;
            alpha[j] = aj;

            let (di, dj) = (ai - old_i, aj - old_j);
            for t in 0..l {
                grad[t] += y[t] * (y[i] * self.k(t, i) * di + y[j] * self.k(t, j) * dj);
            }
            let f: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>() * 0.5;
            trace.push(-f);
        }
        let rho = self.rho(&alpha, &grad);
        (alpha, rho, iterations, converged, trace)
    }

    fn at_upper(&self, alpha: &[f64], t: usize) -> bool {
        alpha[t] >= self.upper[t]
    }

    fn at_lower(alpha: &[f64], t: usize) -> bool {
        alpha[t] <= 0.0
    }

    /// Maximal violating index `i`, then the partner `j` with the largest
    /// second-order objective decrease. `None` once the violation is below
    /// `tol`. Ties resolve to the lowest index.
    fn select_working_set(&self, alpha: &[f64], grad: &[f64], tol: f64) -> Option<(usize, usize)> {
        let y = self.y;
        let mut gmax = f64::NEG_INFINITY;
        let mut best_i = None;
        for t in 0..alpha.len() {
            let candidate = if y[t] > 0.0 {
                (!self.at_upper(alpha, t)).then(|| -grad[t])
            } else {
                (!Self::at_lower(alpha, t)).then(|| grad[t])
            };
            if let Some(v) = candidate {
                if v > gmax {
                    gmax = v;
                    best_i = Some(t);
                }
            }
        }
        let i = best_i?;

        let mut gmax2 = f64::NEG_INFINITY;
        let mut best_j = None;
        let mut obj_min = f64::INFINITY;
        for t in 0..alpha.len() {
            let violation = if y[t] > 0.0 {
                (!Self::at_lower(alpha, t)).then(|| grad[t])
            } else {
                (!self.at_upper(alpha, t)).then(|| -grad[t])
            };
            let Some(v) = violation else { continue };
            gmax2 = gmax2.max(v);
            let grad_diff = gmax + v;
            if grad_diff > 0.0 {
                let quad = (self.k(i, i) + self.k(t, t) - 2.0 * self.k(i, t)).max(TAU);
                let obj = -(grad_diff * grad_diff) / quad;
                if obj < obj_min {
                    obj_min = obj;
                    best_j = Some(t);
                }
            }
        }
        if gmax + gmax2 < tol {
            return None;
        }
        best_j.map(|j| (i, j))
    }

    fn rho(&self, alpha: &[f64], grad: &[f64]) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut sum_free, mut n_free) = (0.0, 0usize);
        for t in 0..alpha.len() {
            let yg = self.y[t] * grad[t];
            if self.at_upper(alpha, t) {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if Self::at_lower(alpha, t) {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                n_free += 1;
                sum_free += yg;
            }
        }
        if n_free > 0 {
            sum_free / n_free as f64
        } else {
            (ub + lb) / 2.0
        }
    }
}

/// Learned one-vs-one model. Pairwise decision functions share one pool of
/// support vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmParams {
    pub gamma: f64,
    pub support: Array2<f64>,
    pub pairs: Vec<PairModel>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairModel {
    pub positive: usize,
    pub negative: usize,
    pub rho: f64,
    /// `(support row, αᵢ·yᵢ)`.
    pub coef: Vec<(u32, f64)>,
}

impl SvmParams {
    /// Decision values, one column per class pair; positive favours
    /// `pair.positive`.
    pub fn decision_values(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((x.nrows(), self.pairs.len()));
        let support: Vec<&[f64]> = self
            .support
            .rows()
            .into_iter()
            .map(|r| r.to_slice().expect("standard layout"))
            .collect();
        let mut kvals = vec![0.0; support.len()];
        for (r, row) in x.rows().into_iter().enumerate() {
            let row = row.to_vec();
            for (k, sv) in kvals.iter_mut().zip(&support) {
                *k = (-self.gamma * squared_distance(sv, &row)).exp();
            }
            for (p, pair) in self.pairs.iter().enumerate() {
                let s: f64 = pair.coef.iter().map(|&(s, c)| c * kvals[s as usize]).sum();
                out[[r, p]] = s - pair.rho;
            }
        }
        out
    }

    pub fn predict_indices(&self, x: ArrayView2<f64>) -> Vec<usize> {
        let n_classes = self.pairs.iter().map(|p| p.negative + 1).max().unwrap_or(1);
        self.decision_values(x)
            .axis_iter(Axis(0))
            .map(|dec| {
                let mut votes = vec![0.0; n_classes];
                for (pair, &d) in self.pairs.iter().zip(dec.iter()) {
                    votes[if d > 0.0 { pair.positive } else { pair.negative }] += 1.0;
                }
                argmax(votes)
            })
            .collect()
    }
}

pub fn train_svm(x: ArrayView2<f64>, y: &[Label], cfg: &SvmConfig, weights: &ClassWeights) -> Result<Classifier> {
    train_svm_with_report(x, y, cfg, weights).map(|(m, _)| m)
}

/// `weights` is indexed by label value (see [`super::compute_class_weights`]
/// over five-class counts).
pub fn train_svm_with_report(
    x: ArrayView2<f64>,
    y: &[Label],
    cfg: &SvmConfig,
    weights: &ClassWeights,
) -> Result<(Classifier, SvmFitReport)> {
    cfg.validate()?;
    check_inputs(x, y)?;
    let (classes, yi) = index_classes(y);
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let class_c: Vec<f64> = classes
        .iter()
        .map(|l| {
            weights
                .get(l.index())
                .map(|w| cfg.c * w)
                .ok_or_else(|| Error::InvalidArgument(format!("no class weight for label {l}")))
        })
        .collect::<Result<_>>()?;

    let gamma = match cfg.gamma {
        Gamma::Scale => scale_gamma(x),
        Gamma::Value(g) => g,
    };
    let gram = gram_matrix(x, gamma);

    let mut pairs = Vec::new();
    for a in 0..classes.len() {
        for b in a + 1..classes.len() {
            let rows: Vec<usize> = (0..y.len()).filter(|&i| yi[i] == a || yi[i] == b).collect();
            let ys: Vec<f64> = rows.iter().map(|&i| if yi[i] == a { 1.0 } else { -1.0 }).collect();
            let upper: Vec<f64> = rows.iter().map(|&i| class_c[yi[i]]).collect();
            let max_iter = cfg.max_iter.unwrap_or_else(|| (100 * rows.len()).max(10_000_000));
            let problem = BinaryProblem {
                gram: &gram,
                rows: &rows,
                y: &ys,
                upper: &upper,
            };
            let (alpha, rho, iterations, converged, objective_trace) = problem.solve(cfg.tol, max_iter);
            if !converged {
                log::warn!("svm pair ({a}, {b}) stopped after {iterations} iterations without converging");
            }
            pairs.push(PairSolution {
                positive: a,
                negative: b,
                rows,
                y: ys,
                alpha,
                upper,
                rho,
                iterations,
                converged,
                objective_trace,
            });
        }
    }

    let mut is_support = vec![false; y.len()];
    for p in &pairs {
        for (&r, &a) in p.rows.iter().zip(&p.alpha) {
            if a > 0.0 {
                is_support[r] = true;
            }
        }
    }
    let support_rows: Vec<usize> = (0..y.len()).filter(|&i| is_support[i]).collect();
    let mut slot = vec![u32::MAX; y.len()];
    for (s, &r) in support_rows.iter().enumerate() {
        slot[r] = s as u32;
    }
    let models = pairs
        .iter()
        .map(|p| PairModel {
            positive: p.positive,
            negative: p.negative,
            rho: p.rho,
            coef: p
                .rows
                .iter()
                .zip(p.alpha.iter().zip(&p.y))
                .filter(|(_, (a, _))| **a > 0.0)
                .map(|(&r, (a, yv))| (slot[r], a * yv))
                .collect(),
        })
        .collect();
    let params = SvmParams {
        gamma,
        support: x.select(Axis(0), &support_rows),
        pairs: models,
    };
    Ok((
        Classifier {
            family: Family::Svm,
            dim: x.ncols(),
            classes,
            params: ModelParams::Svm(params),
        },
        SvmFitReport { gamma, pairs },
    ))
}
