//! Class balancing: "balanced" class weights and random oversampling.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Label, LabeledSet};
use crate::error::{Error, Result};

/// Per-class loss multipliers `n / (k · count[c])`, where `k` is the number
/// of classes present. Held as exact rationals; absent classes have no
/// entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassWeights {
    weights: Vec<Option<Ratio<u64>>>,
}

impl ClassWeights {
    /// Weight of class index `c` as a float, `None` if the class was absent.
    pub fn get(&self, c: usize) -> Option<f64> {
        self.exact(c).map(|r| *r.numer() as f64 / *r.denom() as f64)
    }

    pub fn exact(&self, c: usize) -> Option<Ratio<u64>> {
        self.weights.get(c).copied().flatten()
    }

    /// Number of class slots, present or not.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `(class index, weight)` for present classes.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.weights.len()).filter_map(|c| self.get(c).map(|w| (c, w)))
    }

    /// Uniform weights over `len` class slots.
    pub fn uniform(len: usize) -> Self {
        ClassWeights {
            weights: vec![Some(Ratio::from_integer(1)); len],
        }
    }
}

pub fn compute_class_weights(counts: &[usize]) -> Result<ClassWeights> {
    let n: u64 = counts.iter().map(|&c| c as u64).sum();
    if n == 0 {
        return Err(Error::AllZeroCounts);
    }
    let present = counts.iter().filter(|&&c| c > 0).count() as u64;
    let weights = counts
        .iter()
        .map(|&c| (c > 0).then(|| Ratio::new(n, present * c as u64)))
        .collect();
    Ok(ClassWeights { weights })
}

/// Indices into `labels` after random oversampling: every original index in
/// order, followed by with-replacement draws that lift each minority class
/// to the majority count (classes in ascending order).
pub fn oversample_indices(labels: &[Label], seed: u64) -> Vec<usize> {
    let mut members: [Vec<usize>; Label::NUM_CLASSES] = Default::default();
    for (i, l) in labels.iter().enumerate() {
        members[l.index()].push(i);
    }
    let majority = members.iter().map(Vec::len).max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<usize> = (0..labels.len()).collect();
    for class in &members {
        if class.is_empty() {
            continue;
        }
        for _ in class.len()..majority {
            out.push(class[rng.random_range(0..class.len())]);
        }
    }
    out
}

/// Random oversampling of a labeled set. Resampled rows repeat their
/// comment id.
pub fn oversample(s: &LabeledSet, seed: u64) -> LabeledSet {
    let indices = oversample_indices(&s.labels(), seed);
    LabeledSet {
        annotator: s.annotator.clone(),
        rows: indices.into_iter().map(|i| s.rows[i].clone()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{count_labels, label_counts, AnnotatorId};
    use proptest::prelude::*;

    fn set(labels: &[u8]) -> LabeledSet {
        LabeledSet::new(
            AnnotatorId::new("A001").unwrap(),
            labels
                .iter()
                .enumerate()
                .map(|(i, &l)| (format!("c{i}"), Label::new(l).unwrap()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn balanced_weights_examples() {
        let w = compute_class_weights(&[8, 2]).unwrap();
        assert_eq!(w.get(0), Some(0.625));
        assert_eq!(w.get(1), Some(2.5));

        let w = compute_class_weights(&[5, 5]).unwrap();
        assert_eq!((w.get(0), w.get(1)), (Some(1.0), Some(1.0)));

        let w = compute_class_weights(&[0, 0, 7, 0, 0]).unwrap();
        assert_eq!(w.get(2), Some(1.0));
        assert_eq!(w.iter().count(), 1);
        assert_eq!(w.get(0), None);
    }

    #[test]
    fn all_zero_counts_rejected() {
        assert!(matches!(compute_class_weights(&[0, 0, 0]), Err(Error::AllZeroCounts)));
    }

    #[test]
    fn oversample_examples() {
        let mut labels = vec![0u8; 8];
        labels.extend([1, 1]);
        let out = oversample(&set(&labels), 3);
        assert_eq!(label_counts(&out), [8, 8, 0, 0, 0]);
        assert_eq!(&out.rows[..10], &set(&labels).rows[..]);

        let balanced = set(&[0, 1, 2, 0, 1, 2]);
        assert_eq!(oversample(&balanced, 1), balanced);

        let single = set(&[3, 3, 3]);
        assert_eq!(oversample(&single, 1), single);
        assert_eq!(oversample(&set(&[4]), 9), set(&[4]));
    }

    proptest! {
        #[test]
        fn weighted_counts_sum_to_n(counts in prop::collection::vec(0usize..500, 1..6)) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let w = compute_class_weights(&counts).unwrap();
            let total: Ratio<u64> = counts
                .iter()
                .enumerate()
                .filter_map(|(c, &k)| w.exact(c).map(|r| r * Ratio::from_integer(k as u64)))
                .fold(Ratio::from_integer(0), |a, b| a + b);
            prop_assert_eq!(total, Ratio::from_integer(counts.iter().sum::<usize>() as u64));
        }

        #[test]
        fn oversampling_equalizes(labels in prop::collection::vec(0u8..5, 1..60), seed in any::<u64>()) {
            let labels: Vec<Label> = labels.into_iter().map(|l| Label::new(l).unwrap()).collect();
            let before = count_labels(labels.iter().copied());
            let majority = *before.iter().max().unwrap();
            let idx = oversample_indices(&labels, seed);
            let after = count_labels(idx.iter().map(|&i| labels[i]));
            for c in 0..5 {
                prop_assert_eq!(after[c], if before[c] > 0 { majority } else { 0 });
            }
            prop_assert_eq!(idx.clone(), oversample_indices(&labels, seed));
        }
    }
}
