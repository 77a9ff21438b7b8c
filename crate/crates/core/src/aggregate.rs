//! Aggregation of one comment's per-annotator labels into the five
//! categorical targets and the two label distributions.
//!
//! Every function takes the multiset of labels for one comment, gold or
//! predicted, and rejects an empty multiset.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

pub const NOT_SEXIST: u8 = 0;
pub const SEXIST: u8 = 1;
pub const AGREED: u8 = 0;
pub const DISAGREED: u8 = 1;

/// Nonempty set of equally valid categories (values 0..8), as a bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ValidLabelSet(u8);

impl ValidLabelSet {
    pub fn single(category: u8) -> Self {
        assert!(category < 8, "category {category} out of range");
        ValidLabelSet(1 << category)
    }

    pub fn from_categories(categories: impl IntoIterator<Item = u8>) -> Result<Self> {
        let mut mask = 0u8;
        for c in categories {
            if c >= 8 {
                return Err(Error::OutsideDomain { value: c });
            }
            mask |= 1 << c;
        }
        if mask == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(ValidLabelSet(mask))
    }

    pub fn contains(self, category: u8) -> bool {
        category < 8 && self.0 & (1 << category) != 0
    }

    pub fn smallest(self) -> u8 {
        self.0.trailing_zeros() as u8
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: ValidLabelSet) -> ValidLabelSet {
        ValidLabelSet(self.0 | other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = u8> {
        (0..8u8).filter(move |c| self.contains(*c))
    }
}

impl fmt::Debug for ValidLabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// `a|b|c` notation, used in gold submission files.
impl fmt::Display for ValidLabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join("|"))
    }
}

/// Probability vector over 2 or 5 classes; every entry is `k/n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    probs: Vec<f64>,
}

impl LabelDistribution {
    /// Checks non-negativity and unit sum within `1e-6`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(probs, 1e-6)
    }

    /// As [`LabelDistribution::new`] with a caller-chosen sum tolerance, for
    /// values that went through rounded text.
    pub fn with_tolerance(probs: Vec<f64>, tol: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty distribution".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {p} is negative or not finite")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(LabelDistribution { probs })
    }

    fn from_counts(counts: &[usize]) -> Self {
        let n: usize = counts.iter().sum();
        LabelDistribution {
            probs: counts.iter().map(|&k| k as f64 / n as f64).collect(),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// How a multiclass majority tie is resolved into a valid set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieMode {
    /// Only the labels tied at the maximal count.
    #[default]
    Maximal,
    /// Every label any annotator assigned.
    AllAssigned,
}

/// The five categorical targets, in submission column order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Target {
    BinMaj,
    BinOne,
    BinAll,
    MultiMaj,
    DisagreeBin,
}

impl Target {
    pub const ALL: [Target; 5] = [
        Target::BinMaj,
        Target::BinOne,
        Target::BinAll,
        Target::MultiMaj,
        Target::DisagreeBin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Target::BinMaj => "bin_maj",
            Target::BinOne => "bin_one",
            Target::BinAll => "bin_all",
            Target::MultiMaj => "multi_maj",
            Target::DisagreeBin => "disagree_bin",
        }
    }

    pub fn from_name(name: &str) -> Option<Target> {
        Target::ALL.into_iter().find(|t| t.name() == name)
    }

    pub fn domain(self) -> &'static [u8] {
        match self {
            Target::MultiMaj => &[0, 1, 2, 3, 4],
            _ => &[0, 1],
        }
    }
}

fn check_nonempty(labels: &[Label]) -> Result<()> {
    if labels.is_empty() {
        Err(Error::EmptyInput)
    } else {
        Ok(())
    }
}

fn sexist_split(labels: &[Label]) -> (usize, usize) {
    let sexist = labels.iter().filter(|l| l.is_sexist()).count();
    (labels.len() - sexist, sexist)
}

pub fn majority_binary(labels: &[Label]) -> Result<ValidLabelSet> {
    check_nonempty(labels)?;
    let (not_sexist, sexist) = sexist_split(labels);
    Ok(match sexist.cmp(&not_sexist) {
        std::cmp::Ordering::Greater => ValidLabelSet::single(SEXIST),
        std::cmp::Ordering::Less => ValidLabelSet::single(NOT_SEXIST),
        std::cmp::Ordering::Equal => ValidLabelSet::single(NOT_SEXIST).union(ValidLabelSet::single(SEXIST)),
    })
}

pub fn one_binary(labels: &[Label]) -> Result<u8> {
    check_nonempty(labels)?;
    Ok(if labels.iter().any(|l| l.is_sexist()) { SEXIST } else { NOT_SEXIST })
}

pub fn all_binary(labels: &[Label]) -> Result<u8> {
    check_nonempty(labels)?;
    Ok(if labels.iter().all(|l| l.is_sexist()) { SEXIST } else { NOT_SEXIST })
}

pub fn majority_multiclass(labels: &[Label], mode: TieMode) -> Result<ValidLabelSet> {
    check_nonempty(labels)?;
    let mut counts = [0usize; Label::NUM_CLASSES];
    for l in labels {
        counts[l.index()] += 1;
    }
    let max = *counts.iter().max().expect("five classes");
    let tied: Vec<u8> = (0..Label::NUM_CLASSES as u8).filter(|&c| counts[c as usize] == max).collect();
    if tied.len() == 1 {
        return ValidLabelSet::from_categories(tied);
    }
    match mode {
        TieMode::Maximal => ValidLabelSet::from_categories(tied),
        TieMode::AllAssigned => ValidLabelSet::from_categories((0..Label::NUM_CLASSES as u8).filter(|&c| counts[c as usize] > 0)),
    }
}

pub fn disagreement(labels: &[Label]) -> Result<u8> {
    check_nonempty(labels)?;
    let (not_sexist, sexist) = sexist_split(labels);
    Ok(if not_sexist > 0 && sexist > 0 { DISAGREED } else { AGREED })
}

/// `[share of 0, share of 1..=4]`.
pub fn dist_binary(labels: &[Label]) -> Result<LabelDistribution> {
    check_nonempty(labels)?;
    let (not_sexist, sexist) = sexist_split(labels);
    Ok(LabelDistribution::from_counts(&[not_sexist, sexist]))
}

pub fn dist_multiclass(labels: &[Label]) -> Result<LabelDistribution> {
    check_nonempty(labels)?;
    let mut counts = [0usize; Label::NUM_CLASSES];
    for l in labels {
        counts[l.index()] += 1;
    }
    Ok(LabelDistribution::from_counts(&counts))
}

/// All five targets of one comment as valid sets, in [`Target::ALL`] order.
pub fn subtask1_valid_sets(labels: &[Label], mode: TieMode) -> Result<[ValidLabelSet; 5]> {
    Ok([
        majority_binary(labels)?,
        ValidLabelSet::single(one_binary(labels)?),
        ValidLabelSet::single(all_binary(labels)?),
        majority_multiclass(labels, mode)?,
        ValidLabelSet::single(disagreement(labels)?),
    ])
}

/// Single-valued emission of the five targets: the smallest element of each
/// valid set.
pub fn subtask1_emit(labels: &[Label], mode: TieMode) -> Result<[u8; 5]> {
    Ok(subtask1_valid_sets(labels, mode)?.map(ValidLabelSet::smallest))
}
