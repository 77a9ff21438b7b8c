//! Annotated comment corpus: parsing, validation, splitting and
//! annotator-specific views.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Ordinal severity label. 0 is not sexist, 1..=4 are sexist with
/// increasing severity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Label(u8);

impl Label {
    pub const NUM_CLASSES: usize = 5;
    pub const ALL: [Label; 5] = [Label(0), Label(1), Label(2), Label(3), Label(4)];
    const CANONICAL: [&'static str; 5] = ["0-absence", "1-mild", "2-present", "3-strong", "4-extreme"];

    pub fn new(value: u8) -> Result<Self> {
        if (value as usize) < Self::NUM_CLASSES {
            Ok(Label(value))
        } else {
            Err(Error::InvalidLabel(value as i64))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_sexist(self) -> bool {
        self.0 >= 1
    }

    pub fn canonical_name(self) -> &'static str {
        Self::CANONICAL[self.index()]
    }
}

impl TryFrom<u8> for Label {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        Label::new(value)
    }
}

impl From<Label> for u8 {
    fn from(label: Label) -> u8 {
        label.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnnotatorId(String);

impl AnnotatorId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::InvalidArgument("empty annotator id".into()));
        }
        Ok(AnnotatorId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AnnotatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedComment {
    pub id: String,
    pub text: String,
    /// Empty on unlabeled (test) data.
    pub annotations: Vec<(AnnotatorId, Label)>,
    /// Always present; equals the annotating ids whenever annotations exist.
    pub annotator_ids: Vec<AnnotatorId>,
}

impl AnnotatedComment {
    pub fn labels(&self) -> Vec<Label> {
        self.annotations.iter().map(|(_, l)| *l).collect()
    }

    /// Copy without annotations, the shape of a test record.
    pub fn unlabeled(&self) -> AnnotatedComment {
        AnnotatedComment {
            id: self.id.clone(),
            text: self.text.clone(),
            annotations: Vec::new(),
            annotator_ids: self.annotator_ids.clone(),
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty comment id".into());
        }
        let mut seen = HashSet::new();
        for (a, _) in &self.annotations {
            if !seen.insert(a) {
                return Err(format!("duplicate annotator {a}"));
            }
        }
        if !self.annotations.is_empty() {
            let listed: BTreeSet<&AnnotatorId> = self.annotator_ids.iter().collect();
            let annotating: BTreeSet<&AnnotatorId> = self.annotations.iter().map(|(a, _)| a).collect();
            if listed != annotating || listed.len() != self.annotator_ids.len() {
                return Err("annotator list does not match the annotating ids".into());
            }
        }
        Ok(())
    }
}

/// Mapping from source label strings to ordinal labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVocab {
    map: BTreeMap<String, Label>,
}

impl LabelVocab {
    pub fn new(map: BTreeMap<String, Label>) -> Self {
        LabelVocab { map }
    }

    pub fn get(&self, raw: &str) -> Option<Label> {
        self.map.get(raw).copied()
    }

    pub fn insert(&mut self, raw: impl Into<String>, label: Label) {
        self.map.insert(raw.into(), label);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Label)> {
        self.map.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl Default for LabelVocab {
    /// The canonical names `0-absence` .. `4-extreme`.
    fn default() -> Self {
        LabelVocab {
            map: Label::ALL.iter().map(|l| (l.canonical_name().to_string(), *l)).collect(),
        }
    }
}

/// JSON field names of the line-delimited input records.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldNames {
    pub id: String,
    pub text: String,
    pub annotations: String,
    pub annotators: String,
    pub user: String,
    pub label: String,
}

impl Default for FieldNames {
    fn default() -> Self {
        FieldNames {
            id: "id".into(),
            text: "text".into(),
            annotations: "annotations".into(),
            annotators: "annotators".into(),
            user: "user".into(),
            label: "label".into(),
        }
    }
}

/// Where a dataset came from in the exploration/final-training protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// The full provided training file.
    Full,
    /// The reduced training part of an exploration split.
    ExplorationTrain,
    /// The held-back part of an exploration split.
    Validation,
    /// Unlabeled evaluation data.
    Test,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    comments: Vec<AnnotatedComment>,
    label_vocab: LabelVocab,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(comments: Vec<AnnotatedComment>, label_vocab: LabelVocab, provenance: Provenance) -> Result<Self> {
        let mut ids = HashSet::new();
        for (i, c) in comments.iter().enumerate() {
            c.validate().map_err(|message| Error::Parse { line: i + 1, message })?;
            if !ids.insert(c.id.as_str()) {
                return Err(Error::DuplicateComment {
                    line: i + 1,
                    id: c.id.clone(),
                });
            }
        }
        Ok(Dataset {
            comments,
            label_vocab,
            provenance,
        })
    }

    pub fn comments(&self) -> &[AnnotatedComment] {
        &self.comments
    }

    pub fn len(&self) -> usize {
        self.comments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comments.is_empty()
    }

    pub fn label_vocab(&self) -> &LabelVocab {
        &self.label_vocab
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn ids(&self) -> Vec<String> {
        self.comments.iter().map(|c| c.id.clone()).collect()
    }

    pub fn total_annotations(&self) -> usize {
        self.comments.iter().map(|c| c.annotations.len()).sum()
    }

    /// Annotators with at least one annotation, sorted.
    pub fn annotators(&self) -> BTreeSet<AnnotatorId> {
        self.comments
            .iter()
            .flat_map(|c| c.annotations.iter().map(|(a, _)| a.clone()))
            .collect()
    }

    /// Annotators listed on any comment, annotated or not, sorted.
    pub fn listed_annotators(&self) -> BTreeSet<AnnotatorId> {
        self.comments.iter().flat_map(|c| c.annotator_ids.iter().cloned()).collect()
    }

    /// Same comments with annotations stripped, as test data would arrive.
    pub fn unlabeled(&self) -> Dataset {
        Dataset {
            comments: self.comments.iter().map(AnnotatedComment::unlabeled).collect(),
            label_vocab: self.label_vocab.clone(),
            provenance: Provenance::Test,
        }
    }

    fn subset(&self, indices: &[usize], provenance: Provenance) -> Dataset {
        Dataset {
            comments: indices.iter().map(|&i| self.comments[i].clone()).collect(),
            label_vocab: self.label_vocab.clone(),
            provenance,
        }
    }
}

/// One annotator's labels, in corpus order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledSet {
    pub annotator: AnnotatorId,
    pub rows: Vec<(String, Label)>,
}

impl LabeledSet {
    pub fn new(annotator: AnnotatorId, rows: Vec<(String, Label)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (id, _) in &rows {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate comment id {id:?} in labeled set")));
            }
        }
        Ok(LabeledSet { annotator, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.rows.iter().map(|(id, _)| id.clone()).collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|(_, l)| *l).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledSet {
        LabeledSet {
            annotator: self.annotator.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

/// Train/held-out row indices of one cross-validation fold, each ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub held_out: Vec<usize>,
}

pub fn parse_dataset<R: BufRead>(reader: R, vocab: &LabelVocab) -> Result<Dataset> {
    parse_dataset_with(reader, vocab, &FieldNames::default())
}

pub fn parse_dataset_with<R: BufRead>(reader: R, vocab: &LabelVocab, fields: &FieldNames) -> Result<Dataset> {
    let mut comments = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let comment = parse_record(&line, line_no, vocab, fields)?;
        if !ids.insert(comment.id.clone()) {
            return Err(Error::DuplicateComment {
                line: line_no,
                id: comment.id,
            });
        }
        comments.push(comment);
    }
    Ok(Dataset {
        comments,
        label_vocab: vocab.clone(),
        provenance: Provenance::Full,
    })
}

fn parse_record(line: &str, line_no: usize, vocab: &LabelVocab, fields: &FieldNames) -> Result<AnnotatedComment> {
    let malformed = |message: String| Error::Parse { line: line_no, message };
    let value: Value = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| malformed("record is not an object".into()))?;

    let id = match obj.get(&fields.id) {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => return Err(malformed(format!("missing or empty field {:?}", fields.id))),
    };
    let text = match obj.get(&fields.text) {
        Some(Value::String(s)) => s.clone(),
        None | Some(Value::Null) => String::new(),
        _ => return Err(malformed(format!("field {:?} is not a string", fields.text))),
    };

    let mut annotations: Vec<(AnnotatorId, Label)> = Vec::new();
    match obj.get(&fields.annotations) {
        None | Some(Value::Null) => {}
        Some(Value::Array(items)) => {
            for item in items {
                let entry = item
                    .as_object()
                    .ok_or_else(|| malformed("annotation is not an object".into()))?;
                let user = entry
                    .get(&fields.user)
                    .and_then(Value::as_str)
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| malformed(format!("annotation without {:?}", fields.user)))?;
                let label = match entry.get(&fields.label) {
                    Some(Value::String(raw)) => vocab.get(raw).ok_or_else(|| Error::UnknownLabel {
                        line: line_no,
                        label: raw.clone(),
                    })?,
                    Some(Value::Number(n)) => {
                        let v = n.as_i64().ok_or_else(|| Error::UnknownLabel {
                            line: line_no,
                            label: n.to_string(),
                        })?;
                        if !(0..Label::NUM_CLASSES as i64).contains(&v) {
                            return Err(Error::UnknownLabel {
                                line: line_no,
                                label: v.to_string(),
                            });
                        }
                        Label(v as u8)
                    }
                    _ => return Err(malformed(format!("annotation without {:?}", fields.label))),
                };
                let annotator = AnnotatorId(user.to_string());
                if annotations.iter().any(|(a, _)| *a == annotator) {
                    return Err(Error::DuplicateAnnotator {
                        line: line_no,
                        comment: id,
                        annotator: annotator.0,
                    });
                }
                annotations.push((annotator, label));
            }
        }
        Some(_) => return Err(malformed(format!("field {:?} is not a list", fields.annotations))),
    }

    let annotator_ids = match obj.get(&fields.annotators) {
        None | Some(Value::Null) => annotations.iter().map(|(a, _)| a.clone()).collect(),
        Some(Value::Array(items)) => {
            let mut listed: Vec<AnnotatorId> = Vec::with_capacity(items.len());
            for item in items {
                let user = item
                    .as_str()
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| malformed("annotator id is not a nonempty string".into()))?;
                let annotator = AnnotatorId(user.to_string());
                if listed.contains(&annotator) {
                    return Err(Error::DuplicateAnnotator {
                        line: line_no,
                        comment: id,
                        annotator: annotator.0,
                    });
                }
                listed.push(annotator);
            }
            listed
        }
        Some(_) => return Err(malformed(format!("field {:?} is not a list", fields.annotators))),
    };

    let comment = AnnotatedComment {
        id,
        text,
        annotations,
        annotator_ids,
    };
    comment.validate().map_err(malformed)?;
    Ok(comment)
}

/// Seeded random split into `⌈ratio·n⌉` and `n − ⌈ratio·n⌉` comments. Both
/// parts keep the original comment order.
pub fn split_train_validation(d: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio {ratio} outside (0, 1)")));
    }
    let n = d.len();
    let n_train = ceil_fraction(ratio, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, valid) = order.split_at(n_train);
    let mut train = train.to_vec();
    let mut valid = valid.to_vec();
    train.sort_unstable();
    valid.sort_unstable();
    Ok((
        d.subset(&train, Provenance::ExplorationTrain),
        d.subset(&valid, Provenance::Validation),
    ))
}

/// `⌈ratio·n⌉`, snapping products within 1e-9 of an integer so that
/// e.g. 0.7·10 gives 7 and not 8.
pub(crate) fn ceil_fraction(ratio: f64, n: usize) -> usize {
    let x = ratio * n as f64;
    let rounded = x.round();
    if (x - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        x.ceil() as usize
    }
}

pub fn annotator_view(d: &Dataset, a: &AnnotatorId) -> LabeledSet {
    let rows = d
        .comments
        .iter()
        .filter_map(|c| {
            c.annotations
                .iter()
                .find(|(who, _)| who == a)
                .map(|(_, label)| (c.id.clone(), *label))
        })
        .collect();
    LabeledSet {
        annotator: a.clone(),
        rows,
    }
}

pub fn kfold_split(s: &LabeledSet, k: usize, seed: u64) -> Result<Vec<Fold>> {
    stratified_folds(&s.labels(), k, seed)
}

/// Stratified k-fold assignment: rows of each class are shuffled and dealt
/// round-robin, continuing one global counter across classes so fold sizes
/// differ by at most one.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k}, need at least 2 folds")));
    }
    if labels.len() < k {
        return Err(Error::TooFewRows {
            rows: labels.len(),
            folds: k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    let mut counter = 0usize;
    for class in Label::ALL {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == class)
            .map(|(i, _)| i)
            .collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = counter % k;
            counter += 1;
        }
    }
    Ok((0..k)
        .map(|fold| {
            let (held_out, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| assignment[i] == fold);
            Fold { train, held_out }
        })
        .collect())
}

pub fn label_counts(s: &LabeledSet) -> [usize; Label::NUM_CLASSES] {
    count_labels(s.rows.iter().map(|(_, l)| *l))
}

pub fn count_labels(labels: impl IntoIterator<Item = Label>) -> [usize; Label::NUM_CLASSES] {
    let mut counts = [0usize; Label::NUM_CLASSES];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}


#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Dataset> {
        parse_dataset(s.as_bytes(), &LabelVocab::default())
    }

    fn id(s: &str) -> AnnotatorId {
        AnnotatorId::new(s).unwrap()
    }

    fn synthetic(n: usize) -> Dataset {
        let comments = (0..n)
            .map(|i| AnnotatedComment {
                id: format!("c{i}"),
                text: String::new(),
                annotations: vec![(id("A001"), Label::ALL[i % 5])],
                annotator_ids: vec![id("A001")],
            })
            .collect();
        Dataset::new(comments, LabelVocab::default(), Provenance::Full).unwrap()
    }

    #[test]
    fn parses_minimal_record() {
        let d = parse(r#"{"id":"x","text":"…","annotations":[{"user":"A001","label":0},{"user":"A002","label":"3-strong"}]}"#).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.comments()[0].annotations.len(), 2);
        assert_eq!(d.comments()[0].annotator_ids, vec![id("A001"), id("A002")]);
    }

    #[test]
    fn rejects_duplicate_annotator() {
        let err = parse(r#"{"id":"x","text":"","annotations":[{"user":"A001","label":0},{"user":"A001","label":1}]}"#).unwrap_err();
        assert!(matches!(err, Error::DuplicateAnnotator { line: 1, .. }), "{err}");
        assert!(err.to_string().contains("duplicate annotator"));
    }

    #[test]
    fn rejects_unknown_label_and_reports_line() {
        let input = "{\"id\":\"a\",\"text\":\"\"}\n{\"id\":\"b\",\"text\":\"\",\"annotations\":[{\"user\":\"A001\",\"label\":\"5-worse\"}]}\n";
        match parse(input).unwrap_err() {
            Error::UnknownLabel { line, label } => {
                assert_eq!(line, 2);
                assert_eq!(label, "5-worse");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_duplicate_comment_and_malformed_line() {
        let dup = "{\"id\":\"a\",\"text\":\"\"}\n{\"id\":\"a\",\"text\":\"\"}\n";
        assert!(matches!(parse(dup).unwrap_err(), Error::DuplicateComment { line: 2, .. }));
        let bad = "{\"id\":\"a\",\"text\":\"\"}\n\n{not json\n";
        assert!(matches!(parse(bad).unwrap_err(), Error::Parse { line: 3, .. }));
    }

    #[test]
    fn test_records_carry_annotator_ids_only() {
        let d = parse(r#"{"id":"t1","text":"hi","annotators":["A001","A004"]}"#).unwrap();
        let c = &d.comments()[0];
        assert!(c.annotations.is_empty());
        assert_eq!(c.annotator_ids, vec![id("A001"), id("A004")]);
    }

    #[test]
    fn annotator_list_must_match_annotations() {
        let err = parse(r#"{"id":"x","text":"","annotations":[{"user":"A001","label":0}],"annotators":["A001","A002"]}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn custom_field_names_and_vocab() {
        let mut vocab = LabelVocab::default();
        vocab.insert("0-Kein", Label::new(0).unwrap());
        vocab.insert("3-Stark", Label::new(3).unwrap());
        let fields = FieldNames {
            id: "comment_id".into(),
            annotations: "votes".into(),
            user: "who".into(),
            ..FieldNames::default()
        };
        let line = r#"{"comment_id":"q","text":"","votes":[{"who":"A003","label":"3-Stark"},{"who":"A004","label":"0-Kein"}]}"#;
        let d = parse_dataset_with(line.as_bytes(), &vocab, &fields).unwrap();
        assert_eq!(d.comments()[0].labels(), vec![Label(3), Label(0)]);
    }

    #[test]
    fn worked_examples_views_and_counts() {
        let d = parse(fixtures::EXAMPLES_JSONL).unwrap();
        assert_eq!(d.len(), 2);
        let a002 = annotator_view(&d, &id("A002"));
        assert_eq!(a002.rows[0], ("e1e80ff680f874d49ddfe33ac846a454".to_string(), Label(3)));
        assert_eq!(a002.rows[1].1, Label(0));
        assert!(annotator_view(&d, &id("A006")).is_empty());
        assert!(annotator_view(&d, &id("A011")).is_empty());

        let first = d.comments()[0].labels();
        assert_eq!(count_labels(first), [1, 0, 1, 5, 3]);
    }

    #[test]
    fn label_counts_edge_cases() {
        let empty = LabeledSet::new(id("A001"), vec![]).unwrap();
        assert_eq!(label_counts(&empty), [0; 5]);
        let rows = (0..3).map(|i| (format!("c{i}"), Label(2))).collect();
        assert_eq!(label_counts(&LabeledSet::new(id("A001"), rows).unwrap()), [0, 0, 3, 0, 0]);
    }

    #[test]
    fn absent_annotator_in_single_comment_dataset() {
        let d = synthetic(1);
        assert!(annotator_view(&d, &id("A999")).is_empty());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = synthetic(10);
        let (a, b) = split_train_validation(&d, 0.8, 7).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        let ids_a: HashSet<String> = a.ids().into_iter().collect();
        assert!(b.ids().iter().all(|i| !ids_a.contains(i)));
        assert_eq!(a.provenance(), Provenance::ExplorationTrain);
        assert_eq!(b.provenance(), Provenance::Validation);
        let (a2, b2) = split_train_validation(&d, 0.8, 7).unwrap();
        assert_eq!(a.ids(), a2.ids());
        assert_eq!(b.ids(), b2.ids());
    }

    #[test]
    fn split_ceiling_arithmetic() {
        assert_eq!(ceil_fraction(0.8, 5998), 4799);
        assert_eq!(5998 - ceil_fraction(0.8, 5998), 1199);
        assert_eq!(ceil_fraction(0.7, 10), 7);
        let d = synthetic(5998);
        let (a, b) = split_train_validation(&d, 0.8, 1).unwrap();
        assert_eq!((a.len(), b.len()), (4799, 1199));
    }

    #[test]
    fn split_errors() {
        let empty = Dataset::new(vec![], LabelVocab::default(), Provenance::Full).unwrap();
        assert!(matches!(split_train_validation(&empty, 0.8, 0), Err(Error::EmptyDataset)));
        assert!(split_train_validation(&synthetic(3), 1.0, 0).is_err());
    }

    #[test]
    fn kfold_partition_arithmetic() {
        let labels: Vec<Label> = (0..10).map(|i| Label::ALL[i % 5]).collect();
        let folds = stratified_folds(&labels, 5, 3).unwrap();
        assert_eq!(folds.len(), 5);
        let mut all: Vec<usize> = folds.iter().flat_map(|f| f.held_out.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        for f in &folds {
            assert_eq!(f.held_out.len(), 2);
            assert_eq!(f.train.len(), 8);
        }
    }

    #[test]
    fn kfold_stratifies_minority_class() {
        let mut labels = vec![Label(0); 8];
        labels.extend([Label(1), Label(1)]);
        for seed in 0..20 {
            let folds = stratified_folds(&labels, 2, seed).unwrap();
            for f in &folds {
                let minority = f.held_out.iter().filter(|&&i| labels[i] == Label(1)).count();
                assert_eq!(minority, 1);
            }
        }
    }

    #[test]
    fn kfold_too_few_rows() {
        let labels = vec![Label(0); 4];
        assert!(matches!(stratified_folds(&labels, 5, 0), Err(Error::TooFewRows { rows: 4, folds: 5 })));
    }
}
