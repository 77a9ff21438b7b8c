//! Synthetic corpora whose annotator labels are deterministic functions of
//! well-separated embedding clusters.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::corpus::{AnnotatedComment, AnnotatorId, Dataset, Label, LabelVocab, Provenance};
use crate::embed_store::EmbeddingTable;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n_comments: usize,
    pub n_annotators: usize,
    pub dim: usize,
    pub n_clusters: usize,
    /// Distance of each cluster centre from the origin.
    pub separation: f32,
    /// Half-width of the uniform noise added per coordinate.
    pub noise: f32,
    /// Comments held out as the test set.
    pub n_test: usize,
    /// Every `sparse_every`-th comment omits the last annotator, 0 for never.
    pub sparse_every: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_comments: 200,
            n_annotators: 4,
            dim: 16,
            n_clusters: 8,
            separation: 4.0,
            noise: 0.5,
            n_test: 50,
            sparse_every: 7,
            seed: 0,
        }
    }
}

/// Label annotator `a` gives to every comment of cluster `k`.
pub fn cluster_label(a: usize, k: usize) -> Label {
    Label::new(((k * (a + 1) + a) % Label::NUM_CLASSES) as u8).expect("reduced mod 5")
}

pub fn annotator_name(a: usize) -> AnnotatorId {
    AnnotatorId::new(format!("A{:03}", a + 1)).expect("non-empty")
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub train: Dataset,
    /// Test comments without annotations.
    pub test: Dataset,
    /// The same test comments with their annotations, for scoring.
    pub test_gold: Dataset,
    pub embeddings: EmbeddingTable,
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    if spec.n_clusters == 0 || spec.n_annotators == 0 || spec.dim == 0 {
        return Err(Error::InvalidArgument("clusters, annotators and dim must be positive".into()));
    }
    if spec.n_clusters > 2 * spec.dim {
        return Err(Error::InvalidArgument(format!("{} clusters need dim ≥ {}", spec.n_clusters, spec.n_clusters.div_ceil(2))));
    }
    if spec.n_test == 0 || spec.n_test >= spec.n_comments {
        return Err(Error::InvalidArgument("n_test must lie in [1, n_comments)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut embeddings = EmbeddingTable::new(spec.dim);
    let mut comments = Vec::with_capacity(spec.n_comments);
    for i in 0..spec.n_comments {
        let k = i % spec.n_clusters;
        let mut v: Vec<f32> = (0..spec.dim).map(|_| rng.random_range(-spec.noise..=spec.noise)).collect();
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        v[k / 2] += sign * spec.separation;
        let id = format!("c{i:04}");
        embeddings.push(id.clone(), &v)?;

        let annotators: Vec<usize> = (0..spec.n_annotators)
            .filter(|&a| !(spec.sparse_every > 0 && i % spec.sparse_every == 0 && a + 1 == spec.n_annotators && a > 0))
            .collect();
        comments.push(AnnotatedComment {
            id,
            text: format!("synthetic comment {i} from cluster {k}"),
            annotations: annotators.iter().map(|&a| (annotator_name(a), cluster_label(a, k))).collect(),
            annotator_ids: annotators.iter().map(|&a| annotator_name(a)).collect(),
        });
    }
    let mut order: Vec<usize> = (0..spec.n_comments).collect();
    order.shuffle(&mut rng);
    let mut test_idx = order[..spec.n_test].to_vec();
    test_idx.sort_unstable();
    let is_test = {
        let mut mask = vec![false; spec.n_comments];
        test_idx.iter().for_each(|&i| mask[i] = true);
        mask
    };
    let (test_comments, train_comments): (Vec<_>, Vec<_>) = comments.into_iter().enumerate().partition(|(i, _)| is_test[*i]);
    let strip = |v: Vec<(usize, AnnotatedComment)>| v.into_iter().map(|(_, c)| c).collect::<Vec<_>>();
    let train = Dataset::new(strip(train_comments), LabelVocab::default(), Provenance::Full)?;
    let test_gold = Dataset::new(strip(test_comments), LabelVocab::default(), Provenance::Full)?;
    let test = test_gold.unlabeled();
    Ok(SyntheticCorpus {
        train,
        test,
        test_gold,
        embeddings,
    })
}

/// Writes a dataset as line-delimited JSON with the default field names and
/// canonical label names.
pub fn write_jsonl<W: Write>(mut w: W, d: &Dataset) -> Result<()> {
    for c in d.comments() {
        let record = json!({
            "id": c.id,
            "text": c.text,
            "annotations": c.annotations.iter().map(|(a, l)| json!({"user": a.as_str(), "label": l.canonical_name()})).collect::<Vec<_>>(),
            "annotators": c.annotator_ids.iter().map(AnnotatorId::as_str).collect::<Vec<_>>(),
        });
        writeln!(w, "{record}")?;
    }
    Ok(())
}

/// Paths written by [`SyntheticCorpus::write_to_dir`].
#[derive(Clone, Debug)]
pub struct SyntheticFiles {
    pub train: PathBuf,
    pub test: PathBuf,
    pub test_gold: PathBuf,
    pub embeddings: PathBuf,
    pub config: PathBuf,
}

impl SyntheticCorpus {
    /// Writes `train.jsonl`, `test.jsonl`, `test_gold.jsonl`,
    /// `embeddings.emb1` and a `config.toml` pointing at them, with a small
    /// grid suited to the corpus size.
    pub fn write_to_dir(&self, dir: &Path) -> Result<SyntheticFiles> {
        fs::create_dir_all(dir).map_err(Error::file(dir))?;
        let files = SyntheticFiles {
            train: dir.join("train.jsonl"),
            test: dir.join("test.jsonl"),
            test_gold: dir.join("test_gold.jsonl"),
            embeddings: dir.join("embeddings.emb1"),
            config: dir.join("config.toml"),
        };
        for (path, d) in [(&files.train, &self.train), (&files.test, &self.test), (&files.test_gold, &self.test_gold)] {
            let mut w = BufWriter::new(fs::File::create(path).map_err(Error::file(path))?);
            write_jsonl(&mut w, d)?;
            w.flush().map_err(Error::file(path))?;
        }
        let mut w = BufWriter::new(fs::File::create(&files.embeddings).map_err(Error::file(&files.embeddings))?);
        self.embeddings.write_to(&mut w)?;
        w.flush().map_err(Error::file(&files.embeddings))?;
        fs::write(&files.config, SMALL_CONFIG).map_err(Error::file(&files.config))?;
        Ok(files)
    }
}

pub const SMALL_CONFIG: &str = r#"seed = 1
folds = 5
split_ratio = 0.8
families = ["mlp", "svm", "rf"]
output_dir = "out"

[data]
train = "train.jsonl"
test = "test.jsonl"
embeddings = "embeddings.emb1"

[grid]
hidden_size = [64]
c = [1.0, 11.0]
n_estimators = [10, 60]
max_depth = [1, 11]

[mlp]
max_epochs = 60
"#;
