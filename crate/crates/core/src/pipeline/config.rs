//! Declarative experiment configuration, read from TOML.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregate::TieMode;
use crate::classifiers::forest::{MAX_DEPTH_RANGE, N_ESTIMATORS_RANGE};
use crate::classifiers::mlp::HIDDEN_RANGE;
use crate::classifiers::svm::C_RANGE;
use crate::classifiers::{Family, MlpConfig, SvmConfig};
use crate::corpus::{FieldNames, Label, LabelVocab};
use crate::error::{Error, Result};

/// Input locations and record layout.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Annotated training records (line-delimited JSON).
    pub train: Option<PathBuf>,
    /// Unannotated test records.
    pub test: Option<PathBuf>,
    /// EMB1 file covering every train and test id.
    pub embeddings: Option<PathBuf>,
    pub fields: FieldNames,
    /// Source label string to label value. Canonical names when absent.
    pub labels: Option<BTreeMap<String, u8>>,
}

/// Hyperparameter values explored per family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub hidden_size: Vec<usize>,
    pub n_estimators: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub c: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            hidden_size: vec![64, 128, 256, 512, 1024, 2048],
            n_estimators: (10..=560).step_by(50).collect(),
            max_depth: (1..=91).step_by(10).collect(),
            c: (1..=91).step_by(10).map(f64::from).collect(),
        }
    }
}

/// One point of a family's hyperparameter grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Hyperparams {
    Mlp {
        hidden_size: usize,
    },
    Svm {
        c: f64,
    },
    #[serde(rename = "rf")]
    Forest {
        n_estimators: usize,
        max_depth: usize,
    },
}

impl Hyperparams {
    pub fn family(&self) -> Family {
        match self {
            Hyperparams::Mlp { .. } => Family::Mlp,
            Hyperparams::Svm { .. } => Family::Svm,
            Hyperparams::Forest { .. } => Family::Forest,
        }
    }
}

impl GridConfig {
    /// Grid points of one family in exploration order. Forest points vary
    /// `max_depth` fastest.
    pub fn points(&self, family: Family) -> Vec<Hyperparams> {
        match family {
            Family::Mlp => self.hidden_size.iter().map(|&hidden_size| Hyperparams::Mlp { hidden_size }).collect(),
            Family::Svm => self.c.iter().map(|&c| Hyperparams::Svm { c }).collect(),
            Family::Forest => self
                .n_estimators
                .iter()
                .flat_map(|&n_estimators| {
                    self.max_depth.iter().map(move |&max_depth| Hyperparams::Forest {
                        n_estimators,
                        max_depth,
                    })
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn check<T: PartialOrd + std::fmt::Display + Copy>(name: &str, values: &[T], (lo, hi): (T, T)) -> Result<()> {
            match values.iter().find(|v| !(lo..=hi).contains(*v)) {
                Some(v) => Err(Error::Config(format!("grid.{name} value {v} outside [{lo}, {hi}]"))),
                None => Ok(()),
            }
        }
        check("hidden_size", &self.hidden_size, HIDDEN_RANGE)?;
        check("n_estimators", &self.n_estimators, N_ESTIMATORS_RANGE)?;
        check("max_depth", &self.max_depth, MAX_DEPTH_RANGE)?;
        check("c", &self.c, C_RANGE)
    }
}

/// Training settings shared by every grid point. Grid-controlled fields
/// (`hidden_size`, `c`) and seeds are overwritten per model.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelSettings {
    pub mlp: MlpConfig,
    pub svm: SvmConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    /// Families compared during exploration.
    pub families: Vec<Family>,
    /// Family used for final training; the exploration winner when absent.
    pub family: Option<Family>,
    pub grid: GridConfig,
    pub mlp: MlpConfig,
    pub svm: SvmConfig,
    pub seed: u64,
    pub folds: usize,
    pub split_ratio: f64,
    pub tie_mode: TieMode,
    pub js_base: f64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataConfig::default(),
            families: Family::ALL.to_vec(),
            family: None,
            grid: GridConfig::default(),
            mlp: MlpConfig::default(),
            svm: SvmConfig::default(),
            seed: 0,
            folds: 5,
            split_ratio: 0.8,
            tie_mode: TieMode::Maximal,
            js_base: 2.0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::file(path))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.data.train, &mut self.data.test, &mut self.data.embeddings].into_iter().flatten() {
            join(p);
        }
        join(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("folds must be at least 2, got {}", self.folds)));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(format!("split_ratio {} outside (0, 1)", self.split_ratio)));
        }
        if !(self.js_base.is_finite() && self.js_base > 0.0 && self.js_base != 1.0) {
            return Err(Error::Config(format!("js_base {} is not a valid logarithm base", self.js_base)));
        }
        if self.families.is_empty() {
            return Err(Error::Config("families is empty".into()));
        }
        self.grid.validate()?;
        self.mlp.validate()?;
        self.svm.validate()?;
        self.label_vocab()?;
        Ok(())
    }

    pub fn models(&self) -> ModelSettings {
        ModelSettings {
            mlp: self.mlp.clone(),
            svm: self.svm.clone(),
        }
    }

    pub fn label_vocab(&self) -> Result<LabelVocab> {
        match &self.data.labels {
            None => Ok(LabelVocab::default()),
            Some(map) => map
                .iter()
                .map(|(k, &v)| Ok((k.clone(), Label::new(v).map_err(|e| Error::Config(e.to_string()))?)))
                .collect::<Result<BTreeMap<_, _>>>()
                .map(LabelVocab::new),
        }
    }

    pub fn require<'a>(&self, path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        path.as_deref().ok_or_else(|| Error::Config(format!("data.{key} is not set")))
    }
}
