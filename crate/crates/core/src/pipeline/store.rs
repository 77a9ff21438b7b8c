//! Per-annotator model collection and its on-disk directory form.
//!
//! A store directory holds one `NNNN.model` blob per annotator plus
//! `manifest.json`, which maps annotators to files and sha256 digests.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifiers::{AnnotatorModel, Family};
use crate::corpus::AnnotatorId;
use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.json";
pub const STORE_FORMAT: &str = "annotator-model-store";
pub const STORE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub annotator: AnnotatorId,
    pub family: Family,
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub models: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelStore {
    models: BTreeMap<AnnotatorId, AnnotatorModel>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ModelStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces any earlier model of the same annotator.
    pub fn insert(&mut self, model: AnnotatorModel) {
        self.models.insert(model.annotator.clone(), model);
    }

    pub fn get(&self, annotator: &AnnotatorId) -> Option<&AnnotatorModel> {
        self.models.get(annotator)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn annotators(&self) -> impl Iterator<Item = &AnnotatorId> {
        self.models.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = &AnnotatorModel> {
        self.models.values()
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            format: STORE_FORMAT.into(),
            version: STORE_VERSION,
            models: self
                .models
                .values()
                .enumerate()
                .map(|(i, m)| ManifestEntry {
                    annotator: m.annotator.clone(),
                    family: m.family(),
                    file: format!("{i:04}.model"),
                    sha256: sha256_hex(&m.to_bytes()),
                })
                .collect(),
        }
    }

    /// Writes blobs and manifest into `dir`, creating it if needed. Stale
    /// `.model` files from an earlier save are removed.
    pub fn save(&self, dir: &Path) -> Result<Manifest> {
        fs::create_dir_all(dir).map_err(Error::file(dir))?;
        for entry in fs::read_dir(dir).map_err(Error::file(dir))? {
            let path = entry.map_err(Error::file(dir))?.path();
            if path.extension().is_some_and(|e| e == "model") {
                fs::remove_file(&path).map_err(Error::file(&path))?;
            }
        }
        let manifest = self.manifest();
        for (entry, model) in manifest.models.iter().zip(self.models.values()) {
            let path = dir.join(&entry.file);
            fs::write(&path, model.to_bytes()).map_err(Error::file(&path))?;
        }
        let path = dir.join(MANIFEST);
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        fs::write(&path, json).map_err(Error::file(&path))?;
        Ok(manifest)
    }

    /// Loads a saved store, verifying every blob against its digest.
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(Error::file(&path))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::ModelFormat(format!("{}: {e}", path.display())))?;
        if manifest.format != STORE_FORMAT || manifest.version != STORE_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported store {} version {}",
                manifest.format, manifest.version
            )));
        }
        let mut store = ModelStore::new();
        for entry in &manifest.models {
            if entry.file.contains(['/', '\\']) {
                return Err(Error::ModelFormat(format!("manifest file name {:?}", entry.file)));
            }
            let path = dir.join(&entry.file);
            let bytes = fs::read(&path).map_err(Error::file(&path))?;
            if sha256_hex(&bytes) != entry.sha256 {
                return Err(Error::ModelFormat(format!("{} does not match its digest", path.display())));
            }
            let model = AnnotatorModel::from_bytes(&bytes)?;
            if model.annotator != entry.annotator {
                return Err(Error::ModelFormat(format!(
                    "{} holds annotator {}, manifest says {}",
                    path.display(),
                    model.annotator,
                    entry.annotator
                )));
            }
            store.insert(model);
        }
        Ok(store)
    }
}
