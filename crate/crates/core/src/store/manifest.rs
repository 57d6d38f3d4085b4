use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::embeddings::read_embedding_header;
use crate::error::{Error, Result};

/// Lowest and highest admissible mean opinion score.
pub const RATING_RANGE: (f64, f64) = (1.0, 5.0);

/// One listening-test system (a synthesizer, or natural speech).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemEntry {
    pub system_id: String,
    pub is_natural: bool,
    /// Mean opinion score per rating dimension, e.g. `"naturalness"`.
    pub ratings: BTreeMap<String, f64>,
    pub utterances: Vec<PathBuf>,
}

/// A listening-test dataset together with its reference corpus.
///
/// Relative paths are resolved against the directory holding the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dataset_id: String,
    pub model_id: String,
    pub n_layers: usize,
    pub dim: usize,
    pub systems: Vec<SystemEntry>,
    pub reference: Vec<PathBuf>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn system(&self, id: &str) -> Option<&SystemEntry> {
        self.systems.iter().find(|s| s.system_id == id)
    }

    /// Rating dimensions that appear anywhere in the manifest, sorted.
    pub fn dimensions(&self) -> Vec<String> {
        let mut dims: Vec<String> = self
            .systems
            .iter()
            .flat_map(|s| s.ratings.keys().cloned())
            .collect();
        dims.sort();
        dims.dedup();
        dims
    }

    /// Checks everything that does not need the embedding files.
    pub fn validate(&self) -> Result<()> {
        if self.n_layers == 0 || self.dim == 0 {
            return Err(Error::Schema(format!(
                "n_layers and dim must be positive (got {} and {})",
                self.n_layers, self.dim
            )));
        }
        let mut seen = HashSet::new();
        for s in &self.systems {
            if !seen.insert(s.system_id.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate system_id {:?}",
                    s.system_id
                )));
            }
            if s.utterances.is_empty() {
                return Err(Error::Schema(format!(
                    "system {:?} lists no utterances",
                    s.system_id
                )));
            }
            for (dim, &v) in &s.ratings {
                if !(RATING_RANGE.0..=RATING_RANGE.1).contains(&v) {
                    return Err(Error::Range(format!(
                        "system {:?} has {dim} rating {v}, outside [{}, {}]",
                        s.system_id, RATING_RANGE.0, RATING_RANGE.1
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut manifest: DatasetManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    manifest.base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    manifest
        .validate()
        .map_err(|e| e.context(path.display().to_string()))?;
    Ok(manifest)
}

pub fn write_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Opens every referenced embedding header and checks it against the
/// manifest's `n_layers` and `dim`.
pub fn validate_dataset(manifest: &DatasetManifest) -> Result<()> {
    manifest.validate()?;
    let files = manifest
        .systems
        .iter()
        .flat_map(|s| s.utterances.iter())
        .chain(manifest.reference.iter());
    for rel in files {
        let path = manifest.resolve(rel);
        let h = read_embedding_header(&path)?;
        if h.n_layers != manifest.n_layers || h.dim != manifest.dim {
            return Err(Error::Validation(format!(
                "{}: shape {} layers × dim {} does not match manifest ({} × {})",
                path.display(),
                h.n_layers,
                h.dim,
                manifest.n_layers,
                manifest.dim
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{write_embedding_file, UtteranceEmbeddings};

    const MINIMAL: &str = r#"{
        "dataset_id": "toy", "model_id": "m", "n_layers": 1, "dim": 2,
        "systems": [{"system_id": "a", "is_natural": false,
                     "ratings": {"naturalness": 3.5}, "utterances": ["a.lwe"]}],
        "reference": ["r.lwe"]
    }"#;

    fn write(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join("manifest.json");
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn minimal_manifest_parses() {
        let dir = tempfile::tempdir().unwrap();
        let m = read_manifest(write(dir.path(), MINIMAL)).unwrap();
        assert_eq!(m.systems.len(), 1);
        assert_eq!(m.reference.len(), 1);
        assert_eq!(m.resolve(Path::new("a.lwe")), dir.path().join("a.lwe"));
        assert_eq!(m.dimensions(), vec!["naturalness".to_string()]);
    }

    #[test]
    fn duplicate_ids_and_missing_keys() {
        let dir = tempfile::tempdir().unwrap();
        let dup = MINIMAL.replace(
            r#""systems": ["#,
            r#""systems": [{"system_id": "a", "is_natural": true, "ratings": {}, "utterances": ["b.lwe"]},"#,
        );
        let err = read_manifest(write(dir.path(), &dup)).unwrap_err();
        assert!(matches!(err.root(), Error::Schema(_)), "{err}");
        let missing = MINIMAL.replace(r#""model_id": "m","#, "");
        let err = read_manifest(write(dir.path(), &missing)).unwrap_err();
        assert!(matches!(err.root(), Error::Schema(_)), "{err}");
    }

    #[test]
    fn out_of_range_rating() {
        let dir = tempfile::tempdir().unwrap();
        let bad = MINIMAL.replace("3.5", "5.7");
        let err = read_manifest(write(dir.path(), &bad)).unwrap_err();
        assert!(matches!(err.root(), Error::Range(_)), "{err}");
    }

    #[test]
    fn dataset_validation_checks_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), MINIMAL);
        let good = UtteranceEmbeddings::new("a", 1, 2, 2, vec![0.0; 4]).unwrap();
        write_embedding_file(&good, dir.path().join("a.lwe")).unwrap();
        let m = read_manifest(&path).unwrap();
        // reference file still missing
        assert!(matches!(
            validate_dataset(&m).unwrap_err().root(),
            Error::Io { .. }
        ));
        let wrong = UtteranceEmbeddings::new("r", 1, 3, 2, vec![0.0; 6]).unwrap();
        write_embedding_file(&wrong, dir.path().join("r.lwe")).unwrap();
        assert!(matches!(validate_dataset(&m), Err(Error::Validation(_))));
        write_embedding_file(&good, dir.path().join("r.lwe")).unwrap();
        validate_dataset(&m).unwrap();
    }
}
