//! The layer-wise analysis: summaries, distance table, correlation curves,
//! best-layer reports and reference studies.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, ResultExt};
use crate::rank::{negated_correlation, CorrelationMethod};
use crate::stats::{GaussianSummary, StatsAccumulator};
use crate::store::{
    read_embedding_file, read_summary_header, read_summary_layer, write_summary_file,
    DatasetManifest,
};
use crate::w2::W2Target;

/// How frames are pooled before fitting a Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolingMode {
    /// Every frame of every utterance is one sample.
    #[default]
    Frames,
    /// Each utterance contributes its mean frame as one sample.
    UtteranceMean,
}

impl PoolingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolingMode::Frames => "frames",
            PoolingMode::UtteranceMean => "utterance-mean",
        }
    }
}

impl fmt::Display for PoolingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PoolingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frames" => Ok(PoolingMode::Frames),
            "utterance-mean" => Ok(PoolingMode::UtteranceMean),
            other => Err(Error::Validation(format!(
                "unknown pooling mode {other:?} (expected frames or utterance-mean)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
enum Storage {
    Memory(Vec<Vec<GaussianSummary>>),
    Files(Vec<PathBuf>),
}

/// Per-layer Gaussian summaries of a list of entities, in memory or as LWS1 files.
///
/// File-backed sets load one layer at a time, so sweeps at large dimension
/// never hold a whole entity in memory.
#[derive(Debug, Clone)]
pub struct SummarySet {
    ids: Vec<String>,
    n_layers: usize,
    dim: usize,
    storage: Storage,
}

impl SummarySet {
    pub fn in_memory(entities: Vec<(String, Vec<GaussianSummary>)>) -> Result<Self> {
        let (n_layers, dim) = match entities.first() {
            Some((_, layers)) => (layers.len(), layers.first().map_or(0, |s| s.dim())),
            None => (0, 0),
        };
        let mut ids = Vec::with_capacity(entities.len());
        let mut data = Vec::with_capacity(entities.len());
        for (id, layers) in entities {
            if layers.len() != n_layers || layers.iter().any(|s| s.dim() != dim) {
                return Err(Error::Dim(format!(
                    "entity {id:?} does not have {n_layers} layers of dimension {dim}"
                )));
            }
            ids.push(id);
            data.push(layers);
        }
        Ok(SummarySet {
            ids,
            n_layers,
            dim,
            storage: Storage::Memory(data),
        })
    }

    /// File-backed set; every file's header must agree on shape.
    pub fn from_files(entities: Vec<(String, PathBuf)>) -> Result<Self> {
        let mut shape = None;
        let mut ids = Vec::with_capacity(entities.len());
        let mut files = Vec::with_capacity(entities.len());
        for (id, path) in entities {
            let h = read_summary_header(&path)?;
            match shape {
                None => shape = Some(h),
                Some(s) if s != h => {
                    return Err(Error::Dim(format!(
                        "{}: shape {:?} differs from {:?}",
                        path.display(),
                        h,
                        s
                    )))
                }
                _ => {}
            }
            ids.push(id);
            files.push(path);
        }
        let (n_layers, dim) = shape.unwrap_or((0, 0));
        Ok(SummarySet {
            ids,
            n_layers,
            dim,
            storage: Storage::Files(files),
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layer(&self, entity: usize, layer: usize) -> Result<Cow<'_, GaussianSummary>> {
        match &self.storage {
            Storage::Memory(data) => Ok(Cow::Borrowed(&data[entity][layer])),
            Storage::Files(files) => read_summary_layer(&files[entity], layer).map(Cow::Owned),
        }
    }

    /// All layers of one entity.
    pub fn entity(&self, entity: usize) -> Result<Vec<GaussianSummary>> {
        (0..self.n_layers)
            .map(|l| self.layer(entity, l).map(Cow::into_owned))
            .collect()
    }
}

/// Summaries of every system and of the reference corpus.
#[derive(Debug, Clone)]
pub struct DatasetSummaries {
    pub dataset_id: String,
    pub systems: SummarySet,
    /// A single entity named `"reference"`.
    pub reference: SummarySet,
}

/// Fits one Gaussian per layer over the given utterance files.
///
/// Each utterance is read once; layers are accumulated in parallel, and
/// every layer's accumulator sees utterances in list order, so results do
/// not depend on the thread count.
pub fn summarize_utterances(
    paths: &[PathBuf],
    n_layers: usize,
    dim: usize,
    pooling: PoolingMode,
) -> Result<Vec<GaussianSummary>> {
    let mut accs = vec![StatsAccumulator::new(dim); n_layers];
    for path in paths {
        let emb = read_embedding_file(path)?;
        if emb.n_layers != n_layers || emb.dim != dim {
            return Err(Error::Validation(format!(
                "{}: shape {} layers × dim {}, expected {n_layers} × {dim}",
                path.display(),
                emb.n_layers,
                emb.dim
            )));
        }
        accs.par_iter_mut()
            .enumerate()
            .try_for_each(|(l, acc)| match pooling {
                PoolingMode::Frames => acc.accumulate(emb.layer(l)),
                PoolingMode::UtteranceMean => acc.push(&emb.layer_mean(l)),
            })
            .context_with(|| path.display().to_string())?;
    }
    accs.par_iter()
        .enumerate()
        .map(|(l, acc)| acc.finalize().context_with(|| format!("layer {l}")))
        .collect()
}

fn summarize_system(
    manifest: &DatasetManifest,
    index: usize,
    pooling: PoolingMode,
) -> Result<Vec<GaussianSummary>> {
    let system = &manifest.systems[index];
    let paths: Vec<PathBuf> = system.utterances.iter().map(|p| manifest.resolve(p)).collect();
    summarize_utterances(&paths, manifest.n_layers, manifest.dim, pooling)
        .context_with(|| format!("system {:?}", system.system_id))
}

fn summarize_reference(
    manifest: &DatasetManifest,
    pooling: PoolingMode,
) -> Result<Vec<GaussianSummary>> {
    if manifest.reference.is_empty() {
        return Err(Error::Validation(format!(
            "dataset {:?} lists no reference files",
            manifest.dataset_id
        )));
    }
    let paths: Vec<PathBuf> = manifest.reference.iter().map(|p| manifest.resolve(p)).collect();
    summarize_utterances(&paths, manifest.n_layers, manifest.dim, pooling)
        .context_with(|| format!("reference of {:?}", manifest.dataset_id))
}

/// Name of the single entity in a reference [`SummarySet`].
pub const REFERENCE_ID: &str = "reference";

/// Builds every system and reference summary in memory.
pub fn build_summaries(manifest: &DatasetManifest, pooling: PoolingMode) -> Result<DatasetSummaries> {
    manifest.validate()?;
    let reference = summarize_reference(manifest, pooling)?;
    let mut systems = Vec::with_capacity(manifest.systems.len());
    for (i, s) in manifest.systems.iter().enumerate() {
        systems.push((s.system_id.clone(), summarize_system(manifest, i, pooling)?));
    }
    Ok(DatasetSummaries {
        dataset_id: manifest.dataset_id.clone(),
        systems: SummarySet::in_memory(systems)?,
        reference: SummarySet::in_memory(vec![(REFERENCE_ID.to_string(), reference)])?,
    })
}

/// Cache key: hash of the manifest content, where it lives, and the pooling mode.
pub fn cache_key(manifest: &DatasetManifest, pooling: PoolingMode) -> String {
    let mut h = Sha256::new();
    h.update(b"layerprobe-summaries-v1\0");
    h.update(serde_json::to_vec(manifest).expect("manifest serializes"));
    h.update(b"\0");
    let base = manifest
        .base_dir
        .canonicalize()
        .unwrap_or_else(|_| manifest.base_dir.clone());
    h.update(base.to_string_lossy().as_bytes());
    h.update(b"\0");
    h.update(pooling.as_str().as_bytes());
    h.finalize()[..16].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheIndex {
    dataset_id: String,
    pooling: PoolingMode,
    n_layers: usize,
    dim: usize,
    systems: Vec<(String, String)>,
    reference: String,
}

/// Where a cached summary set lives and whether it was already there.
#[derive(Debug, Clone)]
pub struct CachedSummaries {
    pub summaries: DatasetSummaries,
    pub dir: PathBuf,
    pub cache_hit: bool,
}

const INDEX_FILE: &str = "index.json";

fn load_cache(dir: &Path, manifest: &DatasetManifest) -> Option<DatasetSummaries> {
    let text = std::fs::read_to_string(dir.join(INDEX_FILE)).ok()?;
    let index: CacheIndex = serde_json::from_str(&text).ok()?;
    if index.n_layers != manifest.n_layers || index.dim != manifest.dim {
        return None;
    }
    let systems = SummarySet::from_files(
        index
            .systems
            .iter()
            .map(|(id, f)| (id.clone(), dir.join(f)))
            .collect(),
    )
    .ok()?;
    let reference =
        SummarySet::from_files(vec![(REFERENCE_ID.to_string(), dir.join(&index.reference))]).ok()?;
    let shape_ok = |s: &SummarySet| {
        s.is_empty() || (s.n_layers() == manifest.n_layers && s.dim() == manifest.dim)
    };
    (shape_ok(&systems) && shape_ok(&reference)).then_some(DatasetSummaries {
        dataset_id: index.dataset_id,
        systems,
        reference,
    })
}

/// Builds summaries into `cache_root/<key>/` as LWS1 files (one per system
/// plus `reference.lws`), or reuses them if a complete set is already there.
///
/// Entities are built and written one at a time, so peak memory is one
/// entity's accumulators.
pub fn build_summaries_cached(
    manifest: &DatasetManifest,
    pooling: PoolingMode,
    cache_root: &Path,
) -> Result<CachedSummaries> {
    manifest.validate()?;
    let dir = cache_root.join(cache_key(manifest, pooling));
    if let Some(summaries) = load_cache(&dir, manifest) {
        log::info!("using cached summaries in {}", dir.display());
        return Ok(CachedSummaries {
            summaries,
            dir,
            cache_hit: true,
        });
    }
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    log::info!("building summaries into {}", dir.display());

    let reference = summarize_reference(manifest, pooling)?;
    let reference_file = "reference.lws".to_string();
    write_summary_file(&reference, dir.join(&reference_file))?;
    drop(reference);

    let mut systems = Vec::with_capacity(manifest.systems.len());
    for (i, s) in manifest.systems.iter().enumerate() {
        let layers = summarize_system(manifest, i, pooling)?;
        let file = format!("system-{i:04}.lws");
        write_summary_file(&layers, dir.join(&file))?;
        log::info!("summarized system {:?}", s.system_id);
        systems.push((s.system_id.clone(), file));
    }
    let index = CacheIndex {
        dataset_id: manifest.dataset_id.clone(),
        pooling,
        n_layers: manifest.n_layers,
        dim: manifest.dim,
        systems,
        reference: reference_file,
    };
    let index_path = dir.join(INDEX_FILE);
    std::fs::write(
        &index_path,
        serde_json::to_string_pretty(&index).expect("index serializes"),
    )
    .map_err(|e| Error::io(&index_path, e))?;
    let summaries = load_cache(&dir, manifest).ok_or_else(|| {
        Error::Validation(format!("freshly written cache {} is unreadable", dir.display()))
    })?;
    Ok(CachedSummaries {
        summaries,
        dir,
        cache_hit: false,
    })
}

/// W2 distance of every system to the reference, systems × layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceTable {
    pub dataset_id: String,
    pub system_ids: Vec<String>,
    pub n_layers: usize,
    /// `values[s][l]`
    pub values: Vec<Vec<f64>>,
}

impl DistanceTable {
    pub fn column(&self, layer: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[layer]).collect()
    }

    pub fn row(&self, system_id: &str) -> Option<&[f64]> {
        self.system_ids
            .iter()
            .position(|s| s == system_id)
            .map(|i| self.values[i].as_slice())
    }

    /// The table restricted to systems for which `keep` holds, order preserved.
    pub fn filtered(&self, keep: impl Fn(&str) -> bool) -> DistanceTable {
        let (ids, values) = self
            .system_ids
            .iter()
            .zip(&self.values)
            .filter(|(id, _)| keep(id))
            .map(|(id, row)| (id.clone(), row.clone()))
            .unzip();
        DistanceTable {
            dataset_id: self.dataset_id.clone(),
            system_ids: ids,
            n_layers: self.n_layers,
            values,
        }
    }
}

/// `values[s][l] = w2(system s at layer l, reference at layer l)`.
///
/// Layers are processed one at a time; within a layer the systems are
/// evaluated in parallel and collected by index.
pub fn system_layer_distances(
    dataset_id: &str,
    systems: &SummarySet,
    reference: &SummarySet,
) -> Result<DistanceTable> {
    if reference.len() != 1 {
        return Err(Error::Validation(format!(
            "expected exactly one reference entity, got {}",
            reference.len()
        )));
    }
    if !systems.is_empty()
        && (systems.n_layers() != reference.n_layers() || systems.dim() != reference.dim())
    {
        return Err(Error::Dim(format!(
            "systems have {} layers × dim {}, reference has {} × {}",
            systems.n_layers(),
            systems.dim(),
            reference.n_layers(),
            reference.dim()
        )));
    }
    let n_layers = reference.n_layers();
    let mut values = vec![vec![0.0; n_layers]; systems.len()];
    for l in 0..n_layers {
        let target = reference
            .layer(0, l)
            .and_then(|g| W2Target::new(&g))
            .context_with(|| format!("reference, layer {l}"))?;
        let column: Vec<f64> = (0..systems.len())
            .into_par_iter()
            .map(|s| {
                systems
                    .layer(s, l)
                    .and_then(|g| target.distance_from(&g))
                    .context_with(|| format!("system {:?}, layer {l}", systems.ids()[s]))
            })
            .collect::<Result<_>>()?;
        for (row, v) in values.iter_mut().zip(column) {
            row[l] = v;
        }
    }
    Ok(DistanceTable {
        dataset_id: dataset_id.to_string(),
        system_ids: systems.ids().to_vec(),
        n_layers,
        values,
    })
}

/// Mean ratings per system and dimension.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RatingsTable(pub BTreeMap<String, BTreeMap<String, f64>>);

impl RatingsTable {
    pub fn from_manifest(manifest: &DatasetManifest) -> Self {
        RatingsTable(
            manifest
                .systems
                .iter()
                .map(|s| (s.system_id.clone(), s.ratings.clone()))
                .collect(),
        )
    }

    pub fn get(&self, system_id: &str, dimension: &str) -> Option<f64> {
        self.0.get(system_id)?.get(dimension).copied()
    }

    pub fn insert(&mut self, system_id: &str, dimension: &str, value: f64) {
        self.0
            .entry(system_id.to_string())
            .or_default()
            .insert(dimension.to_string(), value);
    }
}

/// Negated correlation per layer for one rating dimension.
///
/// `None` marks a layer whose distances were constant across systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub dimension: String,
    pub method: CorrelationMethod,
    pub values: Vec<Option<f64>>,
}

/// Correlates each layer's distances with the systems' ratings.
pub fn correlate_layers(
    table: &DistanceTable,
    ratings: &RatingsTable,
    dimension: &str,
    method: CorrelationMethod,
) -> Result<CorrelationCurve> {
    let mos = table
        .system_ids
        .iter()
        .map(|id| {
            ratings.get(id, dimension).ok_or_else(|| {
                Error::Validation(format!("system {id:?} has no {dimension:?} rating"))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    if mos.len() < crate::rank::MIN_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} systems rated for {dimension:?}, at least {} are needed",
            mos.len(),
            crate::rank::MIN_POINTS
        )));
    }
    if mos.iter().all(|&m| m == mos[0]) {
        return Err(Error::Degenerate(format!(
            "every system has the same {dimension:?} rating"
        )));
    }
    let values = (0..table.n_layers)
        .map(|l| match negated_correlation(&table.column(l), &mos, method) {
            Ok(v) => Ok(Some(v)),
            Err(Error::Degenerate(msg)) => {
                log::warn!("{dimension}, layer {l}: {msg}");
                Ok(None)
            }
            Err(e) => Err(e.context(format!("{dimension}, layer {l}"))),
        })
        .collect::<Result<_>>()?;
    Ok(CorrelationCurve {
        dimension: dimension.to_string(),
        method,
        values,
    })
}

/// Layers attaining the best (largest) curve value, as maximal contiguous ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestLayerReport {
    pub best_value: f64,
    /// Inclusive `(first, last)` layer ranges, ascending.
    pub layer_groups: Vec<(usize, usize)>,
}

impl BestLayerReport {
    /// `"a-b,c"` notation, e.g. `"15-21"` or `"1-2,4"`.
    pub fn groups_string(&self) -> String {
        self.layer_groups
            .iter()
            .map(|&(a, b)| {
                if a == b {
                    a.to_string()
                } else {
                    format!("{a}-{b}")
                }
            })
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn layers(&self) -> Vec<usize> {
        self.layer_groups.iter().flat_map(|&(a, b)| a..=b).collect()
    }
}

/// Exact-tie grouping of the layers that reach the curve's maximum.
pub fn best_layers(curve: &CorrelationCurve) -> Result<BestLayerReport> {
    if curve.values.is_empty() {
        return Err(Error::Validation("empty correlation curve".into()));
    }
    let best = curve
        .values
        .iter()
        .flatten()
        .copied()
        .reduce(f64::max)
        .ok_or_else(|| {
            Error::Degenerate(format!(
                "no layer has a defined correlation for {:?}",
                curve.dimension
            ))
        })?;
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for (l, v) in curve.values.iter().enumerate() {
        if *v != Some(best) {
            continue;
        }
        match groups.last_mut() {
            Some((_, end)) if *end + 1 == l => *end = l,
            _ => groups.push((l, l)),
        }
    }
    Ok(BestLayerReport {
        best_value: best,
        layer_groups: groups,
    })
}

/// One curve per reference set for the same systems and dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStudyResult {
    pub dimension: String,
    pub method: CorrelationMethod,
    /// `(label, curve)` in the order the references were given.
    pub curves: Vec<(String, CorrelationCurve)>,
}

impl ReferenceStudyResult {
    pub fn curve(&self, label: &str) -> Option<&CorrelationCurve> {
        self.curves.iter().find(|(l, _)| l == label).map(|(_, c)| c)
    }
}

/// Correlation curves of the same systems against several reference sets.
///
/// `references[0]` is conventionally the matched (primary) reference. Systems
/// listed in `excluded` are left out of every correlation.
pub fn reference_study(
    systems: &SummarySet,
    references: &[(String, SummarySet)],
    ratings: &RatingsTable,
    excluded: &HashSet<String>,
    dimension: &str,
    method: CorrelationMethod,
) -> Result<ReferenceStudyResult> {
    let mut seen = HashSet::new();
    for (label, reference) in references {
        if !seen.insert(label.as_str()) {
            return Err(Error::Validation(format!(
                "duplicate reference label {label:?}"
            )));
        }
        if reference.n_layers() != systems.n_layers() || reference.dim() != systems.dim() {
            return Err(Error::Dim(format!(
                "reference {label:?} has {} layers × dim {}, systems have {} × {}",
                reference.n_layers(),
                reference.dim(),
                systems.n_layers(),
                systems.dim()
            )));
        }
    }
    let mut curves = Vec::with_capacity(references.len());
    for (label, reference) in references {
        let table = system_layer_distances(label, systems, reference)
            .context_with(|| format!("reference {label:?}"))?
            .filtered(|id| !excluded.contains(id));
        let curve = correlate_layers(&table, ratings, dimension, method)
            .context_with(|| format!("reference {label:?}"))?;
        curves.push((label.clone(), curve));
    }
    Ok(ReferenceStudyResult {
        dimension: dimension.to_string(),
        method,
        curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(values: &[f64]) -> CorrelationCurve {
        CorrelationCurve {
            dimension: "naturalness".into(),
            method: CorrelationMethod::Spearman,
            values: values.iter().map(|&v| Some(v)).collect(),
        }
    }

    #[test]
    fn best_layer_grouping() {
        let r = best_layers(&curve(&[0.5, 0.9, 0.9, 0.7, 0.9])).unwrap();
        assert_eq!(r.best_value, 0.9);
        assert_eq!(r.groups_string(), "1-2,4");
        assert_eq!(r.layers(), vec![1, 2, 4]);

        let r = best_layers(&curve(&[0.1, 0.2, 0.3])).unwrap();
        assert_eq!(r.groups_string(), "2");

        let r = best_layers(&curve(&[0.4; 5])).unwrap();
        assert_eq!(r.groups_string(), "0-4");
    }

    #[test]
    fn best_layers_skip_missing_values() {
        let mut c = curve(&[0.2, 0.8, 0.8]);
        c.values[1] = None;
        let r = best_layers(&c).unwrap();
        assert_eq!(r.groups_string(), "2");
        c.values = vec![None, None];
        assert!(matches!(best_layers(&c), Err(Error::Degenerate(_))));
        c.values.clear();
        assert!(best_layers(&c).is_err());
    }

    fn table(rows: Vec<(&str, Vec<f64>)>) -> DistanceTable {
        DistanceTable {
            dataset_id: "t".into(),
            n_layers: rows[0].1.len(),
            system_ids: rows.iter().map(|(id, _)| id.to_string()).collect(),
            values: rows.into_iter().map(|(_, r)| r).collect(),
        }
    }

    fn ratings(dim: &str, values: &[(&str, f64)]) -> RatingsTable {
        let mut r = RatingsTable::default();
        for (id, v) in values {
            r.insert(id, dim, *v);
        }
        r
    }

    #[test]
    fn correlate_marks_constant_columns() {
        let t = table(vec![
            ("a", vec![1.0, 0.5]),
            ("b", vec![2.0, 0.5]),
            ("c", vec![3.0, 0.5]),
        ]);
        let r = ratings("q", &[("a", 5.0), ("b", 4.0), ("c", 1.0)]);
        let c = correlate_layers(&t, &r, "q", CorrelationMethod::Spearman).unwrap();
        assert_eq!(c.values, vec![Some(1.0), None]);
    }

    #[test]
    fn correlate_preconditions() {
        let t = table(vec![("a", vec![1.0]), ("b", vec![2.0]), ("c", vec![3.0])]);
        let r = ratings("q", &[("a", 5.0), ("b", 4.0)]);
        let err = correlate_layers(&t, &r, "q", CorrelationMethod::Spearman).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("\"c\"")));

        let r = ratings("q", &[("a", 3.0), ("b", 3.0), ("c", 3.0)]);
        let err = correlate_layers(&t, &r, "q", CorrelationMethod::Spearman).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));

        let small = t.filtered(|id| id != "c");
        let r = ratings("q", &[("a", 3.0), ("b", 4.0)]);
        let err = correlate_layers(&small, &r, "q", CorrelationMethod::Spearman).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    #[test]
    fn correlate_selects_dimension() {
        let t = table(vec![("a", vec![1.0]), ("b", vec![2.0]), ("c", vec![3.0])]);
        let mut r = ratings("naturalness", &[("a", 5.0), ("b", 4.0), ("c", 1.0)]);
        for (id, v) in [("a", 1.0), ("b", 2.0), ("c", 3.0)] {
            r.insert(id, "intelligibility", v);
        }
        let c = correlate_layers(&t, &r, "intelligibility", CorrelationMethod::Pearson).unwrap();
        assert_eq!(c.dimension, "intelligibility");
        assert!((c.values[0].unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn distances_against_hand_built_gaussians() {
        let g = |mean: f64, var: f64| GaussianSummary {
            count: 10,
            mean: vec![mean],
            covariance: vec![var],
        };
        let systems = SummarySet::in_memory(vec![("s".into(), vec![g(0.0, 1.0)])]).unwrap();
        let reference = SummarySet::in_memory(vec![("reference".into(), vec![g(3.0, 4.0)])]).unwrap();
        let t = system_layer_distances("d", &systems, &reference).unwrap();
        assert!((t.values[0][0] - 10f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn pooling_mode_parsing() {
        assert_eq!(
            "utterance-mean".parse::<PoolingMode>().unwrap(),
            PoolingMode::UtteranceMean
        );
        assert!("mean".parse::<PoolingMode>().is_err());
    }
}
