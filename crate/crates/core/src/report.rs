//! Run configuration, report files (CSV, JSON, SVG) and the four commands
//! behind the `layerprobe` binary.
//!
//! Every number in a CSV is printed with six decimals. Report files contain
//! nothing but data derived from the inputs and flags.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rank::CorrelationMethod;
use crate::store::{read_manifest, validate_dataset, DatasetManifest};
use crate::sweep::{
    best_layers, build_summaries_cached, correlate_layers, reference_study,
    system_layer_distances, BestLayerReport, CorrelationCurve, DistanceTable, PoolingMode,
    RatingsTable, ReferenceStudyResult,
};
use crate::synth::{gen_planted_dataset, gen_reference_set, PlantedSpec};

pub const DISTANCES_CSV: &str = "distances.csv";
pub const CORRELATIONS_CSV: &str = "correlations.csv";
pub const BEST_LAYERS_JSON: &str = "best_layers.json";
pub const CURVES_SVG: &str = "curves.svg";
pub const REFSTUDY_CSV: &str = "refstudy.csv";
pub const REFSTUDY_SVG: &str = "refstudy.svg";

/// Optional settings, as given on the command line or in a JSON config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigLayer {
    pub manifest: Option<PathBuf>,
    pub pooling: Option<PoolingMode>,
    pub method: Option<CorrelationMethod>,
    pub dimensions: Option<Vec<String>>,
    pub exclude_natural: Option<bool>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub cache: Option<PathBuf>,
    pub svg: Option<bool>,
}

impl ConfigLayer {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }

    /// Fields of `self` win; unset ones fall back to `lower`.
    pub fn over(self, lower: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            manifest: self.manifest.or(lower.manifest),
            pooling: self.pooling.or(lower.pooling),
            method: self.method.or(lower.method),
            dimensions: self.dimensions.or(lower.dimensions),
            exclude_natural: self.exclude_natural.or(lower.exclude_natural),
            out: self.out.or(lower.out),
            threads: self.threads.or(lower.threads),
            cache: self.cache.or(lower.cache),
            svg: self.svg.or(lower.svg),
        }
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub pooling: PoolingMode,
    pub method: CorrelationMethod,
    /// Empty means every dimension found in the manifest.
    pub dimensions: Vec<String>,
    pub exclude_natural: bool,
    pub out: PathBuf,
    pub threads: usize,
    pub cache: PathBuf,
    pub svg: bool,
}

impl RunConfig {
    pub fn new(manifest: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        let out = out.into();
        RunConfig {
            manifest: manifest.into(),
            pooling: PoolingMode::Frames,
            method: CorrelationMethod::Spearman,
            dimensions: Vec::new(),
            exclude_natural: false,
            cache: out.join("cache"),
            out,
            threads: 1,
            svg: false,
        }
    }

    /// Applies defaults to a merged layer. `manifest` is required.
    pub fn resolve(layer: ConfigLayer) -> Result<Self> {
        let manifest = layer
            .manifest
            .ok_or_else(|| Error::Validation("no manifest given (--manifest)".into()))?;
        let out = layer.out.unwrap_or_else(|| PathBuf::from("layerprobe-out"));
        let threads = layer.threads.unwrap_or(1);
        if threads == 0 {
            return Err(Error::Validation("--threads must be at least 1".into()));
        }
        Ok(RunConfig {
            manifest,
            pooling: layer.pooling.unwrap_or_default(),
            method: layer.method.unwrap_or(CorrelationMethod::Spearman),
            dimensions: layer.dimensions.unwrap_or_default(),
            exclude_natural: layer.exclude_natural.unwrap_or(false),
            cache: layer.cache.unwrap_or_else(|| out.join("cache")),
            out,
            threads,
            svg: layer.svg.unwrap_or(false),
        })
    }
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Validation(format!("cannot start thread pool: {e}")))?;
    pool.install(f)
}

/// Six-decimal fixed formatting; negative zero prints as zero.
pub fn format_value(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `system_id,layer,w2`
pub fn write_distances_csv(table: &DistanceTable, path: impl AsRef<Path>) -> Result<()> {
    let rows = table
        .system_ids
        .iter()
        .zip(&table.values)
        .flat_map(|(id, row)| {
            row.iter()
                .enumerate()
                .map(move |(l, v)| vec![id.clone(), l.to_string(), format_value(*v)])
        })
        .collect();
    write_csv(path.as_ref(), &["system_id", "layer", "w2"], rows)
}

fn optional_value(v: Option<f64>) -> String {
    v.map(format_value).unwrap_or_default()
}

/// `dimension,method,layer,negated_correlation`; degenerate layers are empty cells.
pub fn write_correlations_csv(curves: &[CorrelationCurve], path: impl AsRef<Path>) -> Result<()> {
    let rows = curves
        .iter()
        .flat_map(|c| {
            c.values.iter().enumerate().map(move |(l, v)| {
                vec![
                    c.dimension.clone(),
                    c.method.to_string(),
                    l.to_string(),
                    optional_value(*v),
                ]
            })
        })
        .collect();
    write_csv(
        path.as_ref(),
        &["dimension", "method", "layer", "negated_correlation"],
        rows,
    )
}

#[derive(Serialize)]
struct BestLayerEntry {
    value: f64,
    groups: String,
}

/// `{dimension: {"value": v, "groups": "a-b,c"}}`
pub fn best_layers_json(reports: &BTreeMap<String, BestLayerReport>) -> String {
    let entries: BTreeMap<&str, BestLayerEntry> = reports
        .iter()
        .map(|(dim, r)| {
            (
                dim.as_str(),
                BestLayerEntry {
                    value: r.best_value,
                    groups: r.groups_string(),
                },
            )
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&entries).expect("report serializes");
    text.push('\n');
    text
}

/// `reference_label,layer,negated_correlation`
pub fn write_refstudy_csv(result: &ReferenceStudyResult, path: impl AsRef<Path>) -> Result<()> {
    let rows = result
        .curves
        .iter()
        .flat_map(|(label, c)| {
            c.values
                .iter()
                .enumerate()
                .map(move |(l, v)| vec![label.clone(), l.to_string(), optional_value(*v)])
        })
        .collect();
    write_csv(
        path.as_ref(),
        &["reference_label", "layer", "negated_correlation"],
        rows,
    )
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Line chart of negated correlation (y, fixed to [-1, 1]) against layer
/// index (x), one polyline per series. Missing values break the line.
pub fn render_curves_svg(title: &str, series: &[(String, Vec<Option<f64>>)]) -> String {
    let (width, height) = (720.0, 420.0);
    let (left, right, top, bottom) = (70.0, 170.0, 40.0, 60.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let n_layers = series.iter().map(|(_, v)| v.len()).max().unwrap_or(1).max(1);
    let x_of = |l: usize| {
        if n_layers == 1 {
            left + plot_w / 2.0
        } else {
            left + plot_w * l as f64 / (n_layers - 1) as f64
        }
    };
    let y_of = |v: f64| top + plot_h * (1.0 - (v.clamp(-1.0, 1.0) + 1.0) / 2.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        left + plot_w / 2.0,
        escape(title)
    );
    for tick in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let y = y_of(tick);
        let _ = writeln!(
            s,
            "<line x1=\"{left}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#ddd\"/>",
            left + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{tick:.1}</text>"#,
            left - 6.0,
            y + 4.0
        );
    }
    let step = (n_layers as f64 / 12.0).ceil().max(1.0) as usize;
    for l in (0..n_layers).step_by(step) {
        let x = x_of(l);
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle">{l}</text>"#,
            top + plot_h + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">layer</text>"#,
        left + plot_w / 2.0,
        height - 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">negated correlation</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    for (i, (label, values)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut segment: Vec<String> = Vec::new();
        let flush = |segment: &mut Vec<String>, s: &mut String| {
            if !segment.is_empty() {
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                    segment.join(" ")
                );
                segment.clear();
            }
        };
        for (l, v) in values.iter().enumerate() {
            match v {
                Some(v) => segment.push(format!("{:.2},{:.2}", x_of(l), y_of(*v))),
                None => flush(&mut segment, &mut s),
            }
        }
        flush(&mut segment, &mut s);
        let ly = top + 16.0 * i as f64 + 8.0;
        let lx = left + plot_w + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 24.0,
            ly + 4.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn load_checked_manifest(path: &Path) -> Result<DatasetManifest> {
    read_manifest(path)
}

/// Outcome of [`cmd_stats`].
#[derive(Debug, Clone)]
pub struct StatsOutcome {
    pub dir: PathBuf,
    pub cache_hit: bool,
    /// LWS1 files written or found: one per system, then the reference.
    pub files: Vec<PathBuf>,
}

fn cached_summaries(
    manifest: &DatasetManifest,
    cfg: &RunConfig,
) -> Result<crate::sweep::CachedSummaries> {
    let key_dir = cfg.cache.join(crate::sweep::cache_key(manifest, cfg.pooling));
    if !key_dir.join("index.json").exists() {
        validate_dataset(manifest)?;
    }
    build_summaries_cached(manifest, cfg.pooling, &cfg.cache)
}

/// Builds (or reuses) the LWS1 summaries of every system and the reference.
pub fn cmd_stats(cfg: &RunConfig) -> Result<StatsOutcome> {
    with_threads(cfg.threads, || {
        let manifest = load_checked_manifest(&cfg.manifest)?;
        let cached = cached_summaries(&manifest, cfg)?;
        let mut files: Vec<PathBuf> = (0..manifest.systems.len())
            .map(|i| cached.dir.join(format!("system-{i:04}.lws")))
            .collect();
        files.push(cached.dir.join("reference.lws"));
        Ok(StatsOutcome {
            dir: cached.dir,
            cache_hit: cached.cache_hit,
            files,
        })
    })
}

/// Everything [`cmd_sweep`] computed, also written to `cfg.out`.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub distances: DistanceTable,
    pub curves: Vec<CorrelationCurve>,
    pub best: BTreeMap<String, BestLayerReport>,
    pub cache_hit: bool,
}

fn excluded_systems(manifest: &DatasetManifest, exclude_natural: bool) -> HashSet<String> {
    if !exclude_natural {
        return HashSet::new();
    }
    manifest
        .systems
        .iter()
        .filter(|s| s.is_natural)
        .map(|s| s.system_id.clone())
        .collect()
}

fn dimensions_for(cfg: &RunConfig, manifest: &DatasetManifest) -> Result<Vec<String>> {
    let dims = if cfg.dimensions.is_empty() {
        manifest.dimensions()
    } else {
        cfg.dimensions.clone()
    };
    if dims.is_empty() {
        return Err(Error::Validation(format!(
            "dataset {:?} has no rating dimensions",
            manifest.dataset_id
        )));
    }
    Ok(dims)
}

/// Distances, per-layer correlation curves and best layers for every
/// requested dimension.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<SweepOutcome> {
    with_threads(cfg.threads, || {
        let manifest = load_checked_manifest(&cfg.manifest)?;
        let dims = dimensions_for(cfg, &manifest)?;
        create_out(&cfg.out)?;
        let cached = cached_summaries(&manifest, cfg)?;
        let s = &cached.summaries;
        let distances = system_layer_distances(&s.dataset_id, &s.systems, &s.reference)?;
        write_distances_csv(&distances, cfg.out.join(DISTANCES_CSV))?;

        let excluded = excluded_systems(&manifest, cfg.exclude_natural);
        let table = distances.filtered(|id| !excluded.contains(id));
        let ratings = RatingsTable::from_manifest(&manifest);
        let curves = dims
            .iter()
            .map(|d| correlate_layers(&table, &ratings, d, cfg.method))
            .collect::<Result<Vec<_>>>()?;
        write_correlations_csv(&curves, cfg.out.join(CORRELATIONS_CSV))?;

        let best = curves
            .iter()
            .map(|c| best_layers(c).map(|r| (c.dimension.clone(), r)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        write_text(&cfg.out.join(BEST_LAYERS_JSON), &best_layers_json(&best))?;

        if cfg.svg {
            let series: Vec<(String, Vec<Option<f64>>)> = curves
                .iter()
                .map(|c| (c.dimension.clone(), c.values.clone()))
                .collect();
            let title = format!(
                "{}: layer-wise negated {} correlation with W2",
                manifest.dataset_id, cfg.method
            );
            write_text(&cfg.out.join(CURVES_SVG), &render_curves_svg(&title, &series))?;
        }
        Ok(SweepOutcome {
            distances,
            curves,
            best,
            cache_hit: cached.cache_hit,
        })
    })
}

/// Parses `LABEL=PATH`.
pub fn parse_labeled_path(text: &str) -> Result<(String, PathBuf)> {
    match text.split_once('=') {
        Some((label, path)) if !label.is_empty() && !path.is_empty() => {
            Ok((label.to_string(), PathBuf::from(path)))
        }
        _ => Err(Error::Validation(format!(
            "expected LABEL=PATH, got {text:?}"
        ))),
    }
}

/// Curves of the manifest's systems against its own reference (labelled
/// `primary_label`) and against each alternative reference manifest.
pub fn cmd_refstudy(
    cfg: &RunConfig,
    primary_label: &str,
    alternatives: &[(String, PathBuf)],
) -> Result<ReferenceStudyResult> {
    if alternatives.is_empty() {
        return Err(Error::Validation(
            "at least one alternative reference (--reference LABEL=PATH) is needed".into(),
        ));
    }
    let mut labels = HashSet::from([primary_label]);
    for (label, _) in alternatives {
        if !labels.insert(label.as_str()) {
            return Err(Error::Validation(format!(
                "duplicate reference label {label:?}"
            )));
        }
    }
    with_threads(cfg.threads, || {
        let manifest = load_checked_manifest(&cfg.manifest)?;
        let dimension = dimensions_for(cfg, &manifest)?.remove(0);
        let mut alt_manifests = Vec::with_capacity(alternatives.len());
        for (label, path) in alternatives {
            let mut m = load_checked_manifest(path)?;
            if m.n_layers != manifest.n_layers || m.dim != manifest.dim {
                return Err(Error::Validation(format!(
                    "reference {label:?} ({}) has {} layers × dim {}, dataset has {} × {}",
                    path.display(),
                    m.n_layers,
                    m.dim,
                    manifest.n_layers,
                    manifest.dim
                )));
            }
            m.systems.clear();
            alt_manifests.push((label.clone(), m));
        }
        create_out(&cfg.out)?;
        let primary = cached_summaries(&manifest, cfg)?.summaries;
        let mut references = vec![(primary_label.to_string(), primary.reference)];
        for (label, m) in &alt_manifests {
            let s = cached_summaries(m, cfg).map_err(|e| e.context(format!("reference {label:?}")))?;
            references.push((label.clone(), s.summaries.reference));
        }
        let result = reference_study(
            &primary.systems,
            &references,
            &RatingsTable::from_manifest(&manifest),
            &excluded_systems(&manifest, cfg.exclude_natural),
            &dimension,
            cfg.method,
        )?;
        write_refstudy_csv(&result, cfg.out.join(REFSTUDY_CSV))?;
        if cfg.svg {
            let series: Vec<(String, Vec<Option<f64>>)> = result
                .curves
                .iter()
                .map(|(l, c)| (l.clone(), c.values.clone()))
                .collect();
            let title = format!("{}: {dimension} by reference set", manifest.dataset_id);
            write_text(&cfg.out.join(REFSTUDY_SVG), &render_curves_svg(&title, &series))?;
        }
        Ok(result)
    })
}

/// Generates a planted dataset, or with `reference_offset` a reference-only
/// set, and returns the manifest path.
pub fn cmd_synth(spec: &PlantedSpec, out: &Path, reference_offset: Option<f64>) -> Result<PathBuf> {
    match reference_offset {
        None => gen_planted_dataset(spec, out)?,
        Some(offset) => gen_reference_set(spec, offset, out)?,
    };
    Ok(out.join("manifest.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_formatting() {
        assert_eq!(format_value(1.0), "1.000000");
        assert_eq!(format_value(-0.0000001), "0.000000");
        assert_eq!(format_value(0.9642857), "0.964286");
    }

    #[test]
    fn config_precedence() {
        let flags = ConfigLayer {
            threads: Some(8),
            ..Default::default()
        };
        let file: ConfigLayer =
            serde_json::from_str(r#"{"manifest": "m.json", "threads": 2, "method": "pearson"}"#)
                .unwrap();
        let cfg = RunConfig::resolve(flags.over(file)).unwrap();
        assert_eq!(cfg.threads, 8);
        assert_eq!(cfg.method, CorrelationMethod::Pearson);
        assert_eq!(cfg.manifest, PathBuf::from("m.json"));
        assert_eq!(cfg.pooling, PoolingMode::Frames);
        assert_eq!(cfg.cache, PathBuf::from("layerprobe-out/cache"));
        assert!(RunConfig::resolve(ConfigLayer::default()).is_err());
        assert!(serde_json::from_str::<ConfigLayer>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn labeled_paths() {
        assert_eq!(
            parse_labeled_path("fr=refs/fr.json").unwrap(),
            ("fr".to_string(), PathBuf::from("refs/fr.json"))
        );
        assert!(parse_labeled_path("nolabel").is_err());
        assert!(parse_labeled_path("=x").is_err());
    }

    #[test]
    fn best_layers_json_shape() {
        let best = BTreeMap::from([(
            "naturalness".to_string(),
            BestLayerReport {
                best_value: 1.0,
                layer_groups: vec![(1, 2)],
            },
        )]);
        let v: serde_json::Value = serde_json::from_str(&best_layers_json(&best)).unwrap();
        assert_eq!(v["naturalness"]["value"], 1.0);
        assert_eq!(v["naturalness"]["groups"], "1-2");
    }

    #[test]
    fn svg_breaks_lines_at_missing_values() {
        let svg = render_curves_svg(
            "t <&>",
            &[("a".into(), vec![Some(0.5), None, Some(0.2), Some(0.1)])],
        );
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("t &lt;&amp;&gt;"));
        assert!(svg.contains(">layer<") && svg.contains(">negated correlation<"));
    }
}
