//! Synthetic datasets with planted ground truth, and brute-force oracles.
//!
//! # Generator
//!
//! All randomness comes from [`SplitMix64`] so streams can be reproduced in
//! any language:
//!
//! ```text
//! state ← state + 0x9E3779B97F4A7C15
//! z ← state
//! z ← (z ⊕ (z ≫ 30)) · 0xBF58476D1CE4E5B9
//! z ← (z ⊕ (z ≫ 27)) · 0x94D049BB133111EB
//! output z ⊕ (z ≫ 31)                      (all arithmetic mod 2⁶⁴)
//! ```
//!
//! A uniform draw in (0, 1) is `((x ≫ 11) + 0.5) · 2⁻⁵³`. A standard normal
//! consumes two uniforms `u1, u2` (in that order) and returns
//! `√(−2 ln u1) · cos(2π u2)`; the sine half is discarded.
//!
//! # Planted dataset
//!
//! Values are drawn in file order: reference utterances first, then systems
//! `k = 0..K`, each utterance layer by layer, frame by frame, coordinate by
//! coordinate. Reference frames are `N(0, I)` at every layer. System `k`
//! frames are `N(k · shift_step · e₁, I)` on signal layers and `N(0, I)`
//! elsewhere. System 0 is marked natural. Naturalness ratings are
//! `5 − 4k / (K − 1)`, so the rating falls as the planted shift grows.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{
    write_embedding_file, write_manifest, DatasetManifest, SystemEntry, UtteranceEmbeddings,
};

/// Rating dimension written by the generator.
pub const PLANTED_DIMENSION: &str = "naturalness";

/// SplitMix64 with a 64-bit state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
    pub const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
    pub const MIX2: u64 = 0x94D0_49BB_1331_11EB;

    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(Self::GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(Self::MIX1);
        z = (z ^ (z >> 27)).wrapping_mul(Self::MIX2);
        z ^ (z >> 31)
    }

    /// Uniform in the open interval (0, 1).
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Parameters of a planted dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub seed: u64,
    pub n_systems: usize,
    pub n_layers: usize,
    pub dim: usize,
    pub frames_per_utterance: usize,
    pub utterances_per_system: usize,
    pub reference_utterances: usize,
    pub signal_layers: Vec<usize>,
    pub shift_step: f64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            seed: 7,
            n_systems: 5,
            n_layers: 6,
            dim: 8,
            frames_per_utterance: 100,
            utterances_per_system: 20,
            reference_utterances: 20,
            signal_layers: vec![1, 2],
            shift_step: 1.0,
        }
    }
}

impl PlantedSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_systems < 3 {
            return Err(Error::Validation(format!(
                "need at least 3 systems, got {}",
                self.n_systems
            )));
        }
        if self.n_layers == 0
            || self.dim == 0
            || self.frames_per_utterance == 0
            || self.utterances_per_system == 0
            || self.reference_utterances == 0
        {
            return Err(Error::Validation(
                "layers, dim, frames and utterance counts must be positive".into(),
            ));
        }
        if let Some(&l) = self.signal_layers.iter().find(|&&l| l >= self.n_layers) {
            return Err(Error::Validation(format!(
                "signal layer {l} is outside 0..{}",
                self.n_layers
            )));
        }
        if !self.shift_step.is_finite() || self.shift_step < 0.0 {
            return Err(Error::Validation(format!(
                "shift_step must be finite and non-negative, got {}",
                self.shift_step
            )));
        }
        Ok(())
    }

    pub fn is_signal_layer(&self, l: usize) -> bool {
        self.signal_layers.contains(&l)
    }

    /// Planted naturalness rating of system `k`.
    pub fn rating(&self, k: usize) -> f64 {
        5.0 - 4.0 * k as f64 / (self.n_systems - 1) as f64
    }

    /// Planted mean shift along e₁ of system `k` at layer `l`.
    pub fn system_shift(&self, k: usize, l: usize) -> f64 {
        if self.is_signal_layer(l) {
            k as f64 * self.shift_step
        } else {
            0.0
        }
    }

    pub fn system_id(k: usize) -> String {
        format!("sys{k:02}")
    }

    fn model_id(&self) -> String {
        format!("planted-L{}-D{}", self.n_layers, self.dim)
    }
}

fn draw_utterance(
    rng: &mut SplitMix64,
    spec: &PlantedSpec,
    id: String,
    shift_at: impl Fn(usize) -> f64,
) -> Result<UtteranceEmbeddings> {
    let (l_count, t, d) = (spec.n_layers, spec.frames_per_utterance, spec.dim);
    let mut data = Vec::with_capacity(l_count * t * d);
    for l in 0..l_count {
        let shift = shift_at(l);
        for _ in 0..t {
            for j in 0..d {
                let offset = if j == 0 { shift } else { 0.0 };
                data.push((rng.next_normal() + offset) as f32);
            }
        }
    }
    UtteranceEmbeddings::new(id, l_count, d, t, data)
}

fn write_reference(
    rng: &mut SplitMix64,
    spec: &PlantedSpec,
    offset: f64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let dir = out_dir.join("reference");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut paths = Vec::with_capacity(spec.reference_utterances);
    for u in 0..spec.reference_utterances {
        let emb = draw_utterance(rng, spec, format!("ref_utt{u:04}"), |_| offset)?;
        let rel = PathBuf::from("reference").join(format!("utt{u:04}.lwe"));
        write_embedding_file(&emb, out_dir.join(&rel))?;
        paths.push(rel);
    }
    Ok(paths)
}

/// Writes the planted dataset under `out_dir` and returns its manifest
/// (also written to `out_dir/manifest.json`).
pub fn gen_planted_dataset(spec: &PlantedSpec, out_dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut rng = SplitMix64::new(spec.seed);
    let reference = write_reference(&mut rng, spec, 0.0, out_dir)?;
    let mut systems = Vec::with_capacity(spec.n_systems);
    for k in 0..spec.n_systems {
        let id = PlantedSpec::system_id(k);
        let dir = out_dir.join(&id);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut utterances = Vec::with_capacity(spec.utterances_per_system);
        for u in 0..spec.utterances_per_system {
            let emb = draw_utterance(&mut rng, spec, format!("{id}_utt{u:04}"), |l| {
                spec.system_shift(k, l)
            })?;
            let rel = PathBuf::from(&id).join(format!("utt{u:04}.lwe"));
            write_embedding_file(&emb, out_dir.join(&rel))?;
            utterances.push(rel);
        }
        systems.push(SystemEntry {
            system_id: id,
            is_natural: k == 0,
            ratings: BTreeMap::from([(PLANTED_DIMENSION.to_string(), spec.rating(k))]),
            utterances,
        });
    }
    let manifest = DatasetManifest {
        dataset_id: format!("planted-seed{}", spec.seed),
        model_id: spec.model_id(),
        n_layers: spec.n_layers,
        dim: spec.dim,
        systems,
        reference,
        base_dir: out_dir.to_path_buf(),
    };
    write_manifest(&manifest, out_dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Writes a reference-only dataset drawn from the same stream as the planted
/// reference, with every frame's first coordinate moved by `offset` at every
/// layer. `offset = 0` reproduces the planted reference exactly.
pub fn gen_reference_set(
    spec: &PlantedSpec,
    offset: f64,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest> {
    spec.validate()?;
    if !offset.is_finite() {
        return Err(Error::Validation(format!("offset {offset} is not finite")));
    }
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut rng = SplitMix64::new(spec.seed);
    let reference = write_reference(&mut rng, spec, offset, out_dir)?;
    let manifest = DatasetManifest {
        dataset_id: format!("planted-seed{}-reference{offset}", spec.seed),
        model_id: spec.model_id(),
        n_layers: spec.n_layers,
        dim: spec.dim,
        systems: Vec::new(),
        reference,
        base_dir: out_dir.to_path_buf(),
    };
    write_manifest(&manifest, out_dir.join("manifest.json"))?;
    Ok(manifest)
}

/// W2 between Gaussians with diagonal covariances, by scalar arithmetic only:
/// `√(Σ(μ1ᵢ − μ2ᵢ)² + Σ(√v1ᵢ − √v2ᵢ)²)`.
pub fn oracle_w2_diagonal(mean1: &[f64], vars1: &[f64], mean2: &[f64], vars2: &[f64]) -> Result<f64> {
    let d = mean1.len();
    if mean2.len() != d || vars1.len() != d || vars2.len() != d {
        return Err(Error::Dim("oracle inputs differ in length".into()));
    }
    if vars1.iter().chain(vars2).any(|&v| v.is_nan() || v < 0.0) {
        return Err(Error::Data("variances must be non-negative".into()));
    }
    let mut total = 0.0;
    for i in 0..d {
        let dm = mean1[i] - mean2[i];
        let ds = vars1[i].sqrt() - vars2[i].sqrt();
        total += dm * dm + ds * ds;
    }
    Ok(total.sqrt())
}

/// Largest input length accepted by [`oracle_spearman`].
pub const ORACLE_MAX_LEN: usize = 12;

// Rank of each value by exhaustive comparison: 1 + (#smaller) + (#equal − 1)/2.
fn brute_force_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let smaller = values.iter().filter(|&&w| w < v).count();
            let equal = values.iter().filter(|&&w| w == v).count();
            1.0 + smaller as f64 + (equal as f64 - 1.0) / 2.0
        })
        .collect()
}

/// Spearman correlation by exhaustive ranking and raw-sum Pearson,
/// independent of [`crate::rank`].
pub fn oracle_spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dim(format!(
            "lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Degenerate(format!("{n} points")));
    }
    if n > ORACLE_MAX_LEN {
        return Err(Error::Validation(format!(
            "oracle supports at most {ORACLE_MAX_LEN} points, got {n}"
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite input".into()));
    }
    let (rx, ry) = (brute_force_ranks(x), brute_force_ranks(y));
    let nf = n as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        sx += rx[i];
        sy += ry[i];
        sxx += rx[i] * rx[i];
        syy += ry[i] * ry[i];
        sxy += rx[i] * ry[i];
    }
    let vx = nf * sxx - sx * sx;
    let vy = nf * syy - sy * sy;
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::Degenerate("constant input".into()));
    }
    Ok(((nf * sxy - sx * sy) / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // First outputs for seed 0 as published with the algorithm.
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn normals_have_unit_moments() {
        let mut rng = SplitMix64::new(42);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 5.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn spec_validation() {
        let mut spec = PlantedSpec::default();
        spec.validate().unwrap();
        spec.signal_layers = vec![6];
        assert!(matches!(spec.validate(), Err(Error::Validation(_))));
        let spec = PlantedSpec {
            n_systems: 2,
            ..PlantedSpec::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn planted_ratings_fall_with_shift() {
        let spec = PlantedSpec::default();
        let r: Vec<f64> = (0..5).map(|k| spec.rating(k)).collect();
        assert_eq!(r, vec![5.0, 4.0, 3.0, 2.0, 1.0]);
        assert_eq!(spec.system_shift(3, 1), 3.0);
        assert_eq!(spec.system_shift(3, 0), 0.0);
    }

    #[test]
    fn diagonal_oracle() {
        assert_eq!(
            oracle_w2_diagonal(&[1.0, 2.0], &[3.0, 4.0], &[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            0.0
        );
        let v = oracle_w2_diagonal(&[0.0], &[1.0], &[3.0], &[4.0]).unwrap();
        assert!((v - 10f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            oracle_w2_diagonal(&[0.0], &[-1.0], &[0.0], &[1.0]),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn spearman_oracle() {
        let r = oracle_spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((r - 0.948683).abs() < 1e-6);
        assert_eq!(
            oracle_spearman(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap(),
            -1.0
        );
        assert_eq!(brute_force_ranks(&[5.0, 5.0, 5.0]), vec![2.0; 3]);
        assert!(oracle_spearman(&[0.0; 13], &[0.0; 13]).is_err());
    }
}
