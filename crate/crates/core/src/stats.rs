//! Streaming, mergeable mean/covariance estimation for frame embeddings.
//!
//! Frames arrive as f32 but every sum is kept in f64. Each call to
//! [`StatsAccumulator::accumulate`] computes the block's own mean and
//! centered co-moment in two passes and then folds the block in with the
//! pairwise (Chan et al.) combination rule, the same rule [`StatsAccumulator::merge`]
//! uses for whole accumulators.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance for the covariance symmetry invariant.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Frames folded per block in [`StatsAccumulator::accumulate`].
const BLOCK_FRAMES: usize = 4096;

/// Mean and unbiased covariance of one (system-or-reference, layer) distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSummary {
    pub count: u64,
    pub mean: Vec<f64>,
    /// Row-major `dim × dim`.
    pub covariance: Vec<f64>,
}

impl GaussianSummary {
    pub fn new(count: u64, mean: Vec<f64>, covariance: Vec<f64>) -> Result<Self> {
        let s = GaussianSummary {
            count,
            mean,
            covariance,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Checks shape, `count ≥ 2`, finiteness and symmetry. The eigenvalue
    /// condition is left to the consumers that decompose the matrix anyway.
    pub fn validate(&self) -> Result<()> {
        let d = self.mean.len();
        if d == 0 {
            return Err(Error::Dim("summary has dimension 0".into()));
        }
        if self.covariance.len() != d * d {
            return Err(Error::Dim(format!(
                "covariance has {} entries, expected {}",
                self.covariance.len(),
                d * d
            )));
        }
        if self.count < 2 {
            return Err(Error::InsufficientData(format!(
                "summary count {} is below 2",
                self.count
            )));
        }
        if self
            .mean
            .iter()
            .chain(self.covariance.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Data("summary contains a non-finite value".into()));
        }
        let asym = linalg::max_asymmetry(&self.covariance, d);
        if asym > SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric {
                max_asymmetry: asym,
            });
        }
        Ok(())
    }
}

/// Running count, mean and co-moment (sum of centered outer products).
#[derive(Debug, Clone, PartialEq)]
pub struct StatsAccumulator {
    dim: usize,
    count: u64,
    mean: Vec<f64>,
    comoment: Vec<f64>,
}

impl StatsAccumulator {
    pub fn new(dim: usize) -> Self {
        StatsAccumulator {
            dim,
            count: 0,
            mean: vec![0.0; dim],
            comoment: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Row-major `dim × dim` co-moment.
    pub fn comoment(&self) -> &[f64] {
        &self.comoment
    }

    /// Folds in `frames`, a row-major `n × dim` block (one frame per row).
    pub fn accumulate(&mut self, frames: &[f32]) -> Result<()> {
        if self.dim == 0 || !frames.len().is_multiple_of(self.dim) {
            return Err(Error::Dim(format!(
                "frame block of {} values is not a multiple of dimension {}",
                frames.len(),
                self.dim
            )));
        }
        if frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in frame block".into()));
        }
        for block in frames.chunks(BLOCK_FRAMES * self.dim) {
            let b = Self::from_block(block, self.dim);
            *self = self.merge(&b)?;
        }
        Ok(())
    }

    /// Folds in one f64 vector (used for utterance-mean pooling).
    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dim(format!(
                "vector of length {} for accumulator of dimension {}",
                x.len(),
                self.dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in vector".into()));
        }
        let single = StatsAccumulator {
            dim: self.dim,
            count: 1,
            mean: x.to_vec(),
            comoment: vec![0.0; self.dim * self.dim],
        };
        *self = self.merge(&single)?;
        Ok(())
    }

    // Two-pass statistics of one finite block.
    fn from_block(block: &[f32], dim: usize) -> Self {
        let n = block.len() / dim;
        let mut mean = vec![0.0f64; dim];
        for row in block.chunks_exact(dim) {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v as f64;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let centered = Mat::from_fn(n, dim, |i, j| block[i * dim + j] as f64 - mean[j]);
        let comoment = linalg::to_row_major(linalg::gram(centered.as_ref()).as_ref());
        StatsAccumulator {
            dim,
            count: n as u64,
            mean,
            comoment,
        }
    }

    /// Combination of two accumulators as if one had seen both streams.
    ///
    /// An empty side returns a clone of the other side unchanged.
    pub fn merge(&self, other: &StatsAccumulator) -> Result<StatsAccumulator> {
        if self.dim != other.dim {
            return Err(Error::Dim(format!(
                "cannot merge accumulators of dimension {} and {}",
                self.dim, other.dim
            )));
        }
        if other.count == 0 {
            return Ok(self.clone());
        }
        if self.count == 0 {
            return Ok(other.clone());
        }
        let d = self.dim;
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta: Vec<f64> = other
            .mean
            .iter()
            .zip(&self.mean)
            .map(|(b, a)| b - a)
            .collect();
        let mean = self
            .mean
            .iter()
            .zip(&delta)
            .map(|(a, dl)| a + dl * (nb / n))
            .collect();
        let w = na * nb / n;
        let mut comoment = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let v = self.comoment[i * d + j]
                    + other.comoment[i * d + j]
                    + delta[i] * delta[j] * w;
                comoment[i * d + j] = v;
                comoment[j * d + i] = v;
            }
        }
        Ok(StatsAccumulator {
            dim: d,
            count: self.count + other.count,
            mean,
            comoment,
        })
    }

    /// Mean and unbiased (`count − 1`) covariance, symmetrized.
    pub fn finalize(&self) -> Result<GaussianSummary> {
        if self.count < 2 {
            return Err(Error::InsufficientData(format!(
                "{} frame(s) seen, at least 2 are needed for a covariance",
                self.count
            )));
        }
        let d = self.dim;
        let denom = (self.count - 1) as f64;
        let mut covariance = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let v = 0.5 * (self.comoment[i * d + j] + self.comoment[j * d + i]) / denom;
                covariance[i * d + j] = v;
                covariance[j * d + i] = v;
            }
        }
        Ok(GaussianSummary {
            count: self.count,
            mean: self.mean.clone(),
            covariance,
        })
    }
}

/// Merges accumulators with a balanced pairwise tree over their index order.
///
/// The tree shape depends only on `accs.len()`, so the result is reproducible
/// however the inputs were produced.
pub fn merge_tree(dim: usize, accs: Vec<StatsAccumulator>) -> Result<StatsAccumulator> {
    let mut level = accs;
    if level.is_empty() {
        return Ok(StatsAccumulator::new(dim));
    }
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.chunks(2);
        for pair in &mut it {
            match pair {
                [a, b] => next.push(a.merge(b)?),
                [a] => next.push(a.clone()),
                _ => unreachable!(),
            }
        }
        level = next;
    }
    let root = level.pop().expect("non-empty");
    if root.dim != dim {
        return Err(Error::Dim(format!(
            "merge tree of dimension {} built for dimension {dim}",
            root.dim
        )));
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_covariance() {
        let mut acc = StatsAccumulator::new(2);
        acc.accumulate(&[0.0, 0.0, 2.0, 2.0]).unwrap();
        let s = acc.finalize().unwrap();
        assert_eq!(s.count, 2);
        assert_eq!(s.mean, vec![1.0, 1.0]);
        assert_eq!(s.covariance, vec![2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn empty_block_is_a_no_op() {
        let mut acc = StatsAccumulator::new(3);
        acc.accumulate(&[1.0, 2.0, 3.0, 4.0, 5.0, 7.0]).unwrap();
        let before = acc.clone();
        acc.accumulate(&[]).unwrap();
        assert_eq!(acc, before);
    }

    #[test]
    fn identical_frames_have_zero_covariance() {
        let mut acc = StatsAccumulator::new(2);
        acc.accumulate(&[1.5, -2.0, 1.5, -2.0]).unwrap();
        let s = acc.finalize().unwrap();
        assert!(s.covariance.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn finalize_needs_two_frames() {
        let mut acc = StatsAccumulator::new(2);
        assert!(matches!(acc.finalize(), Err(Error::InsufficientData(_))));
        acc.accumulate(&[1.0, 1.0]).unwrap();
        assert!(matches!(acc.finalize(), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn rejects_bad_blocks() {
        let mut acc = StatsAccumulator::new(2);
        assert!(matches!(acc.accumulate(&[1.0, 2.0, 3.0]), Err(Error::Dim(_))));
        assert!(matches!(
            acc.accumulate(&[1.0, f32::NAN]),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            acc.merge(&StatsAccumulator::new(3)),
            Err(Error::Dim(_))
        ));
    }

    #[test]
    fn merge_with_empty_is_exact_identity() {
        let mut acc = StatsAccumulator::new(2);
        acc.accumulate(&[0.1, 0.7, -3.0, 2.5, 9.0, 1.0]).unwrap();
        let empty = StatsAccumulator::new(2);
        assert_eq!(acc.merge(&empty).unwrap(), acc);
        assert_eq!(empty.merge(&acc).unwrap(), acc);
        assert_eq!(merge_tree(2, vec![]).unwrap(), empty);
    }

    #[test]
    fn push_matches_accumulate_for_single_vectors() {
        let mut a = StatsAccumulator::new(2);
        let mut b = StatsAccumulator::new(2);
        for x in [[1.0f32, 2.0], [3.0, -1.0], [0.5, 0.25]] {
            a.accumulate(&x).unwrap();
            b.push(&[x[0] as f64, x[1] as f64]).unwrap();
        }
        let (sa, sb) = (a.finalize().unwrap(), b.finalize().unwrap());
        for (x, y) in sa.covariance.iter().zip(&sb.covariance) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn summary_validation() {
        assert!(GaussianSummary::new(2, vec![0.0], vec![1.0]).is_ok());
        assert!(matches!(
            GaussianSummary::new(1, vec![0.0], vec![1.0]),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            GaussianSummary::new(5, vec![0.0, 0.0], vec![1.0, 0.5, 0.4, 1.0]),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(matches!(
            GaussianSummary::new(5, vec![0.0, 0.0], vec![1.0]),
            Err(Error::Dim(_))
        ));
    }
}
