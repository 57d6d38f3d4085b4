#![allow(dead_code)]

use layerprobe::synth::SplitMix64;
use layerprobe::GaussianSummary;

pub fn normals(rng: &mut SplitMix64, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.next_normal()).collect()
}

/// `A·Aᵀ / dim` with standard normal `A`, plus `ridge · I`.
pub fn random_psd(rng: &mut SplitMix64, dim: usize, ridge: f64) -> Vec<f64> {
    let a = normals(rng, dim * dim);
    let mut out = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut s = 0.0;
            for k in 0..dim {
                s += a[i * dim + k] * a[j * dim + k];
            }
            s /= dim as f64;
            if i == j {
                s += ridge;
            }
            out[i * dim + j] = s;
            out[j * dim + i] = s;
        }
    }
    out
}

pub fn random_gaussian(rng: &mut SplitMix64, dim: usize) -> GaussianSummary {
    GaussianSummary {
        count: 1000,
        mean: normals(rng, dim),
        covariance: random_psd(rng, dim, 0.0),
    }
}

/// Naive two-pass mean and unbiased covariance.
pub fn two_pass(frames: &[f32], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = frames.len() / dim;
    let mut mean = vec![0.0; dim];
    for row in frames.chunks_exact(dim) {
        for j in 0..dim {
            mean[j] += row[j] as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![0.0; dim * dim];
    for row in frames.chunks_exact(dim) {
        for i in 0..dim {
            for j in 0..dim {
                cov[i * dim + j] += (row[i] as f64 - mean[i]) * (row[j] as f64 - mean[j]);
            }
        }
    }
    cov.iter_mut().for_each(|c| *c /= (n - 1) as f64);
    (mean, cov)
}

pub fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn rel_frobenius(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    frobenius(&diff) / frobenius(b).max(f64::MIN_POSITIVE)
}

pub fn matmul(a: &[f64], b: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            for j in 0..dim {
                out[i * dim + j] += aik * b[k * dim + j];
            }
        }
    }
    out
}

/// Random orthogonal matrix by twice-applied modified Gram–Schmidt.
pub fn random_orthogonal(rng: &mut SplitMix64, dim: usize) -> Vec<f64> {
    let mut cols: Vec<Vec<f64>> = (0..dim).map(|_| normals(rng, dim)).collect();
    for _ in 0..2 {
        for j in 0..dim {
            for k in 0..j {
                let prev = cols[k].clone();
                let dot: f64 = cols[j].iter().zip(&prev).map(|(a, b)| a * b).sum();
                for (a, b) in cols[j].iter_mut().zip(&prev) {
                    *a -= dot * b;
                }
            }
            let norm = frobenius(&cols[j]);
            cols[j].iter_mut().for_each(|v| *v /= norm);
        }
    }
    let mut q = vec![0.0; dim * dim];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..dim {
            q[i * dim + j] = col[i];
        }
    }
    q
}

/// `Q·diag(λ)·Qᵀ` with log-uniform eigenvalues in `[1/cond, 1]`, both ends included.
pub fn psd_with_condition(rng: &mut SplitMix64, dim: usize, cond: f64) -> Vec<f64> {
    let q = random_orthogonal(rng, dim);
    let lambda: Vec<f64> = (0..dim)
        .map(|k| match k {
            0 => 1.0,
            1 => 1.0 / cond,
            _ => cond.powf(-rng.next_uniform()),
        })
        .collect();
    let mut out = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let s: f64 = (0..dim).map(|k| q[i * dim + k] * lambda[k] * q[j * dim + k]).sum();
            out[i * dim + j] = s;
            out[j * dim + i] = s;
        }
    }
    out
}

/// Frames with correlated coordinates and a large common offset, as f32.
pub fn offset_frames(rng: &mut SplitMix64, n: usize, dim: usize, offset: f64) -> Vec<f32> {
    let mut out = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let shared = rng.next_normal();
        for j in 0..dim {
            let v = offset + (j as f64 + 1.0) * rng.next_normal() + 0.5 * shared;
            out.push(v as f32);
        }
    }
    out
}
