mod common;

use common::*;
use layerprobe::rank::{average_ranks, negated_correlation, pearson, spearman};
use layerprobe::stats::merge_tree;
use layerprobe::synth::{oracle_spearman, oracle_w2_diagonal, SplitMix64};
use layerprobe::w2::{bures, psd_sqrt, w2, PsdMatrix};
use layerprobe::{CorrelationMethod, Error, GaussianSummary, StatsAccumulator};
use proptest::prelude::*;

fn scaled(g: &GaussianSummary, k: f64) -> GaussianSummary {
    GaussianSummary {
        count: g.count,
        mean: g.mean.iter().map(|v| v * k).collect(),
        covariance: g.covariance.iter().map(|v| v * k * k).collect(),
    }
}

fn shifted(g: &GaussianSummary, t: &[f64]) -> GaussianSummary {
    GaussianSummary {
        count: g.count,
        mean: g.mean.iter().zip(t).map(|(a, b)| a + b).collect(),
        covariance: g.covariance.clone(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w2_is_a_metric(seed in any::<u64>(), dim in 1usize..7) {
        let mut rng = SplitMix64::new(seed);
        let a = random_gaussian(&mut rng, dim);
        let b = random_gaussian(&mut rng, dim);
        let c = random_gaussian(&mut rng, dim);
        let ab = w2(&a, &b).unwrap();
        let ba = w2(&b, &a).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-8 * ab.max(1e-300));
        prop_assert!(w2(&a, &a).unwrap() < 1e-7);
        let ac = w2(&a, &c).unwrap();
        let bc = w2(&b, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-7);
    }

    #[test]
    fn w2_scales_and_ignores_common_translation(seed in any::<u64>(), dim in 1usize..7, k in -4.0f64..4.0) {
        prop_assume!(k.abs() > 1e-3);
        let mut rng = SplitMix64::new(seed);
        let a = random_gaussian(&mut rng, dim);
        let b = random_gaussian(&mut rng, dim);
        let ab = w2(&a, &b).unwrap();
        let s = w2(&scaled(&a, k), &scaled(&b, k)).unwrap();
        prop_assert!((s - k.abs() * ab).abs() <= 1e-8 * k.abs() * ab);
        let t = normals(&mut rng, dim);
        let moved = w2(&shifted(&a, &t), &shifted(&b, &t)).unwrap();
        prop_assert!((moved - ab).abs() <= 1e-9 * ab.max(1.0));
    }

    #[test]
    fn w2_matches_diagonal_oracle(
        m1 in proptest::collection::vec(-5.0f64..5.0, 1..10),
        seed in any::<u64>(),
    ) {
        let dim = m1.len();
        let mut rng = SplitMix64::new(seed);
        let m2 = normals(&mut rng, dim);
        let v1: Vec<f64> = (0..dim).map(|_| 0.01 + 10.0 * rng.next_uniform()).collect();
        let v2: Vec<f64> = (0..dim).map(|_| 0.01 + 10.0 * rng.next_uniform()).collect();
        let g1 = GaussianSummary::new(10, m1.clone(), PsdMatrix::diagonal(&v1).into_vec()).unwrap();
        let g2 = GaussianSummary::new(10, m2.clone(), PsdMatrix::diagonal(&v2).into_vec()).unwrap();
        let want = oracle_w2_diagonal(&m1, &v1, &m2, &v2).unwrap();
        let got = w2(&g1, &g2).unwrap();
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1e-300));
    }

    #[test]
    fn spearman_ignores_monotone_transforms(
        x in proptest::collection::vec(-100.0f64..100.0, 3..30),
        seed in any::<u64>(),
    ) {
        let mut rng = SplitMix64::new(seed);
        let y = normals(&mut rng, x.len());
        let r = match spearman(&x, &y) {
            Ok(r) => r,
            Err(_) => return Ok(()),
        };
        let tx: Vec<f64> = x.iter().map(|v| (v / 50.0).exp()).collect();
        let ty: Vec<f64> = y.iter().map(|v| v * v * v + 2.0 * v).collect();
        prop_assert!((spearman(&tx, &ty).unwrap() - r).abs() < 1e-12);
        prop_assert!((spearman(&y, &x).unwrap() - r).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert!((spearman(&neg, &y).unwrap() + r).abs() < 1e-12);
        let nc = negated_correlation(&x, &y, CorrelationMethod::Spearman).unwrap();
        prop_assert_eq!(nc, -r);
    }

    #[test]
    fn spearman_matches_oracle_with_ties(
        x in proptest::collection::vec(0u8..4, 3..=12),
        seed in any::<u64>(),
    ) {
        let mut rng = SplitMix64::new(seed);
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let y: Vec<f64> = (0..x.len()).map(|_| (rng.next_uniform() * 5.0).floor()).collect();
        match (spearman(&x, &y), oracle_spearman(&x, &y)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
            (Err(Error::Degenerate(_)), Err(Error::Degenerate(_))) => {}
            (a, b) => prop_assert!(false, "disagreement: {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn merge_is_order_independent(seed in any::<u64>(), sizes in proptest::collection::vec(0usize..40, 3)) {
        let dim = 3;
        let mut rng = SplitMix64::new(seed);
        let parts: Vec<StatsAccumulator> = sizes
            .iter()
            .map(|&n| {
                let mut acc = StatsAccumulator::new(dim);
                acc.accumulate(&offset_frames(&mut rng, n, dim, 100.0)).unwrap();
                acc
            })
            .collect();
        prop_assume!(sizes.iter().sum::<usize>() >= 2);
        let (a, b, c) = (&parts[0], &parts[1], &parts[2]);
        let left = a.merge(b).unwrap().merge(c).unwrap().finalize().unwrap();
        let right = a.merge(&b.merge(c).unwrap()).unwrap().finalize().unwrap();
        let swapped = c.merge(&a.merge(b).unwrap()).unwrap().finalize().unwrap();
        prop_assert_eq!(left.count, swapped.count);
        prop_assert!(rel_frobenius(&right.covariance, &left.covariance) < 1e-10);
        prop_assert!(rel_frobenius(&swapped.covariance, &left.covariance) < 1e-10);
        prop_assert!(rel_frobenius(&swapped.mean, &left.mean) < 1e-12);
    }
}

#[test]
fn streaming_matches_two_pass() {
    let mut rng = SplitMix64::new(11);
    let dim = 6;
    let frames = offset_frames(&mut rng, 20_000, dim, 1000.0);
    let (mean, cov) = two_pass(&frames, dim);

    let mut whole = StatsAccumulator::new(dim);
    whole.accumulate(&frames).unwrap();
    let g = whole.finalize().unwrap();
    assert_eq!(g.count, 20_000);
    assert!(rel_frobenius(&g.mean, &mean) < 1e-12);
    assert!(rel_frobenius(&g.covariance, &cov) < 1e-10);

    let mut pushed = StatsAccumulator::new(dim);
    for row in frames.chunks_exact(dim) {
        let row: Vec<f64> = row.iter().map(|&v| f64::from(v)).collect();
        pushed.push(&row).unwrap();
    }
    assert!(rel_frobenius(&pushed.finalize().unwrap().covariance, &cov) < 1e-10);

    let chunks: Vec<StatsAccumulator> = frames
        .chunks(dim * 997)
        .map(|c| {
            let mut acc = StatsAccumulator::new(dim);
            acc.accumulate(c).unwrap();
            acc
        })
        .collect();
    let mut reversed = chunks.clone();
    reversed.reverse();
    let fwd = merge_tree(dim, chunks).unwrap().finalize().unwrap();
    let rev = merge_tree(dim, reversed).unwrap().finalize().unwrap();
    assert!(rel_frobenius(&fwd.covariance, &cov) < 1e-10);
    assert!(rel_frobenius(&rev.covariance, &fwd.covariance) < 1e-10);
}

#[test]
fn monte_carlo_mean_within_five_sigma() {
    let mut rng = SplitMix64::new(5);
    let n = 10_000;
    let dim = 4;
    let sd = [1.0, 2.0, 0.5, 3.0];
    let mu = [1.0, -2.0, 0.0, 10.0];
    let mut frames = Vec::with_capacity(n * dim);
    for _ in 0..n {
        for j in 0..dim {
            frames.push((mu[j] + sd[j] * rng.next_normal()) as f32);
        }
    }
    let mut acc = StatsAccumulator::new(dim);
    acc.accumulate(&frames).unwrap();
    let g = acc.finalize().unwrap();
    for j in 0..dim {
        assert!((g.mean[j] - mu[j]).abs() < 5.0 * sd[j] / (n as f64).sqrt(), "coordinate {j}");
        let var = g.covariance[j * dim + j];
        assert!((var / (sd[j] * sd[j]) - 1.0).abs() < 0.1, "variance {j}: {var}");
    }
}

#[test]
fn too_few_frames_is_insufficient_data() {
    let mut acc = StatsAccumulator::new(2);
    assert!(matches!(acc.finalize(), Err(Error::InsufficientData(_))));
    acc.push(&[1.0, 2.0]).unwrap();
    assert!(matches!(acc.finalize(), Err(Error::InsufficientData(_))));
    acc.push(&[3.0, 2.0]).unwrap();
    let g = acc.finalize().unwrap();
    assert_eq!(g.covariance, vec![2.0, 0.0, 0.0, 0.0]);
    assert!(matches!(acc.push(&[1.0]), Err(Error::Dim(_))));
}

#[test]
fn psd_sqrt_reconstructs_ill_conditioned_inputs() {
    let mut rng = SplitMix64::new(3);
    for &(dim, cond) in &[(2usize, 1e8), (16, 1e4), (48, 1e8)] {
        let m = psd_with_condition(&mut rng, dim, cond);
        let s = psd_sqrt(&PsdMatrix::new(dim, m.clone()).unwrap()).unwrap();
        let back = matmul(s.as_slice(), s.as_slice(), dim);
        let err = rel_frobenius(&back, &m);
        assert!(err < 1e-8, "dim {dim} cond {cond:e}: {err:e}");
    }
}

#[test]
fn psd_sqrt_handles_rank_deficiency() {
    // rank one: v·vᵀ with v = (1, 2, 2), whose root is v·vᵀ / ‖v‖
    let v = [1.0, 2.0, 2.0];
    let m: Vec<f64> = (0..9).map(|k| v[k / 3] * v[k % 3]).collect();
    let s = psd_sqrt(&PsdMatrix::new(3, m.clone()).unwrap()).unwrap();
    let want: Vec<f64> = m.iter().map(|x| x / 3.0).collect();
    assert!(rel_frobenius(s.as_slice(), &want) < 1e-12);
    let b = bures(&PsdMatrix::new(3, m).unwrap(), &PsdMatrix::zeros(3)).unwrap();
    assert!((b - 9.0).abs() < 1e-12);
}

#[test]
fn rank_fixtures() {
    let x = [1.0, 2.0, 3.0, 4.0];
    let y = [1.0, 2.0, 2.0, 3.0];
    assert!((spearman(&y, &x).unwrap() - 0.948683).abs() < 1e-6);
    assert!((oracle_spearman(&y, &x).unwrap() - 0.948683).abs() < 1e-6);
    assert_eq!(average_ranks(&y).unwrap(), vec![1.0, 2.5, 2.5, 4.0]);
    assert!(matches!(spearman(&x, &[2.0; 4]), Err(Error::Degenerate(_))));
    assert!(matches!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::Degenerate(_))));
    assert!(matches!(spearman(&x, &y[..3]), Err(Error::Dim(_))));
    assert_eq!(spearman(&x, &x).unwrap(), 1.0);
}
