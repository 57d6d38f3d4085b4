//! Streams frames into per-chunk accumulators, merges them, and compares the
//! result with a direct two-pass computation.

use layerprobe::stats::merge_tree;
use layerprobe::synth::SplitMix64;
use layerprobe::StatsAccumulator;

const DIM: usize = 3;

fn main() -> layerprobe::Result<()> {
    let mut rng = SplitMix64::new(42);
    let frames: Vec<f32> = (0..50_000 * DIM)
        .map(|i| (100.0 + (i % DIM + 1) as f64 * rng.next_normal()) as f32)
        .collect();

    let mut whole = StatsAccumulator::new(DIM);
    whole.accumulate(&frames)?;

    // e.g. one accumulator per utterance, merged in any grouping
    let parts = frames
        .chunks(DIM * 1234)
        .map(|chunk| {
            let mut acc = StatsAccumulator::new(DIM);
            acc.accumulate(chunk).map(|_| acc)
        })
        .collect::<layerprobe::Result<Vec<_>>>()?;
    println!("{} chunk accumulators", parts.len());
    let merged = merge_tree(DIM, parts)?.finalize()?;
    let direct = whole.finalize()?;

    let n = (frames.len() / DIM) as f64;
    let mut mean = [0.0; DIM];
    for row in frames.chunks_exact(DIM) {
        for j in 0..DIM {
            mean[j] += row[j] as f64 / n;
        }
    }
    let mut var = [0.0; DIM];
    for row in frames.chunks_exact(DIM) {
        for j in 0..DIM {
            var[j] += (row[j] as f64 - mean[j]).powi(2) / (n - 1.0);
        }
    }

    println!("{:>3} {:>12} {:>12} {:>12}", "j", "streamed", "merged", "two-pass");
    for (j, v) in var.iter().enumerate() {
        println!(
            "{j:>3} {:>12.6} {:>12.6} {:>12.6}",
            direct.covariance[j * DIM + j],
            merged.covariance[j * DIM + j],
            v
        );
    }
    println!("count {} mean {:?}", direct.count, direct.mean);
    Ok(())
}
