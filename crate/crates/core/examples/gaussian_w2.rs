//! 2-Wasserstein distances between Gaussians, the Bures term and the PSD
//! square root.

use layerprobe::w2::{bures, psd_sqrt, w2, PsdMatrix, W2Target};
use layerprobe::GaussianSummary;

fn main() -> layerprobe::Result<()> {
    // 1-D: mean gap 3, standard deviations 1 and 2, so W2² = 9 + 1
    let a = GaussianSummary::new(100, vec![0.0], vec![1.0])?;
    let b = GaussianSummary::new(100, vec![3.0], vec![4.0])?;
    println!("w2 1-D       = {:.9} (√10 = {:.9})", w2(&a, &b)?, 10f64.sqrt());

    let s = psd_sqrt(&PsdMatrix::new(2, vec![2.0, 1.0, 1.0, 2.0])?)?;
    println!("sqrt [[2,1],[1,2]] = {:?}", s.as_slice());

    let p = PsdMatrix::new(2, vec![2.0, 0.6, 0.6, 1.0])?;
    let q = PsdMatrix::new(2, vec![1.0, -0.3, -0.3, 3.0])?;
    println!("bures(p, q)  = {:.6}", bures(&p, &q)?);
    println!("bures(p, p)  = {:.3e}", bures(&p, &p)?);

    // many distances against one reference: decompose it once
    let reference = GaussianSummary::new(100, vec![0.0, 0.0], q.into_vec())?;
    let target = W2Target::new(&reference)?;
    for shift in [0.0, 0.5, 1.0, 2.0] {
        let g = GaussianSummary::new(100, vec![shift, 0.0], p.as_slice().to_vec())?;
        println!("shift {shift:>3}: w2 = {:.6}", target.distance_from(&g)?);
    }
    Ok(())
}
