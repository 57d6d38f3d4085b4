//! Spearman correlation with tied ranks, and the negated form used to score
//! distance against ratings.

use layerprobe::rank::{average_ranks, negated_correlation, pearson, spearman};
use layerprobe::CorrelationMethod;

fn main() -> layerprobe::Result<()> {
    let x = [1.0, 2.0, 2.0, 3.0];
    let y = [1.0, 2.0, 3.0, 4.0];
    println!("ranks of {x:?} = {:?}", average_ranks(&x)?);
    println!("spearman = {:.6}", spearman(&x, &y)?);

    // a distance that falls as the rating rises scores +1 once negated
    let distances = [0.4, 1.1, 2.5, 2.6, 9.0];
    let mos = [4.6, 3.9, 3.1, 2.2, 1.4];
    for method in [CorrelationMethod::Spearman, CorrelationMethod::Pearson] {
        println!("negated {method}: {:.6}", negated_correlation(&distances, &mos, method)?);
    }
    println!("pearson on raw values = {:.6}", pearson(&distances, &mos)?);

    match spearman(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]) {
        Ok(r) => println!("unexpected {r}"),
        Err(e) => println!("constant ratings: {e} (exit code {})", e.exit_code()),
    }
    Ok(())
}
