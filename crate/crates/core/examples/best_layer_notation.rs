//! How tied best layers are reported: contiguous runs collapse to `a-b`.

use std::collections::BTreeMap;

use layerprobe::report::best_layers_json;
use layerprobe::sweep::best_layers;
use layerprobe::{CorrelationCurve, CorrelationMethod};

fn curve(values: Vec<Option<f64>>) -> CorrelationCurve {
    CorrelationCurve {
        dimension: "naturalness".into(),
        method: CorrelationMethod::Spearman,
        values,
    }
}

fn main() -> layerprobe::Result<()> {
    // a 25-layer model whose curve plateaus at 0.964 over layers 15..=21
    let mut plateau = vec![Some(0.7); 25];
    for v in &mut plateau[15..=21] {
        *v = Some(0.964);
    }
    let best = best_layers(&curve(plateau))?;
    println!("plateau: {:.3} at {}", best.best_value, best.groups_string());

    let split = best_layers(&curve(vec![Some(0.2), Some(0.9), Some(0.9), None, Some(0.9)]))?;
    println!("split:   {:.3} at {} (layers {:?})", split.best_value, split.groups_string(), split.layers());

    let reports = BTreeMap::from([("naturalness".to_string(), best)]);
    print!("{}", best_layers_json(&reports));
    Ok(())
}
