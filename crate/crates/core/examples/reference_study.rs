//! Compares the correlation curves obtained against a matched reference set
//! and against one whose mean has drifted.

use std::collections::HashSet;

use layerprobe::sweep::{build_summaries, reference_study};
use layerprobe::synth::{gen_planted_dataset, gen_reference_set, PlantedSpec, PLANTED_DIMENSION};
use layerprobe::{CorrelationMethod, PoolingMode, RatingsTable};

fn main() -> layerprobe::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let spec = PlantedSpec::default();
    let data = gen_planted_dataset(&spec, dir.path().join("data"))?;

    // halfway along the planted shifts: the middle system looks closest
    let offset = spec.shift_step * (spec.n_systems - 1) as f64 / 2.0;
    let drifted = gen_reference_set(&spec, offset, dir.path().join("drifted"))?;

    let ours = build_summaries(&data, PoolingMode::Frames)?;
    let theirs = build_summaries(&drifted, PoolingMode::Frames)?;
    let study = reference_study(
        &ours.systems,
        &[
            ("matched".to_string(), ours.reference),
            (format!("offset {offset}"), theirs.reference),
        ],
        &RatingsTable::from_manifest(&data),
        &HashSet::new(),
        PLANTED_DIMENSION,
        CorrelationMethod::Spearman,
    )?;

    for (label, curve) in &study.curves {
        let cells: Vec<String> = curve
            .values
            .iter()
            .map(|v| v.map_or("   -".into(), |r| format!("{r:>5.2}")))
            .collect();
        println!("{label:>12}: {}", cells.join(" "));
    }
    Ok(())
}
