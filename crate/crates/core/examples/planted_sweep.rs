//! Generates a dataset with a planted signal at layers 1 and 2, then runs the
//! full sweep: summaries, distances, per-layer correlation, best layers.

use layerprobe::report::{cmd_sweep, RunConfig};
use layerprobe::synth::{gen_planted_dataset, PlantedSpec};

fn main() -> layerprobe::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let spec = PlantedSpec::default();
    gen_planted_dataset(&spec, dir.path().join("data"))?;
    println!(
        "{} systems, {} layers, dim {}, signal at layers {:?}",
        spec.n_systems, spec.n_layers, spec.dim, spec.signal_layers
    );

    let mut cfg = RunConfig::new(dir.path().join("data/manifest.json"), dir.path().join("out"));
    cfg.svg = true;
    let out = cmd_sweep(&cfg)?;

    println!("\nW2 to the reference:");
    print!("{:>8}", "");
    for l in 0..spec.n_layers {
        print!("{:>9}", format!("L{l}"));
    }
    println!();
    for (id, row) in out.distances.system_ids.iter().zip(&out.distances.values) {
        print!("{id:>8}");
        for v in row {
            print!("{v:>9.3}");
        }
        println!();
    }

    for curve in &out.curves {
        let cells: Vec<String> = curve
            .values
            .iter()
            .map(|v| v.map_or("-".into(), |r| format!("{r:.2}")))
            .collect();
        println!("\n{} curve: {}", curve.dimension, cells.join(" "));
    }
    for (dim, best) in &out.best {
        println!("{dim}: {:.3} at layers {}", best.best_value, best.groups_string());
    }
    println!("\nreports written to {}", cfg.out.display());
    Ok(())
}
