use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use layerprobe::rank::CorrelationMethod;
use layerprobe::report::{
    cmd_refstudy, cmd_stats, cmd_sweep, cmd_synth, parse_labeled_path, ConfigLayer, RunConfig,
};
use layerprobe::sweep::PoolingMode;
use layerprobe::synth::PlantedSpec;
use layerprobe::Error;

/// Layer-wise W2 distance / listener-rating correlation analysis.
#[derive(Parser)]
#[command(name = "layerprobe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or reuse) per-layer Gaussian summaries for every system and the reference.
    Stats(RunArgs),
    /// Distances, per-layer correlation curves and best layers.
    Sweep(RunArgs),
    /// Correlation curves against alternative reference sets.
    Refstudy {
        #[command(flatten)]
        run: RunArgs,
        /// Alternative reference as LABEL=MANIFEST (repeatable).
        #[arg(long = "reference", value_name = "LABEL=PATH")]
        references: Vec<String>,
        /// Label of the manifest's own reference.
        #[arg(long, default_value = "primary")]
        primary_label: String,
    },
    /// Generate a planted synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// frames | utterance-mean
    #[arg(long)]
    pooling: Option<PoolingMode>,
    /// spearman | pearson
    #[arg(long)]
    method: Option<CorrelationMethod>,
    /// Rating dimension to analyze (repeatable; default: all).
    #[arg(long = "dimension")]
    dimensions: Vec<String>,
    #[arg(long)]
    exclude_natural: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Summary cache directory (default: <out>/cache).
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Also write SVG line charts.
    #[arg(long)]
    svg: bool,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig, Error> {
        let file = match &self.config {
            Some(p) => ConfigLayer::from_file(p)?,
            None => ConfigLayer::default(),
        };
        let flags = ConfigLayer {
            manifest: self.manifest,
            pooling: self.pooling,
            method: self.method,
            dimensions: (!self.dimensions.is_empty()).then_some(self.dimensions),
            exclude_natural: self.exclude_natural.then_some(true),
            out: self.out,
            threads: self.threads,
            cache: self.cache,
            svg: self.svg.then_some(true),
        };
        RunConfig::resolve(flags.over(file))
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = PlantedSpec::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = PlantedSpec::default().n_systems)]
    systems: usize,
    #[arg(long, default_value_t = PlantedSpec::default().n_layers)]
    layers: usize,
    #[arg(long, default_value_t = PlantedSpec::default().dim)]
    dim: usize,
    #[arg(long, default_value_t = PlantedSpec::default().frames_per_utterance)]
    frames: usize,
    #[arg(long, default_value_t = PlantedSpec::default().utterances_per_system)]
    utterances: usize,
    #[arg(long, default_value_t = PlantedSpec::default().reference_utterances)]
    reference_utterances: usize,
    /// Comma-separated planted layers.
    #[arg(long, value_delimiter = ',', default_values_t = PlantedSpec::default().signal_layers)]
    signal_layers: Vec<usize>,
    #[arg(long, default_value_t = PlantedSpec::default().shift_step)]
    shift: f64,
    /// Write only a reference set, offset along the first coordinate.
    #[arg(long)]
    reference_offset: Option<f64>,
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Stats(args) => {
            let out = cmd_stats(&args.resolve()?)?;
            if out.cache_hit {
                log::info!("summaries already cached, nothing recomputed");
            }
            println!("{}", out.dir.display());
        }
        Command::Sweep(args) => {
            let cfg = args.resolve()?;
            let out = cmd_sweep(&cfg)?;
            for (dim, r) in &out.best {
                println!("{dim}: {:.6} at layers {}", r.best_value, r.groups_string());
            }
        }
        Command::Refstudy {
            run,
            references,
            primary_label,
        } => {
            let cfg = run.resolve()?;
            let alternatives = references
                .iter()
                .map(|r| parse_labeled_path(r))
                .collect::<Result<Vec<_>, _>>()?;
            cmd_refstudy(&cfg, &primary_label, &alternatives)?;
            println!("{}", cfg.out.join(layerprobe::report::REFSTUDY_CSV).display());
        }
        Command::Synth(a) => {
            let spec = PlantedSpec {
                seed: a.seed,
                n_systems: a.systems,
                n_layers: a.layers,
                dim: a.dim,
                frames_per_utterance: a.frames,
                utterances_per_system: a.utterances,
                reference_utterances: a.reference_utterances,
                signal_layers: a.signal_layers,
                shift_step: a.shift,
            };
            println!("{}", cmd_synth(&spec, &a.out, a.reference_offset)?.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Info)
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
