use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mpseg_core::eval::{parse_epsilon_grid, write_sweep_csv};
use mpseg_core::io::{
    load_manifest, write_columns, write_manifest, write_profile_csv, write_series_csv,
    ManifestEntry,
};
use mpseg_core::pipeline::default_workers;
use mpseg_core::profile::compute_profile;
use mpseg_core::{
    generate_clean, generate_synthetic, load_csv, run_detection_experiment, run_epsilon_sweep,
    run_pipeline, run_threshold_ablation, trim_burn_in, CadDenominator, ColumnSelector, Dataset,
    Engine, GroundTruth, PipelineConfig, Regime, SyntheticSpec, Waveform, WindowConfig,
};

/// Anomaly-onset detection for cyclic sensor series via matrix-profile
/// arc density.
#[derive(Debug, Parser)]
#[command(name = "mpseg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze one series and emit a JSON detection report.
    Detect(DetectArgs),
    /// Emit the matrix profile as `distance,index` CSV.
    Profile(ProfileArgs),
    /// Score every dataset in a manifest.
    Experiment(BatchArgs),
    /// False-positive rate on clean series with and without the threshold.
    Ablation(BatchArgs),
    /// F1 and FPR across a grid of thresholds.
    Sweep(SweepArgs),
    /// Write seeded two-regime series, clean counterparts and a manifest.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// Column name or 0-based index.
    #[arg(long, default_value = "0")]
    column: ColumnSelector,
    /// Subsequence length.
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 0.35)]
    epsilon: f64,
    /// Samples dropped from each end before analysis.
    #[arg(long, default_value_t = 30)]
    burn_in: usize,
    /// Query rows per dot-product batch.
    #[arg(long, default_value_t = 256)]
    batch_rows: usize,
    /// Worker threads (defaults to available parallelism).
    #[arg(long, env = "MPSEG_WORKERS")]
    workers: Option<usize>,
    #[arg(long, default_value = "corrected", value_parser = ["corrected", "raw"])]
    cad_denominator: String,
    #[arg(long, default_value = "conv", value_parser = ["brute", "stomp", "conv"])]
    engine: String,
}

impl PipelineArgs {
    fn config(&self, output_path: Option<PathBuf>) -> Result<PipelineConfig> {
        let cfg = PipelineConfig {
            m: self.m,
            epsilon: self.epsilon,
            burn_in: self.burn_in,
            column: self.column.clone(),
            batch_rows: self.batch_rows,
            workers: self.workers.unwrap_or_else(default_workers),
            cad_denominator: self.cad_denominator.parse::<CadDenominator>()?,
            engine: self.engine.parse::<Engine>()?,
            output_path,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Report destination (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the corrected arc density, one row per subsequence.
    #[arg(long)]
    cad_out: Option<PathBuf>,
    /// Also write the per-subsequence 0/1 labels.
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "0")]
    column: ColumnSelector,
    #[arg(long, default_value_t = 100)]
    m: usize,
    /// Samples dropped from each end; indices refer to the trimmed series.
    #[arg(long, default_value_t = 0)]
    burn_in: usize,
    #[arg(long, default_value = "conv", value_parser = ["brute", "stomp", "conv"])]
    engine: String,
    #[arg(long, default_value_t = 256)]
    batch_rows: usize,
    #[arg(long, env = "MPSEG_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BatchArgs {
    /// CSV with columns `name,path,anomaly_start`.
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Write the table as CSV here; a text table always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Series containing an anomaly.
    #[arg(long)]
    input: PathBuf,
    /// Raw-file index where the anomaly starts.
    #[arg(long)]
    truth_start: usize,
    /// Anomaly-free counterpart used for the false-positive rate.
    #[arg(long)]
    clean_input: PathBuf,
    /// `start:stop:step` or a comma-separated list.
    #[arg(long, default_value = "0.1:0.8:0.1")]
    eps_grid: String,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    /// Number of anomalous/clean pairs.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Pair k uses seed + k.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1800)]
    length: usize,
    /// Fraction of the series before the regime change.
    #[arg(long, default_value_t = 0.6)]
    boundary: f64,
    #[arg(long, default_value_t = 32.0)]
    period_a: f64,
    #[arg(long, default_value_t = 48.0)]
    period_b: f64,
    #[arg(long, default_value = "sine")]
    waveform_a: String,
    #[arg(long, default_value = "sine")]
    waveform_b: String,
    #[arg(long, default_value_t = 1.0)]
    amplitude_a: f64,
    #[arg(long, default_value_t = 1.0)]
    amplitude_b: f64,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn detect(args: DetectArgs) -> Result<ExitCode> {
    let cfg = args.pipeline.config(args.out.clone())?;
    let series = load_csv(&args.input, &cfg.column)?;
    let out = run_pipeline(&series, &cfg)?;

    if let Some(path) = &args.cad_out {
        write_columns(File::create(path)?, &["cad"], &[&out.density.corrected])?;
    }
    if let Some(path) = &args.labels_out {
        let labels: Vec<f64> = out.report.labels.iter().map(|&y| f64::from(y)).collect();
        write_columns(File::create(path)?, &["label"], &[&labels])?;
    }
    let labels_path = args.labels_out.as_ref().map(|p| p.display().to_string());
    let doc = out.document(&cfg, labels_path);
    let mut w = output(cfg.output_path.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    Ok(ExitCode::SUCCESS)
}

fn profile(args: ProfileArgs) -> Result<ExitCode> {
    let window = WindowConfig::new(args.m)?;
    let engine: Engine = args.engine.parse()?;
    let opts = mpseg_core::ConvOptions::new(
        args.batch_rows,
        args.workers.unwrap_or_else(default_workers),
    )?;
    let series = load_csv(&args.input, &args.column)?;
    let series = trim_burn_in(&series, args.burn_in, args.m)?;
    let mp = compute_profile(&series, &window, engine, opts)?;
    write_profile_csv(output(args.out.as_deref())?, &mp)?;
    Ok(ExitCode::SUCCESS)
}

/// Datasets that loaded, plus `(name, error)` for those that did not.
type Loaded = (Vec<Dataset>, Vec<(String, String)>);

/// Loads every manifest entry. Entries that fail to load are returned as
/// error rows so the batch can continue.
fn load_datasets(
    manifest: &Path,
    column: &ColumnSelector,
    keep: impl Fn(&ManifestEntry) -> bool,
) -> Result<Loaded> {
    let entries = load_manifest(manifest)?;
    let mut datasets = Vec::new();
    let mut failures = Vec::new();
    for entry in entries.into_iter().filter(|e| keep(e)) {
        let loaded = load_csv(&entry.path, column).and_then(|series| {
            let truth = match entry.anomaly_start {
                Some(s) => GroundTruth::anomalous(s, series.len())?,
                None => GroundTruth::clean(),
            };
            Ok(Dataset {
                name: entry.name.clone(),
                series,
                truth,
            })
        });
        match loaded {
            Ok(ds) => datasets.push(ds),
            Err(e) => failures.push((entry.name, e.to_string())),
        }
    }
    Ok((datasets, failures))
}

fn report_failures(failures: &[(String, String)]) {
    for (name, err) in failures {
        eprintln!("{name}: {err}");
    }
}

fn experiment(args: BatchArgs) -> Result<ExitCode> {
    let cfg = args.pipeline.config(args.out.clone())?;
    let (datasets, load_failures) = load_datasets(&args.manifest, &cfg.column, |_| true)?;
    let table = run_detection_experiment(&datasets, &cfg)?;
    print!("{table}");
    if let Some(path) = &args.out {
        table.write_csv(File::create(path)?)?;
    }
    report_failures(&load_failures);
    for row in &table.rows {
        if let Err(e) = &row.outcome {
            eprintln!("{}: {e}", row.name);
        }
    }
    Ok(batch_exit(load_failures.len() + table.failures()))
}

fn ablation(args: BatchArgs) -> Result<ExitCode> {
    let cfg = args.pipeline.config(args.out.clone())?;
    let (clean, load_failures) =
        load_datasets(&args.manifest, &cfg.column, |e| e.anomaly_start.is_none())?;
    let table = run_threshold_ablation(&clean, &cfg)?;
    print!("{table}");
    if let Some(path) = &args.out {
        table.write_csv(File::create(path)?)?;
    }
    report_failures(&load_failures);
    for row in &table.rows {
        if let Err(e) = &row.outcome {
            eprintln!("{}: {e}", row.name);
        }
    }
    Ok(batch_exit(load_failures.len() + table.failures()))
}

fn batch_exit(failures: usize) -> ExitCode {
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let cfg = args.pipeline.config(args.out.clone())?;
    let grid = parse_epsilon_grid(&args.eps_grid)?;
    let series = load_csv(&args.input, &cfg.column)?;
    let truth = GroundTruth::anomalous(args.truth_start, series.len())?;
    let anomalous = Dataset {
        name: "anomalous".into(),
        series,
        truth,
    };
    let clean = Dataset {
        name: "clean".into(),
        series: load_csv(&args.clean_input, &cfg.column)?,
        truth: GroundTruth::clean(),
    };
    let points = run_epsilon_sweep(&anomalous, &clean, &cfg, &grid)?;
    write_sweep_csv(output(args.out.as_deref())?, &points)?;
    Ok(ExitCode::SUCCESS)
}

fn synth(args: SynthArgs) -> Result<ExitCode> {
    if args.count == 0 {
        bail!(mpseg_core::Error::Config("count must be at least 1".into()));
    }
    let base = SyntheticSpec {
        total_length: args.length,
        boundary_fraction: args.boundary,
        regime_a: Regime {
            period: args.period_a,
            waveform: args.waveform_a.parse::<Waveform>()?,
            amplitude: args.amplitude_a,
        },
        regime_b: Regime {
            period: args.period_b,
            waveform: args.waveform_b.parse::<Waveform>()?,
            amplitude: args.amplitude_b,
        },
        noise_std: args.noise,
        seed: args.seed,
    };
    base.validate()?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let mut entries = Vec::with_capacity(2 * args.count);
    for k in 0..args.count {
        let spec = SyntheticSpec {
            seed: args.seed + k as u64,
            ..base.clone()
        };
        let (series, truth) = generate_synthetic(&spec)?;
        let (clean, _) = generate_clean(&spec)?;
        let a_name = format!("anomalous_{k:03}");
        let c_name = format!("clean_{k:03}");
        write_series_csv(
            args.out_dir.join(format!("{a_name}.csv")),
            "value",
            series.values(),
        )?;
        write_series_csv(
            args.out_dir.join(format!("{c_name}.csv")),
            "value",
            clean.values(),
        )?;
        entries.push(ManifestEntry {
            path: format!("{a_name}.csv").into(),
            name: a_name,
            anomaly_start: truth.anomaly_start,
        });
        entries.push(ManifestEntry {
            path: format!("{c_name}.csv").into(),
            name: c_name,
            anomaly_start: None,
        });
    }
    let manifest = args.out_dir.join("manifest.csv");
    write_manifest(&manifest, &entries)?;
    println!("wrote {} series and {}", entries.len(), manifest.display());
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Detect(a) => detect(a),
        Command::Profile(a) => profile(a),
        Command::Experiment(a) => experiment(a),
        Command::Ablation(a) => ablation(a),
        Command::Sweep(a) => sweep(a),
        Command::Synth(a) => synth(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let config = err
                .downcast_ref::<mpseg_core::Error>()
                .is_some_and(mpseg_core::Error::is_config);
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}
