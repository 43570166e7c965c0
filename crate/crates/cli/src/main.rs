//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use clifer_cli::config::default_class_order;
use clifer_cli::experiment::order_string;
use clifer_cli::report::{plot_data_csv, summary_json};
use clifer_cli::{
    DataSource, ExperimentConfig, ExperimentKind, HarnessError, ParamsFile, RunOptions, Variant,
};
use clifer_core::dataset::{generate_synthetic, save_csv, SynthConfig};
use clifer_core::label::ClassLabel;
use clifer_core::snapshot::{read_file, write_file, AnySnapshot};

#[derive(Parser)]
#[command(
    name = "clifer",
    version,
    about = "Dual-memory continual learner: synthetic data, experiment grids, reports, snapshots"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Feature dimension.
    #[arg(long, default_value_t = SynthConfig::default().dim)]
    dim: usize,
    /// Number of subjects.
    #[arg(long, default_value_t = SynthConfig::default().subjects)]
    subjects: usize,
    /// Sequences per class and subject.
    #[arg(long, default_value_t = SynthConfig::default().sequences_per_class)]
    sequences_per_class: usize,
    /// Frames per sequence.
    #[arg(long, default_value_t = SynthConfig::default().frames_per_sequence)]
    frames: usize,
    /// Distance between class anchors.
    #[arg(long, default_value_t = SynthConfig::default().class_separation)]
    separation: f64,
    /// Within-class noise level.
    #[arg(long, default_value_t = SynthConfig::default().within_class_sigma)]
    sigma: f64,
    /// Frame-to-frame correlation in [0,1).
    #[arg(long, default_value_t = SynthConfig::default().ar_coefficient)]
    rho: f64,
    /// Per-subject identity shift.
    #[arg(long, default_value_t = SynthConfig::default().subject_offset_sigma)]
    subject_sigma: f64,
    /// Generator seed.
    #[arg(long, default_value_t = SynthConfig::default().seed)]
    synth_seed: u64,
}

impl SynthArgs {
    fn to_config(&self) -> SynthConfig {
        SynthConfig {
            dim: self.dim,
            subjects: self.subjects,
            sequences_per_class: self.sequences_per_class,
            frames_per_sequence: self.frames,
            class_separation: self.separation,
            within_class_sigma: self.sigma,
            ar_coefficient: self.rho,
            subject_offset_sigma: self.subject_sigma,
            seed: self.synth_seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Emit a synthetic feature CSV.
    Synth {
        #[command(flatten)]
        synth: SynthArgs,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment grid and write reports.
    Run {
        /// exp1 | exp2 | orders
        #[arg(long)]
        experiment: String,
        /// Comma-separated subset of gdm,gdm_replay,clifer,baseline.
        #[arg(long, value_delimiter = ',', default_value = "gdm,gdm_replay,clifer,baseline")]
        variants: Vec<String>,
        /// Pre-encoded feature CSV (alternative to --synthetic).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Generate synthetic data instead of reading a CSV.
        #[arg(long)]
        synthetic: bool,
        #[command(flatten)]
        synth: SynthArgs,
        /// Comma-separated run seeds.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        /// Comma-separated class order (6 distinct classes).
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<String>>,
        /// JSON parameter file (partial overrides allowed).
        #[arg(long)]
        params: Option<PathBuf>,
        /// Use the ground-truth oracle generator (synthetic data only).
        #[arg(long)]
        oracle: bool,
        /// Inject an order effect into imagination noise (positive control).
        #[arg(long)]
        order_bias: Option<f64>,
        /// Save the final model envelope of every cell under <out>/models.
        #[arg(long)]
        save_models: bool,
        /// Report directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate an existing records.csv into summary and plot files.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inspect, validate and copy model snapshot envelopes.
    Snapshot {
        #[command(subcommand)]
        cmd: SnapshotCmd,
    },
}

#[derive(Subcommand)]
enum SnapshotCmd {
    /// Load a snapshot, validate its state, confirm bit-exact round-trip.
    Check { file: PathBuf },
    /// Load a snapshot and write its canonical form elsewhere.
    Copy { input: PathBuf, output: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Synth { synth, out } => {
            let config = synth.to_config();
            let datasets = generate_synthetic(&config)?;
            save_csv(&datasets, &out)?;
            let sequences: usize = datasets.iter().map(|d| d.sequences.len()).sum();
            println!(
                "wrote {} subjects / {} sequences to {}",
                datasets.len(),
                sequences,
                out.display()
            );
            Ok(())
        }
        Command::Run {
            experiment,
            variants,
            data,
            synthetic,
            synth,
            seeds,
            order,
            params,
            oracle,
            order_bias,
            save_models,
            out,
        } => {
            let experiment = match experiment.as_str() {
                "exp1" => ExperimentKind::Exp1,
                "exp2" => ExperimentKind::Exp2,
                "orders" => ExperimentKind::Orders,
                other => {
                    return Err(HarnessError::Usage(format!(
                        "unknown experiment `{other}` (expected exp1, exp2 or orders)"
                    )))
                }
            };
            let variants = variants
                .iter()
                .map(|s| Variant::from_str(s))
                .collect::<Result<Vec<_>, _>>()?;
            let data = match (data, synthetic) {
                (Some(path), false) => DataSource::Csv(path),
                (None, true) => DataSource::Synthetic(synth.to_config()),
                (Some(_), true) => {
                    return Err(HarnessError::Usage(
                        "--data and --synthetic are mutually exclusive".into(),
                    ))
                }
                (None, false) => {
                    return Err(HarnessError::Usage(
                        "either --data <csv> or --synthetic is required".into(),
                    ))
                }
            };
            let mut params_file = match params {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        HarnessError::Runtime(format!("cannot read {}: {e}", path.display()))
                    })?;
                    serde_json::from_str::<ParamsFile>(&text).map_err(|e| {
                        HarnessError::Data(clifer_core::Error::Schema(format!(
                            "{}: {e}",
                            path.display()
                        )))
                    })?
                }
                None => ParamsFile::default(),
            };
            if oracle {
                params_file.imagination.generator = clifer_cli::GeneratorKind::Oracle;
            }

            let mut config = ExperimentConfig::new(experiment, variants, data, seeds, params_file, out);
            if let Some(order) = order {
                config.class_order = order
                    .iter()
                    .map(|s| ClassLabel::from_str(s))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| HarnessError::Usage(e.to_string()))?;
            } else {
                config.class_order = default_class_order();
            }
            config.order_effect_bias = order_bias;
            config.validate()?;

            let options = RunOptions {
                keep_final_snapshots: save_models,
            };
            let output = clifer_cli::run_experiment_with(&config, options)?;
            for w in &output.warnings {
                eprintln!("warning: {w}");
            }
            let files = clifer_cli::report::write_reports(&config.out_dir, &config, &output)?;
            if save_models {
                let dir = config.out_dir.join("models");
                std::fs::create_dir_all(&dir)
                    .map_err(|e| HarnessError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
                for cell in &output.cells {
                    if let Some(snapshot) = &cell.final_snapshot {
                        let name = format!(
                            "{}_{}_{}_{}.json",
                            cell.variant, cell.subject_id, order_string(&cell.order), cell.seed
                        );
                        write_file(dir.join(name), snapshot)?;
                    }
                }
            }
            println!(
                "{} records from {} cells in {:.1} s",
                output.records.len(),
                output.cells.len(),
                output.wall_ms / 1e3
            );
            if let Some(kw) = &output.kw {
                println!(
                    "Kruskal-Wallis: H = {:.6}, df = {}, p = {:.6}{}",
                    kw.h,
                    kw.degrees_of_freedom,
                    kw.p_value,
                    if kw.tie_corrected { " (tie-corrected)" } else { "" }
                );
                for (order, mean) in &output.order_means {
                    println!("  order {}: mean semantic F1 {mean:.4}", order_string(order));
                }
            }
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Report { records, out } => {
            let parsed = clifer_cli::report::parse_records_csv(&records)?;
            if parsed.is_empty() {
                return Err(HarnessError::Data(clifer_core::Error::Input(
                    "records.csv contains no rows".into(),
                )));
            }
            std::fs::create_dir_all(&out)
                .map_err(|e| HarnessError::Runtime(format!("cannot create {}: {e}", out.display())))?;
            let summary = out.join("summary.json");
            let plot = out.join("plot_data.csv");
            std::fs::write(&summary, summary_json(&parsed))
                .map_err(|e| HarnessError::Runtime(e.to_string()))?;
            std::fs::write(&plot, plot_data_csv(&parsed))
                .map_err(|e| HarnessError::Runtime(e.to_string()))?;
            println!("wrote {}", summary.display());
            println!("wrote {}", plot.display());
            Ok(())
        }
        Command::Snapshot { cmd } => match cmd {
            SnapshotCmd::Check { file } => {
                let text = read_file(&file)?;
                let snapshot = AnySnapshot::from_json(&text)?;
                let normalized = snapshot.normalize()?;
                println!(
                    "{}: valid {} snapshot, round-trip {}",
                    file.display(),
                    snapshot.kind(),
                    if normalized == text {
                        "bit-exact"
                    } else {
                        "re-canonicalized"
                    }
                );
                Ok(())
            }
            SnapshotCmd::Copy { input, output } => {
                let text = read_file(&input)?;
                let snapshot = AnySnapshot::from_json(&text)?;
                write_file(&output, &snapshot.normalize()?)?;
                println!("wrote {}", output.display());
                Ok(())
            }
        },
    }
}
