//! Thin command-line front end over the `geminal` library.
//!
//! Every subcommand maps onto one library entry point; all real logic
//! lives in the crate so the same operations are scriptable from Rust
//! (see `examples/`). Worker counts default to `$GEMINAL_WORKERS` and the
//! experiment label cache to `$GEMINAL_CACHE_DIR` when the flags are not
//! given. Failures print one line to stderr and exit with 2 (bad
//! configuration), 3 (bad data or I/O), or 4 (solver failure).

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use geminal::dataset::Dataset;
use geminal::geometry;
use geminal::ml::train::{evaluate, finetune_first_layer, train, TrainConfig};
use geminal::ml::{Model, Sample};
use geminal::pipeline::{
    cmd_compose, cmd_label, cmd_plot, load_run_config, run_experiment, ExperimentName,
    ExperimentSpec,
};
use geminal::{Error, Result};

#[derive(Parser)]
#[command(
    name = "geminal",
    version,
    about = "Pair-spectrum descriptors and size-transferable energy regressors for hydrogen clusters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a geometry suite as .xyz files, one per structure.
    Gen {
        /// Suite name: h2, h4, h6, h6-fine, h8, or h10.
        #[arg(long)]
        system: String,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Keep only families whose name contains this substring.
        #[arg(long)]
        family: Option<String>,
        /// Grid-density factor in (0, 1]; h6-fine only.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Label every .xyz geometry in a directory with exact energies.
    Label {
        /// Directory of .xyz files.
        #[arg(long)]
        geoms: PathBuf,
        /// Output dataset (JSON lines).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Recorded in the manifest; labeling itself is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build synthetic large-system records from labeled fragment datasets.
    Compose {
        /// Labeled fragment datasets (repeatable).
        #[arg(long, required = true, num_args = 1..)]
        fragments: Vec<PathBuf>,
        /// Comma-separated size partitions, e.g. "8+2,6+4,6+2+2".
        #[arg(long)]
        partitions: String,
        /// Number of composite records to draw.
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output dataset (JSON lines).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Train a model described by a TOML config on a labeled dataset.
    Train {
        /// Labeled dataset (JSON lines).
        #[arg(long)]
        data: PathBuf,
        /// Model + training config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for model.json, train_curve.csv, metrics.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Continue training a saved model's first layer on a small dataset.
    Finetune {
        /// Saved model (JSON).
        #[arg(long)]
        model: PathBuf,
        /// Labeled dataset (JSON lines); every record is used.
        #[arg(long)]
        data: PathBuf,
        /// Output directory for model.json and finetune_curve.csv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long, default_value_t = 64)]
        batch: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Report a saved model's error on a labeled dataset.
    Eval {
        /// Saved model (JSON).
        #[arg(long)]
        model: PathBuf,
        /// Labeled dataset (JSON lines).
        #[arg(long)]
        data: PathBuf,
        /// Optional per-record residual table (CSV).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named end-to-end experiment and write its report files.
    Experiment {
        /// One of: table1, learning_curve, h6_transfer, h10_pipeline, h8_setmodel.
        #[arg(long)]
        name: String,
        /// Output directory for tables, curves, plots, and models.
        #[arg(long)]
        out: PathBuf,
        /// 1.0 is the full recipe; smaller values shrink it proportionally.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
        /// Labeled-dataset cache directory shared across runs.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Render a CSV table (x column + one series per further column) as SVG.
    Plot {
        /// Input table (CSV with a header row).
        #[arg(long)]
        input: PathBuf,
        /// Output image (SVG).
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("geminal: {e}");
        std::process::exit(e.exit_code());
    }
}

/// Worker count: flag, else $GEMINAL_WORKERS, else the machine's parallelism.
fn resolve_workers(flag: Option<usize>) -> Result<usize> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("GEMINAL_WORKERS") {
            Ok(s) => s
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("GEMINAL_WORKERS={s:?} is not a number")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if n == 0 {
        return Err(Error::Config("worker count must be at least 1".into()));
    }
    Ok(n)
}

/// Cache directory: flag, else $GEMINAL_CACHE_DIR, else no cache.
fn resolve_cache(flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| std::env::var_os("GEMINAL_CACHE_DIR").map(PathBuf::from))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen {
            system,
            out,
            family,
            scale,
        } => {
            let suite = match system.as_str() {
                "h2" => geometry::h2_suite()?,
                "h4" => geometry::h4_suite()?,
                "h6" => geometry::h6_suite()?,
                "h6-fine" => geometry::h6_fine_suite(scale)?,
                "h8" => geometry::h8_suite()?,
                "h10" => geometry::h10_suite()?,
                other => {
                    return Err(Error::Config(format!(
                        "unknown system {other:?} (expected h2, h4, h6, h6-fine, h8, or h10)"
                    )))
                }
            };
            let keep: Vec<_> = suite
                .into_iter()
                .filter(|g| family.as_deref().is_none_or(|f| g.family.contains(f)))
                .collect();
            if keep.is_empty() {
                return Err(Error::Config(format!(
                    "family filter {:?} matched no {system} structures",
                    family.unwrap_or_default()
                )));
            }
            fs::create_dir_all(&out)?;
            for (i, g) in keep.iter().enumerate() {
                fs::write(out.join(format!("{i:05}-{}.xyz", g.family)), g.to_xyz())?;
            }
            println!("wrote {} structures to {}", keep.len(), out.display());
        }
        Command::Label {
            geoms,
            out,
            workers,
            seed,
        } => {
            let workers = resolve_workers(workers)?;
            cmd_label(&geoms, &out, workers, seed)?;
            let ds = Dataset::read(&out)?;
            println!("labeled {} records into {}", ds.records.len(), out.display());
        }
        Command::Compose {
            fragments,
            partitions,
            count,
            seed,
            out,
            workers,
        } => {
            let workers = resolve_workers(workers)?;
            cmd_compose(&fragments, &partitions, count, seed, &out, workers)?;
            println!("wrote {count} composite records to {}", out.display());
        }
        Command::Train { data, config, out } => {
            let run_config = load_run_config(&config)?;
            let ds = Dataset::read(&data)?;
            let samples: Vec<Sample> = ds.records.iter().map(Sample::from).collect();
            let (model, report) = train(&run_config.spec, &samples, &run_config.train)?;
            fs::create_dir_all(&out)?;
            model.save(&out.join("model.json"))?;
            write_curve(&out.join("train_curve.csv"), &report.curve)?;

            let (train_idx, test_idx) = geminal::ml::train::split_indices(
                samples.len(),
                run_config.train.split_fraction,
                run_config.train.seed,
            )?;
            let mut rows = vec!["split,count,mae,rmse".to_string()];
            for (name, idx) in [("train", &train_idx), ("test", &test_idx)] {
                if idx.is_empty() {
                    continue;
                }
                let subset: Vec<Sample> = idx.iter().map(|&i| samples[i].clone()).collect();
                let m = evaluate(&model, &subset)?;
                rows.push(format!("{name},{},{:.10},{:.10}", idx.len(), m.mae, m.rmse));
                println!("{name}: {} samples, mae {:.6}, rmse {:.6}", idx.len(), m.mae, m.rmse);
            }
            fs::write(out.join("metrics.csv"), rows.join("\n") + "\n")?;
            println!("model and curves in {}", out.display());
        }
        Command::Finetune {
            model,
            data,
            out,
            lr,
            epochs,
            batch,
            seed,
        } => {
            let base = Model::load(&model)?;
            let ds = Dataset::read(&data)?;
            let samples: Vec<Sample> = ds.records.iter().map(Sample::from).collect();
            let cfg = TrainConfig {
                learning_rate: lr,
                epochs,
                batch_size: batch,
                seed,
                eval_every: (epochs / 20).max(1),
                ..TrainConfig::default()
            };
            let (tuned, report) = finetune_first_layer(&base, &samples, &cfg)?;
            fs::create_dir_all(&out)?;
            tuned.save(&out.join("model.json"))?;
            write_curve(&out.join("finetune_curve.csv"), &report.curve)?;
            let m = evaluate(&tuned, &samples)?;
            println!(
                "fine-tuned on {} records: mae {:.6}, rmse {:.6}; model in {}",
                samples.len(),
                m.mae,
                m.rmse,
                out.display()
            );
        }
        Command::Eval { model, data, out } => {
            let model = Model::load(&model)?;
            let ds = Dataset::read(&data)?;
            let samples: Vec<Sample> = ds.records.iter().map(Sample::from).collect();
            let m = evaluate(&model, &samples)?;
            if let Some(path) = out {
                let mut rows = vec!["id,target,prediction,residual".to_string()];
                for (record, residual) in ds.records.iter().zip(&m.residuals) {
                    rows.push(format!(
                        "{},{:.10},{:.10},{:.10}",
                        record.id,
                        record.target_total,
                        record.target_total + residual,
                        residual
                    ));
                }
                fs::write(&path, rows.join("\n") + "\n")?;
                println!("residual table in {}", path.display());
            }
            println!("{} records: mae {:.6}, rmse {:.6}", samples.len(), m.mae, m.rmse);
        }
        Command::Experiment {
            name,
            out,
            scale,
            seed,
            workers,
            cache,
        } => {
            let spec = ExperimentSpec {
                name: name.parse::<ExperimentName>()?,
                out_dir: out,
                scale,
                seed,
                workers: resolve_workers(workers)?,
                cache_dir: resolve_cache(cache),
            };
            let report = run_experiment(&spec)?;
            println!("experiment {} wrote:", report.name);
            for path in &report.outputs {
                println!("  {}", path.display());
            }
            for note in &report.notes {
                println!("note: {note}");
            }
        }
        Command::Plot { input, out } => {
            cmd_plot(&input, &out)?;
            println!("plot in {}", out.display());
        }
    }
    Ok(())
}

fn write_curve(path: &std::path::Path, curve: &[geminal::ml::train::EpochStats]) -> Result<()> {
    let mut rows = vec!["epoch,train_mae,test_mae".to_string()];
    for s in curve {
        rows.push(format!("{},{:.10},{:.10}", s.epoch, s.train_mae, s.test_mae));
    }
    fs::write(path, rows.join("\n") + "\n")?;
    Ok(())
}
