//! Command-line entry point. Exit codes: 0 on success, 1 on usage errors,
//! 2 on runtime failures. Log verbosity is controlled by the
//! `SELFTRAIN_LOG` environment variable.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::grid::{Axis, ResultGrid};
use crate::harness::render::{render_series, render_table};
use crate::harness::runner::{load_corpora, run_experiment, LoadedCorpora, RunOptions};
use crate::hash::derive_seed;
use crate::model::ClassifierModel;
use crate::pretrain::{pretrain, PretrainedInit};
use crate::pseudo::{label_pool, select, PseudoLabeledDataset, SelectionRule};
use crate::strategies::{
    run_strategy, train_teacher_with_report, Strategy, StrategyKind, TrainContext,
};

#[derive(Parser)]
#[command(
    name = "selftrain",
    version,
    about = "Semi-supervised text classification: in-domain pretraining, \
             pseudo-labeling, self-training strategies, and experiment grids"
)]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed; every grid cell derives its own seed from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory, overriding the config's output_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Maximum concurrently running grid cells.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pretrain embeddings on the unlabeled pool (general pool first when
    /// one is configured) and save the initializer.
    Pretrain,
    /// Train a teacher on the full labeled training set.
    TrainTeacher {
        /// Pretrained-initializer checkpoint to start from.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Label the pool with a teacher and write D' as JSONL.
    PseudoLabel {
        /// Teacher checkpoint.
        #[arg(long)]
        teacher: PathBuf,
        /// Per-class selection size; 0 labels the whole pool. Defaults to
        /// the config's first k value.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Train a student from a teacher and a D' file under one strategy.
    TrainStudent {
        /// Teacher checkpoint.
        #[arg(long)]
        teacher: PathBuf,
        /// Pseudo-labeled dataset (JSONL) written by pseudo-label.
        #[arg(long)]
        d_prime: PathBuf,
        /// Strategy name; defaults to the config's first strategy.
        #[arg(long)]
        strategy: Option<String>,
        /// Pretrained-initializer checkpoint for the student.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Run the configured experiment grid and render its outputs.
    Experiment,
    /// Print a checkpoint's accuracy on one split.
    Evaluate {
        /// Model checkpoint.
        #[arg(long)]
        model: PathBuf,
        /// One of train, dev, test.
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Re-render table and series files from an existing grid.
    Render {
        /// Grid file; defaults to <output_dir>/grid.jsonl.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Axes to render series for (d_size, k, u_size, iteration);
        /// defaults to every axis with at least two values.
        #[arg(long)]
        axis: Vec<String>,
    },
}

/// Parses `argv` and executes; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter("SELFTRAIN_LOG"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // clap renders its own message (also for --help / --version)
            let _ = err.print();
            return if err.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            1
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("error: {err}");
            2
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        CliError::Runtime(err)
    }
}

fn require_config(cli: &Cli) -> std::result::Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config <path> is required".into()))?;
    Ok(ExperimentConfig::load(path)?)
}

fn out_dir(cli: &Cli, cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn execute(cli: Cli) -> std::result::Result<(), CliError> {
    match &cli.command {
        Command::Pretrain => {
            let cfg = require_config(&cli)?;
            let out = out_dir(&cli, &cfg)?;
            let corpora = load_corpora(&cfg)?;
            let (init, report) = pretrain_chain(&cfg, &corpora, cli.seed)?;
            let path = out.join("pretrained.bin");
            init.save(&path)?;
            std::fs::write(
                out.join("pretrain_report.json"),
                serde_json::to_string_pretty(&report).map_err(Error::from)?,
            )
            .map_err(Error::from)?;
            println!(
                "pretrained on {} corpora, final loss {:.4} -> {}",
                init.provenance().len(),
                init.final_loss(),
                path.display()
            );
            Ok(())
        }
        Command::TrainTeacher { init } => {
            let cfg = require_config(&cli)?;
            let out = out_dir(&cli, &cfg)?;
            let corpora = load_corpora(&cfg)?;
            let loaded_init = match init {
                Some(path) => Some(PretrainedInit::load(path, &corpora.vocab)?),
                None if cfg.pretrain.enabled => Some(pretrain_chain(&cfg, &corpora, cli.seed)?.0),
                None => None,
            };
            let ctx = TrainContext {
                vocab: &corpora.vocab,
                model: cfg.model.model_config(),
            };
            let train_cfg = cfg.train.train_config(cli.seed);
            let (teacher, report) = train_teacher_with_report(
                &ctx,
                &corpora.train,
                &corpora.dev,
                &train_cfg,
                loaded_init.as_ref(),
            )?;
            let path = out.join("teacher.bin");
            teacher.save(&path)?;
            std::fs::write(
                out.join("teacher_report.json"),
                serde_json::to_string_pretty(&report).map_err(Error::from)?,
            )
            .map_err(Error::from)?;
            println!(
                "teacher dev accuracy {:.4}, test accuracy {:.4} -> {}",
                teacher.evaluate(&corpora.dev)?,
                teacher.evaluate(&corpora.test)?,
                path.display()
            );
            Ok(())
        }
        Command::PseudoLabel { teacher, k } => {
            let cfg = require_config(&cli)?;
            let out = out_dir(&cli, &cfg)?;
            let corpora = load_corpora(&cfg)?;
            let teacher = ClassifierModel::load(teacher, &corpora.vocab)?;
            let k = k.unwrap_or(cfg.k_values[0]);
            let rule = if k == 0 {
                SelectionRule::Naive
            } else {
                SelectionRule::TopK(k)
            };
            let scored = label_pool(&teacher, &corpora.pool)?;
            let d_prime = select(&scored, &corpora.pool, rule);
            let path = out.join("d_prime.jsonl");
            d_prime.save_jsonl(&path)?;
            println!(
                "selected {} of {} pool examples ({}) -> {}",
                d_prime.len(),
                corpora.pool.len(),
                rule.describe(),
                path.display()
            );
            Ok(())
        }
        Command::TrainStudent {
            teacher,
            d_prime,
            strategy,
            init,
        } => {
            let cfg = require_config(&cli)?;
            let out = out_dir(&cli, &cfg)?;
            let corpora = load_corpora(&cfg)?;
            let teacher = ClassifierModel::load(teacher, &corpora.vocab)?;
            let mut d_prime =
                PseudoLabeledDataset::load_jsonl(d_prime, cfg.labels.len())?;
            d_prime.vectorize(&corpora.vocab, cfg.model.max_len)?;
            let name = strategy
                .clone()
                .unwrap_or_else(|| cfg.strategies[0].clone());
            let kind = StrategyKind::parse(&name).ok_or_else(|| {
                CliError::Usage(format!("unknown strategy {name:?} for --strategy"))
            })?;
            let loaded_init = init
                .as_ref()
                .map(|p| PretrainedInit::load(p, &corpora.vocab))
                .transpose()?;
            let ctx = TrainContext {
                vocab: &corpora.vocab,
                model: cfg.model.model_config(),
            };
            let student = run_strategy(
                &ctx,
                &Strategy {
                    kind,
                    student_init: cfg.student_init,
                    finetune_cfg: None,
                },
                &teacher,
                &corpora.train,
                &corpora.dev,
                &d_prime,
                &cfg.train.train_config(cli.seed),
                loaded_init.as_ref(),
            )?;
            let path = out.join("student.bin");
            student.save(&path)?;
            println!(
                "{} student dev accuracy {:.4}, test accuracy {:.4} -> {}",
                kind.label(),
                student.evaluate(&corpora.dev)?,
                student.evaluate(&corpora.test)?,
                path.display()
            );
            Ok(())
        }
        Command::Experiment => {
            let cfg = require_config(&cli)?;
            let out = out_dir(&cli, &cfg)?;
            let opts = RunOptions {
                base_seed: cli.seed,
                jobs: cli.jobs,
                output_dir: Some(out.clone()),
            };
            let grid = run_experiment(&cfg, &opts)?;
            let failed = grid.len() - grid.ok_records().count();
            if failed > 0 {
                log::warn!("{failed} of {} cells failed; see grid.jsonl", grid.len());
            }
            render_outputs(&grid, &out, &[])?;
            println!(
                "{} cells ({} failed) -> {}",
                grid.len(),
                failed,
                out.join("grid.jsonl").display()
            );
            Ok(())
        }
        Command::Evaluate { model, split } => {
            let cfg = require_config(&cli)?;
            let corpora = load_corpora(&cfg)?;
            let dataset = match split.as_str() {
                "train" => &corpora.train,
                "dev" => &corpora.dev,
                "test" => &corpora.test,
                other => {
                    return Err(CliError::Usage(format!(
                        "--split must be train, dev or test, got {other:?}"
                    )))
                }
            };
            let model = ClassifierModel::load(model, &corpora.vocab)?;
            println!("{split} accuracy: {:.4}", model.evaluate(dataset)?);
            Ok(())
        }
        Command::Render { grid, axis } => {
            let cfg = require_config(&cli)?;
            let out = out_dir(&cli, &cfg)?;
            let grid_path = grid.clone().unwrap_or_else(|| out.join("grid.jsonl"));
            let grid = ResultGrid::load(&grid_path)?;
            if grid.is_empty() {
                return Err(CliError::Runtime(Error::ConfigInvalid {
                    field: "--grid".into(),
                    reason: format!("no records in {}", grid_path.display()),
                }));
            }
            let axes: Vec<Axis> = axis
                .iter()
                .map(|name| {
                    Axis::parse(name).ok_or_else(|| {
                        CliError::Usage(format!(
                            "unknown axis {name:?}; expected d_size, k, u_size or iteration"
                        ))
                    })
                })
                .collect::<std::result::Result<_, _>>()?;
            let (text, _) = render_table(&grid)?;
            render_outputs(&grid, &out, &axes)?;
            print!("{text}");
            Ok(())
        }
    }
}

/// Writes table.txt, table.csv and series_<axis>.csv files. With no axes
/// given, renders every axis that has at least two distinct values.
fn render_outputs(grid: &ResultGrid, out: &Path, axes: &[Axis]) -> Result<()> {
    if grid.ok_records().next().is_none() {
        log::warn!("no successful cells; skipping table rendering");
        return Ok(());
    }
    let (text, csv) = render_table(grid)?;
    std::fs::write(out.join("table.txt"), &text)?;
    std::fs::write(out.join("table.csv"), &csv)?;
    let all = [Axis::DSize, Axis::K, Axis::USize, Axis::Iteration];
    let chosen: &[Axis] = if axes.is_empty() { &all } else { axes };
    for &axis in chosen {
        match render_series(grid, axis) {
            Ok(series) => {
                std::fs::write(out.join(format!("series_{}.csv", axis.name())), series)?;
            }
            Err(Error::AxisDegenerate { .. }) if axes.is_empty() => {}
            Err(err) => return Err(err),
        }
    }
    Ok(())
}

fn pretrain_chain(
    cfg: &ExperimentConfig,
    corpora: &LoadedCorpora,
    base_seed: u64,
) -> Result<(PretrainedInit, crate::pretrain::PretrainReport)> {
    let staged = match &corpora.general_pool {
        Some(general) => {
            let pcfg = cfg
                .pretrain
                .pretrain_config(cfg.model.embedding_dim, derive_seed(base_seed, "pretrain-general"));
            Some(pretrain(general, &corpora.vocab, &pcfg, None)?.0)
        }
        None => None,
    };
    let pcfg = cfg
        .pretrain
        .pretrain_config(cfg.model.embedding_dim, derive_seed(base_seed, "pretrain"));
    pretrain(&corpora.pool, &corpora.vocab, &pcfg, staged.as_ref())
}
