//! Config-driven experiment runner: enumerates grid cells, executes them
//! (optionally across threads), appends each finished cell to the grid
//! file, and resumes interrupted runs by skipping completed cells.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    self, file_content_hash, load_labeled_jsonl, load_unlabeled_jsonl, sample_labeled_subset,
    LabelMap, LabeledDataset, UnlabeledPool, Vocab,
};
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::grid::{failed_record, record_for, CellKey, CellRecord, GridWriter, ResultGrid};
use crate::hash::{derive_seed, hash_hex};
use crate::pretrain::{pretrain, PretrainedInit};
use crate::pseudo::SelectionRule;
use crate::strategies::{iterative_self_train, Strategy, StrategyKind, TrainContext};

/// Runtime knobs that come from the command line rather than the config.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Base seed; every cell derives its own seed as
    /// `base_seed XOR cell_hash`.
    pub base_seed: u64,
    /// Maximum concurrently running cells.
    pub jobs: usize,
    /// Overrides the config's output directory.
    pub output_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            base_seed: 0,
            jobs: 1,
            output_dir: None,
        }
    }
}

/// All corpora loaded, vocabulary built, documents vectorized.
pub struct LoadedCorpora {
    pub vocab: Vocab,
    pub train: LabeledDataset,
    pub dev: LabeledDataset,
    pub test: LabeledDataset,
    pub pool: UnlabeledPool,
    pub general_pool: Option<UnlabeledPool>,
}

/// Loads every dataset named in the config and vectorizes it against a
/// vocabulary built from the training set and the unlabeled pools.
pub fn load_corpora(cfg: &ExperimentConfig) -> Result<LoadedCorpora> {
    let label_map = LabelMap::new(cfg.labels.clone());
    let mut train = load_labeled_jsonl(&cfg.train_path, &label_map)?;
    let mut dev = load_labeled_jsonl(&cfg.dev_path, &label_map)?;
    let mut test = load_labeled_jsonl(&cfg.test_path, &label_map)?;
    let mut pool = load_unlabeled_jsonl(&cfg.pool_path)?;
    let mut general_pool = cfg
        .general_pool_path
        .as_ref()
        .map(|p| load_unlabeled_jsonl(p))
        .transpose()?;

    let train_tokens = train
        .examples()
        .iter()
        .map(|(ex, _)| corpus::tokenize(&ex.text));
    let pool_tokens = pool.examples().iter().map(|ex| corpus::tokenize(&ex.text));
    let general_tokens = general_pool
        .iter()
        .flat_map(|p| p.examples().iter().map(|ex| corpus::tokenize(&ex.text)));
    let vocab = corpus::build_vocab(
        train_tokens.chain(pool_tokens).chain(general_tokens),
        cfg.model.vocab_max_size,
        cfg.model.vocab_min_freq,
    );

    let max_len = cfg.model.max_len;
    corpus::vectorize(&mut train, &vocab, max_len)?;
    corpus::vectorize(&mut dev, &vocab, max_len)?;
    corpus::vectorize(&mut test, &vocab, max_len)?;
    corpus::vectorize_pool(&mut pool, &vocab, max_len)?;
    if let Some(pool) = general_pool.as_mut() {
        corpus::vectorize_pool(pool, &vocab, max_len)?;
    }

    let max_d = *cfg.d_sizes.iter().max().expect("validated non-empty");
    if max_d > train.len() {
        return Err(Error::ConfigInvalid {
            field: "d_sizes".into(),
            reason: format!(
                "largest d_size {max_d} exceeds the {} training examples",
                train.len()
            ),
        });
    }

    Ok(LoadedCorpora {
        vocab,
        train,
        dev,
        test,
        pool,
        general_pool,
    })
}

/// Run manifest written next to the grid: enough to tell whether outputs
/// belong to the config and corpora at hand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_hash: String,
    pub settings_fingerprint: String,
    pub base_seed: u64,
    pub corpus_hashes: CorpusHashes,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusHashes {
    pub train: String,
    pub dev: String,
    pub test: String,
    pub pool: String,
    pub general_pool: Option<String>,
}

fn write_manifest(cfg: &ExperimentConfig, opts: &RunOptions, out_dir: &Path) -> Result<()> {
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: hash_hex(cfg.config_hash()),
        settings_fingerprint: hash_hex(cfg.settings_fingerprint()),
        base_seed: opts.base_seed,
        corpus_hashes: CorpusHashes {
            train: hash_hex(file_content_hash(&cfg.train_path)?),
            dev: hash_hex(file_content_hash(&cfg.dev_path)?),
            test: hash_hex(file_content_hash(&cfg.test_path)?),
            pool: hash_hex(file_content_hash(&cfg.pool_path)?),
            general_pool: cfg
                .general_pool_path
                .as_ref()
                .map(|p| file_content_hash(p).map(hash_hex))
                .transpose()?,
        },
    };
    std::fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

/// Every cell in the configured grid, in canonical order.
pub fn enumerate_cells(cfg: &ExperimentConfig) -> Vec<CellKey> {
    let mut cells = Vec::new();
    for kind in cfg.strategy_kinds() {
        for &d_size in &cfg.d_sizes {
            for &k in &cfg.k_values {
                for &u_size in &cfg.u_sizes {
                    for &seed in &cfg.seeds {
                        cells.push(CellKey {
                            strategy: kind.config_name().to_string(),
                            d_size,
                            k,
                            u_size,
                            seed,
                        });
                    }
                }
            }
        }
    }
    cells
}

fn run_cell(
    cfg: &ExperimentConfig,
    corpora: &LoadedCorpora,
    key: &CellKey,
    cell_seed: u64,
) -> Result<(Option<usize>, f64, f64, Vec<f64>)> {
    let kind = StrategyKind::parse(&key.strategy).expect("validated");
    let d = sample_labeled_subset(
        &corpora.train,
        key.d_size,
        derive_seed(cell_seed, "subsample-d"),
    )?;
    let u = corpora
        .pool
        .sample(key.u_size, derive_seed(cell_seed, "subsample-u"));

    let init: Option<PretrainedInit> = if cfg.pretrain.enabled {
        let staged = match &corpora.general_pool {
            Some(general) => {
                let pcfg = cfg.pretrain.pretrain_config(
                    cfg.model.embedding_dim,
                    derive_seed(cell_seed, "pretrain-general"),
                );
                Some(pretrain(general, &corpora.vocab, &pcfg, None)?.0)
            }
            None => None,
        };
        let pcfg = cfg
            .pretrain
            .pretrain_config(cfg.model.embedding_dim, derive_seed(cell_seed, "pretrain"));
        Some(pretrain(&u, &corpora.vocab, &pcfg, staged.as_ref())?.0)
    } else {
        None
    };

    let selection = if key.k == 0 {
        SelectionRule::Naive
    } else {
        SelectionRule::TopK(key.k)
    };
    let strategy = Strategy {
        kind,
        student_init: cfg.student_init,
        finetune_cfg: None,
    };
    let ctx = TrainContext {
        vocab: &corpora.vocab,
        model: cfg.model.model_config(),
    };
    let train_cfg = cfg.train.train_config(cell_seed);
    let result = iterative_self_train(
        &ctx,
        &d,
        &corpora.dev,
        &u,
        selection,
        &strategy,
        cfg.iterations,
        &train_cfg,
        init.as_ref(),
    )?;

    let teacher_acc = result.teacher.evaluate(&corpora.test)?;
    let iteration_accs: Vec<f64> = result
        .iteration_students
        .iter()
        .map(|m| m.evaluate(&corpora.test))
        .collect::<Result<_>>()?;
    let student_acc = *iteration_accs.last().expect("at least one iteration");
    let d_prime_size = result.provenance.d_prime.first().map(|r| r.size);
    Ok((d_prime_size, teacher_acc, student_acc, iteration_accs))
}

/// Runs (or resumes) the configured grid and returns the final grid.
/// Cells are independent; completed cells are skipped by hash, each
/// finished cell is appended to `grid.jsonl` immediately, and the file is
/// rewritten in canonical order once the run completes.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ResultGrid> {
    cfg.validate()?;
    let out_dir = opts.output_dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
    std::fs::create_dir_all(&out_dir)?;
    write_manifest(cfg, opts, &out_dir)?;

    let corpora = load_corpora(cfg)?;
    let fingerprint = cfg.settings_fingerprint();
    let grid_path = out_dir.join("grid.jsonl");
    let existing = ResultGrid::load(&grid_path)?;
    let completed = existing.completed_hashes();

    let pending: Vec<CellKey> = enumerate_cells(cfg)
        .into_iter()
        .filter(|key| !completed.contains(&hash_hex(key.cell_hash(fingerprint))))
        .collect();
    log::info!(
        "grid has {} cells: {} already complete, {} to run",
        existing.len() + pending.len(),
        existing.len(),
        pending.len()
    );

    let writer = GridWriter::append_to(&grid_path)?;
    let execute = |key: &CellKey| -> Result<CellRecord> {
        let cell_seed = opts.base_seed ^ key.cell_hash(fingerprint);
        let record = match run_cell(cfg, &corpora, key, cell_seed) {
            Ok((d_prime_size, teacher_acc, student_acc, iteration_accs)) => record_for(
                key.clone(),
                fingerprint,
                d_prime_size,
                teacher_acc,
                student_acc,
                iteration_accs,
            ),
            Err(err) => {
                log::warn!("cell {key:?} failed: {err}");
                failed_record(key.clone(), fingerprint, err.to_string())
            }
        };
        writer.append(&record)?;
        Ok(record)
    };

    let mut new_records: Vec<CellRecord> = if opts.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::ConfigInvalid {
                field: "--jobs".into(),
                reason: e.to_string(),
            })?;
        pool.install(|| pending.par_iter().map(execute).collect::<Result<Vec<_>>>())?
    } else {
        pending.iter().map(execute).collect::<Result<Vec<_>>>()?
    };

    let mut records = existing.records().to_vec();
    records.append(&mut new_records);
    let grid = ResultGrid::new(records);
    grid.write_canonical(&grid_path)?;
    Ok(grid)
}
