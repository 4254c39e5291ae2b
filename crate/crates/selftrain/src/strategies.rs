//! Student-training combinators, iterative self-training, and the combined
//! in-domain-pretraining + pseudo-label pipeline.
//!
//! The strategy names follow the usual train/finetune notation: T(X) trains
//! on X, F(X) fine-tunes the current model on X.

use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledDataset, UnlabeledPool, Vocab};
use crate::error::{Error, Result};
use crate::hash::derive_seed;
use crate::model::{ClassifierModel, InitProvenance, ModelConfig, TrainConfig, TrainReport};
use crate::pretrain::{apply_init, pretrain, PretrainConfig, PretrainedInit};
use crate::pseudo::{label_pool, merge, select, PseudoLabeledDataset, SelectionRule};

/// The five ways a student can be trained from D and D'.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// T(D): supervised training on D only.
    TeacherOnly,
    /// T(D'): training on the pseudo-labeled set only.
    TrainDPrime,
    /// T(D+D'): training on the union of D and D'.
    TrainUnion,
    /// T(D')F(D): train on D', then fine-tune on D.
    TrainDPrimeFinetuneD,
    /// T(D+D')F(D): train on the union, then fine-tune on D.
    TrainUnionFinetuneD,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::TeacherOnly,
        StrategyKind::TrainDPrime,
        StrategyKind::TrainUnion,
        StrategyKind::TrainDPrimeFinetuneD,
        StrategyKind::TrainUnionFinetuneD,
    ];

    /// Table-style label, e.g. `T(D+D')F(D)`.
    pub fn label(&self) -> &'static str {
        match self {
            StrategyKind::TeacherOnly => "T(D)",
            StrategyKind::TrainDPrime => "T(D')",
            StrategyKind::TrainUnion => "T(D+D')",
            StrategyKind::TrainDPrimeFinetuneD => "T(D')F(D)",
            StrategyKind::TrainUnionFinetuneD => "T(D+D')F(D)",
        }
    }

    /// Config-file name, e.g. `t_d_dprime_f_d`.
    pub fn config_name(&self) -> &'static str {
        match self {
            StrategyKind::TeacherOnly => "t_d",
            StrategyKind::TrainDPrime => "t_dprime",
            StrategyKind::TrainUnion => "t_d_dprime",
            StrategyKind::TrainDPrimeFinetuneD => "t_dprime_f_d",
            StrategyKind::TrainUnionFinetuneD => "t_d_dprime_f_d",
        }
    }

    /// Accepts both config names and table labels.
    pub fn parse(name: &str) -> Option<StrategyKind> {
        Self::ALL
            .into_iter()
            .find(|k| k.config_name() == name || k.label() == name)
    }

    pub fn has_finetune_phase(&self) -> bool {
        matches!(
            self,
            StrategyKind::TrainDPrimeFinetuneD | StrategyKind::TrainUnionFinetuneD
        )
    }

    pub fn needs_d_prime(&self) -> bool {
        !matches!(self, StrategyKind::TeacherOnly)
    }
}

/// How the student's parameters start out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StudentInit {
    #[default]
    Random,
    FromTeacher,
}

/// A strategy choice plus its knobs. `finetune_cfg` may override the
/// optimizer settings of the F(D) phase; when absent that phase reuses the
/// phase-1 config. It may only be set for strategies that have an F(D)
/// phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub kind: StrategyKind,
    pub student_init: StudentInit,
    pub finetune_cfg: Option<TrainConfig>,
}

impl Strategy {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            student_init: StudentInit::Random,
            finetune_cfg: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.finetune_cfg.is_some() && !self.kind.has_finetune_phase() {
            return Err(Error::ConfigInvalid {
                field: "strategy.finetune_cfg".into(),
                reason: format!("{} has no fine-tune phase", self.kind.label()),
            });
        }
        Ok(())
    }
}

/// Everything strategy runs need besides the datasets: the shared
/// vocabulary and the architecture sizes.
#[derive(Debug, Clone, Copy)]
pub struct TrainContext<'a> {
    pub vocab: &'a Vocab,
    pub model: ModelConfig,
}

/// One training phase's bookkeeping, exposed for tests that audit which
/// ids each phase touched.
#[derive(Debug, Clone)]
pub struct PhaseRun {
    pub name: String,
    pub ids: Vec<String>,
    pub report: TrainReport,
}

/// Per-iteration D' bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DPrimeRecord {
    pub hash: u64,
    pub pool_hash: u64,
    pub size: usize,
    pub strategy: String,
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineProvenance {
    /// Corpora hashes the pretrained initializer saw, in order; empty when
    /// pretraining was disabled.
    pub pretrain_corpora: Vec<u64>,
    pub teacher_checkpoint: u64,
    pub d_prime: Vec<DPrimeRecord>,
    pub student_checkpoint: u64,
}

/// Outcome of a full pipeline run. Accuracies are on the dev set; callers
/// evaluate on held-out data themselves.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub teacher: ClassifierModel,
    pub teacher_dev_accuracy: f64,
    pub student: ClassifierModel,
    pub student_dev_accuracy: f64,
    /// Dev accuracy of the student produced by each iteration.
    pub iteration_dev_accuracy: Vec<f64>,
    /// The student model after each iteration; the last one is `student`.
    pub iteration_students: Vec<ClassifierModel>,
    pub provenance: PipelineProvenance,
}

/// JSON-friendly view of a [`PipelineResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub teacher_dev_accuracy: f64,
    pub student_dev_accuracy: f64,
    pub iteration_dev_accuracy: Vec<f64>,
    pub provenance: PipelineProvenance,
}

impl PipelineResult {
    pub fn summary(&self) -> PipelineSummary {
        PipelineSummary {
            teacher_dev_accuracy: self.teacher_dev_accuracy,
            student_dev_accuracy: self.student_dev_accuracy,
            iteration_dev_accuracy: self.iteration_dev_accuracy.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

fn fresh_model(
    ctx: &TrainContext<'_>,
    num_classes: usize,
    cfg: &TrainConfig,
    init: Option<&PretrainedInit>,
) -> Result<ClassifierModel> {
    let model = ClassifierModel::random(
        ctx.vocab,
        num_classes,
        &ctx.model,
        derive_seed(cfg.seed, "init"),
    );
    match init {
        Some(init) => apply_init(model, init),
        None => Ok(model),
    }
}

/// Trains the teacher: a freshly initialized model (optionally seeded with
/// pretrained embeddings) fit to D with early stopping on dev.
pub fn train_teacher(
    ctx: &TrainContext<'_>,
    d: &LabeledDataset,
    dev: &LabeledDataset,
    cfg: &TrainConfig,
    init: Option<&PretrainedInit>,
) -> Result<ClassifierModel> {
    train_teacher_with_report(ctx, d, dev, cfg, init).map(|(model, _)| model)
}

/// [`train_teacher`] keeping the per-epoch training report.
pub fn train_teacher_with_report(
    ctx: &TrainContext<'_>,
    d: &LabeledDataset,
    dev: &LabeledDataset,
    cfg: &TrainConfig,
    init: Option<&PretrainedInit>,
) -> Result<(ClassifierModel, TrainReport)> {
    let model = fresh_model(ctx, d.num_classes(), cfg, init)?;
    model.train(d, dev, cfg)
}

/// Runs one strategy's phase sequence and returns the final-phase best
/// checkpoint along with per-phase bookkeeping.
#[allow(clippy::too_many_arguments)]
pub fn run_strategy_detailed(
    ctx: &TrainContext<'_>,
    strategy: &Strategy,
    teacher: &ClassifierModel,
    d: &LabeledDataset,
    dev: &LabeledDataset,
    d_prime: &PseudoLabeledDataset,
    cfg: &TrainConfig,
    init: Option<&PretrainedInit>,
) -> Result<(ClassifierModel, Vec<PhaseRun>)> {
    strategy.validate()?;
    if strategy.kind.needs_d_prime() && d_prime.is_empty() {
        return Err(Error::EmptyDPrime {
            strategy: strategy.kind.label().to_string(),
        });
    }
    if strategy.kind.needs_d_prime()
        && d_prime.provenance().teacher_hash != teacher.content_hash()
    {
        log::warn!(
            "D' provenance teacher {:016x} differs from the supplied teacher {:016x}",
            d_prime.provenance().teacher_hash,
            teacher.content_hash()
        );
    }

    let mut student = match strategy.student_init {
        StudentInit::Random => fresh_model(ctx, d.num_classes(), cfg, init)?,
        StudentInit::FromTeacher => {
            let mut m = teacher.clone();
            m.set_provenance(InitProvenance::Teacher);
            m
        }
    };

    let phase1_set = match strategy.kind {
        StrategyKind::TeacherOnly => d.clone(),
        StrategyKind::TrainDPrime | StrategyKind::TrainDPrimeFinetuneD => d_prime.to_labeled()?,
        StrategyKind::TrainUnion | StrategyKind::TrainUnionFinetuneD => merge(d, d_prime)?,
    };
    let mut phases = Vec::new();
    let (trained, report) = student.train(&phase1_set, dev, cfg)?;
    student = trained;
    phases.push(PhaseRun {
        name: format!("train:{}", strategy.kind.label()),
        ids: phase1_set.ids().map(str::to_string).collect(),
        report,
    });

    if strategy.kind.has_finetune_phase() {
        let finetune_cfg = strategy.finetune_cfg.as_ref().unwrap_or(cfg);
        let (tuned, report) = student.train(d, dev, finetune_cfg)?;
        student = tuned;
        phases.push(PhaseRun {
            name: "finetune:F(D)".to_string(),
            ids: d.ids().map(str::to_string).collect(),
            report,
        });
    }
    Ok((student, phases))
}

/// [`run_strategy_detailed`] without the phase bookkeeping.
#[allow(clippy::too_many_arguments)]
pub fn run_strategy(
    ctx: &TrainContext<'_>,
    strategy: &Strategy,
    teacher: &ClassifierModel,
    d: &LabeledDataset,
    dev: &LabeledDataset,
    d_prime: &PseudoLabeledDataset,
    cfg: &TrainConfig,
    init: Option<&PretrainedInit>,
) -> Result<ClassifierModel> {
    run_strategy_detailed(ctx, strategy, teacher, d, dev, d_prime, cfg, init)
        .map(|(model, _)| model)
}

/// Iterative self-training: train a teacher on D, then for each of `n`
/// iterations relabel the pool, reselect D' from scratch, train a student,
/// and promote it to teacher. Iteration 1 uses `cfg` verbatim, so a
/// one-iteration run is identical to composing the steps by hand; later
/// iterations derive their seeds from `cfg.seed`.
#[allow(clippy::too_many_arguments)]
pub fn iterative_self_train(
    ctx: &TrainContext<'_>,
    d: &LabeledDataset,
    dev: &LabeledDataset,
    pool: &UnlabeledPool,
    selection: SelectionRule,
    strategy: &Strategy,
    n: usize,
    cfg: &TrainConfig,
    init: Option<&PretrainedInit>,
) -> Result<PipelineResult> {
    assert!(n >= 1, "iterative self-training needs at least one iteration");
    let teacher = train_teacher(ctx, d, dev, cfg, init)?;
    let teacher_dev_accuracy = teacher.evaluate(dev)?;

    let mut provenance = PipelineProvenance {
        pretrain_corpora: init.map(|i| i.provenance().to_vec()).unwrap_or_default(),
        teacher_checkpoint: teacher.content_hash(),
        d_prime: Vec::new(),
        student_checkpoint: 0,
    };
    let mut current_teacher = teacher.clone();
    let mut iteration_dev_accuracy = Vec::with_capacity(n);
    let mut iteration_students = Vec::with_capacity(n);

    for iteration in 1..=n {
        let iter_cfg = if iteration == 1 {
            cfg.clone()
        } else {
            cfg.with_seed(derive_seed(cfg.seed, &format!("iteration-{iteration}")))
        };
        let d_prime = if strategy.kind.needs_d_prime() {
            let scored = label_pool(&current_teacher, pool)?;
            select(&scored, pool, selection)
        } else {
            // T(D) ignores the pool entirely
            PseudoLabeledDataset::from_parts(
                Vec::new(),
                d.num_classes(),
                crate::pseudo::PseudoProvenance {
                    teacher_hash: current_teacher.content_hash(),
                    strategy: "unused".into(),
                    k: None,
                },
            )
        };
        if strategy.kind.needs_d_prime() {
            provenance.d_prime.push(DPrimeRecord {
                hash: d_prime.content_hash(),
                pool_hash: pool.content_hash(),
                size: d_prime.len(),
                strategy: d_prime.provenance().strategy.clone(),
                k: d_prime.provenance().k,
            });
        }
        let student = run_strategy(
            ctx,
            strategy,
            &current_teacher,
            d,
            dev,
            &d_prime,
            &iter_cfg,
            init,
        )?;
        iteration_dev_accuracy.push(student.evaluate(dev)?);
        iteration_students.push(student.clone());
        current_teacher = student;
    }

    provenance.student_checkpoint = current_teacher.content_hash();
    let student_dev_accuracy = *iteration_dev_accuracy.last().expect("n >= 1");
    Ok(PipelineResult {
        teacher,
        teacher_dev_accuracy,
        student: current_teacher,
        student_dev_accuracy,
        iteration_dev_accuracy,
        iteration_students,
        provenance,
    })
}

/// Pretraining plus pseudo-labeling in one pipeline: pretrain on the
/// general pool (when given) and then on the in-domain pool, train the
/// teacher from that initializer, pseudo-label the pool, and train the
/// student with the same initializer applied before its first phase. The
/// pool is used twice: once for pretraining and once for pseudo-label
/// generation.
#[allow(clippy::too_many_arguments)]
pub fn combined_pipeline(
    ctx: &TrainContext<'_>,
    d: &LabeledDataset,
    dev: &LabeledDataset,
    pool: &UnlabeledPool,
    general_pool: Option<&UnlabeledPool>,
    selection: SelectionRule,
    strategy: &Strategy,
    pretrain_cfg: Option<&PretrainConfig>,
    train_cfg: &TrainConfig,
) -> Result<PipelineResult> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let init = match pretrain_cfg {
        Some(pcfg) => {
            if pcfg.embedding_dim != ctx.model.embedding_dim {
                return Err(Error::ShapeMismatch(format!(
                    "pretrain embedding_dim {} != model embedding_dim {}",
                    pcfg.embedding_dim, ctx.model.embedding_dim
                )));
            }
            let staged = match general_pool {
                Some(general) => Some(pretrain(general, ctx.vocab, pcfg, None)?.0),
                None => None,
            };
            Some(pretrain(pool, ctx.vocab, pcfg, staged.as_ref())?.0)
        }
        None => None,
    };
    iterative_self_train(
        ctx,
        d,
        dev,
        pool,
        selection,
        strategy,
        1,
        train_cfg,
        init.as_ref(),
    )
}
