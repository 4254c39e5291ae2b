//! Semi-supervised text classification at desk scale.
//!
//! The crate covers the full method space around a small trainable text
//! classifier: in-domain masked-token pretraining of its embeddings,
//! teacher-student pseudo-labeling with naive or top-K-per-class selection,
//! the T(D) / T(D') / T(D+D') / T(D')F(D) / T(D+D')F(D) student-training
//! strategies, iterative self-training, the combination of pretraining and
//! pseudo-labeling, and a config-driven grid harness that sweeps |D|, |D'|,
//! |U|, strategies, iterations and seeds into reproducible accuracy tables.
//!
//! Everything is deterministic given its seeds: identical inputs produce
//! bit-identical models, checkpoints and grid files.

pub mod checkpoint;
pub mod corpus;
pub mod error;
pub mod harness;
pub mod hash;
pub mod model;
pub mod pretrain;
pub mod pseudo;
pub mod strategies;
pub mod synthetic;

pub use corpus::{
    build_vocab, load_labeled_jsonl, load_unlabeled_jsonl, sample_labeled_subset, tokenize,
    vectorize, vectorize_pool, Example, LabelMap, LabeledDataset, UnlabeledPool, Vocab,
};
pub use error::{Error, Result};
pub use model::{ClassifierModel, InitProvenance, ModelConfig, TrainConfig, TrainReport};
pub use pretrain::{apply_init, pretrain, PretrainConfig, PretrainedInit};
pub use pseudo::{
    label_pool, merge, select, select_naive, select_top_k, PseudoLabeledDataset, ScoredPool,
    SelectionRule,
};
pub use strategies::{
    combined_pipeline, iterative_self_train, run_strategy, train_teacher, PipelineResult,
    Strategy, StrategyKind, StudentInit, TrainContext,
};
