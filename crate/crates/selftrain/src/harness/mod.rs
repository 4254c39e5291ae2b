//! Config-driven experiment harness: grid enumeration and execution,
//! resumable JSONL result grids, table/series renderers and the CLI.

pub mod cli;
pub mod config;
pub mod grid;
pub mod render;
pub mod runner;

pub use config::{ExperimentConfig, ModelBlock, PretrainBlock, TrainBlock};
pub use grid::{Axis, CellKey, CellRecord, ResultGrid};
pub use render::{render_series, render_table};
pub use runner::{enumerate_cells, load_corpora, run_experiment, LoadedCorpora, RunOptions};
