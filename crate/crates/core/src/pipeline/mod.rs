//! Pipeline orchestration: configuration, the staged run, and synthetic data.

pub mod config;
pub mod run;
pub mod synth;

pub use config::{PipelineConfig, Setting, Snapshot, MALAWI_BBOX, TANZANIA_BBOX};
pub use run::{
    ingest, list_outputs, run_pipeline, ModelSummary, RunSummary, SnapshotSummary, SurveySummary, TransitionSummary,
};
pub use synth::{generate_synthetic, generate_synthetic_with, Scenario, SynthOptions, SyntheticBundle};
