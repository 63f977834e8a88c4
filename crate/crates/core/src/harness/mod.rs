//! Configuration-driven experiments and the validation suite.

mod config;
mod run;
mod validate;

pub use config::{ExperimentConfig, ModelSpec, Scale, TuningConfig};
pub use run::{
    configure_global_threads, derive_seed, median, resolve_threads, run_experiment, run_with_model, splitmix64, tune_samplers,
    ExperimentResult, ResultRow, SamplerSummary, TuningOutcome, CSV_HEADER, THREADS_ENV,
};
pub use validate::{ordering_config, validate, CheckResult, ValidateOptions, ValidationReport, CHECK_NAMES};
