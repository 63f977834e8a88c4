use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dlmc::harness::{
    configure_global_threads, run_experiment, tune_samplers, validate, ExperimentConfig, ModelSpec, Scale,
    ValidateOptions, CHECK_NAMES,
};
use dlmc::model::{save_params, PRESETS};
use dlmc::Error;

/// Discrete Langevin samplers: experiments, tuning and the validation suite.
#[derive(Parser)]
#[command(name = "dlmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Worker threads (default: DLMC_THREADS, then available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config; writes results.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the oracle and invariant suite; exits 1 if any check fails.
    Validate {
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run only the named checks (repeatable).
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(CHECK_NAMES))]
        only: Vec<String>,
        /// Negative control: corrupt the interpolated rows checked by c2_exactness.
        #[arg(long)]
        mutate_interpolated: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Tune the config's samplers and print the tuned config.
    Tune {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the tuned config here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the benchmark config for a named model regime.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESETS), required_unless_present = "list")]
        name: Option<String>,
        /// Paper scale (100 chains × 1e5 steps, full-size models) instead of desk scale.
        #[arg(long)]
        paper: bool,
        /// List preset names.
        #[arg(long)]
        list: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a model parameter file.
    GenParams {
        /// Named regime.
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS), conflicts_with = "config")]
        preset: Option<String>,
        /// Take the model spec from an experiment config.
        #[arg(long, required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        paper: bool,
        /// Overrides the regime's size knob.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Io { .. } | Error::Shape(_) | Error::Capacity { .. } => 2,
        _ => 1,
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(command: Command) -> Result<u8, Error> {
    match command {
        Command::Run {
            config,
            seed,
            out,
            common,
        } => {
            let mut config = load_config(&config, seed)?;
            if out.is_some() {
                config.output = out;
            }
            configure_global_threads(common.threads);
            let result = run_experiment(&config, common.threads)?;
            for s in &result.samplers {
                eprintln!(
                    "{:<20} acceptance {:.3}  median ess/eval {:.4e}",
                    s.label, s.median_acceptance, s.median_ess_per_eval
                );
            }
            match &config.output {
                Some(dir) => eprintln!("wrote {}", dir.display()),
                None => print!("{}", result.csv()?),
            }
            Ok(0)
        }
        Command::Validate {
            out,
            only,
            mutate_interpolated,
            common,
        } => {
            configure_global_threads(common.threads);
            let report = validate(&ValidateOptions {
                only,
                mutate_interpolated,
            });
            for c in &report.checks {
                eprintln!(
                    "{} {:<26} observed {:.3e} tolerance {:.1e} ({:.1} s)",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.observed,
                    c.tolerance,
                    c.seconds
                );
            }
            emit(&report.to_json()?, out.as_deref())?;
            Ok(if report.passed { 0 } else { 1 })
        }
        Command::Tune {
            config,
            seed,
            out,
            common,
        } => {
            let mut config = load_config(&config, seed)?;
            config.validate()?;
            config.tuning.enabled = true;
            let model = config.model.build()?;
            configure_global_threads(common.threads);
            let (samplers, outcomes) = tune_samplers(&config, &model)?;
            for o in &outcomes {
                eprintln!(
                    "{:<20} {:?}: acceptance {:.3} (target {}), value {:.6e}",
                    o.label, o.status, o.trailing_acceptance, o.target_rate, o.value
                );
            }
            config.samplers = samplers;
            emit(&config.to_json()?, out.as_deref())?;
            Ok(0)
        }
        Command::Preset { name, paper, list, out } => {
            if list {
                emit(&format!("{}\n", PRESETS.join("\n")), out.as_deref())?;
                return Ok(0);
            }
            let scale = if paper { Scale::Paper } else { Scale::Desk };
            let config = ExperimentConfig::preset(name.as_deref().unwrap_or_default(), scale)?;
            emit(&config.to_json()?, out.as_deref())?;
            Ok(0)
        }
        Command::GenParams {
            preset,
            config,
            paper,
            size,
            seed,
            out,
        } => {
            let mut spec = match (preset, config) {
                (Some(name), _) => ModelSpec {
                    scale: if paper { Scale::Paper } else { Scale::Desk },
                    ..ModelSpec::preset(&name)
                },
                (None, Some(path)) => ExperimentConfig::load(path)?.model,
                (None, None) => unreachable!("clap requires one"),
            };
            if size.is_some() {
                spec.size = size;
            }
            if let Some(s) = seed {
                spec.seed = s;
            }
            let model = spec.build()?;
            save_params(&model, &out)?;
            eprintln!("wrote {}", out.display());
            Ok(0)
        }
    }
}
