use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{compare_counts, ess, format_float};
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::model::enumerate::state_space_size;
use crate::model::{to_json_17, EnergyModel, Model, ENUMERATION_CAP};
use crate::samplers::{run_chain, tune, ChainState, SamplerConfig, TuneStatus};

/// Environment variable overriding the default worker count.
pub const THREADS_ENV: &str = "DLMC_THREADS";

/// Chain id reserved for the tuning stream of each sampler.
const TUNING_CHAIN: u64 = u64::MAX;

pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of chain `chain` of sampler `sampler`:
/// `splitmix64(splitmix64(splitmix64(seed) + sampler) + chain)`.
pub fn derive_seed(seed: u64, sampler: u64, chain: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed).wrapping_add(sampler)).wrapping_add(chain))
}

/// One row per (sampler, chain).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub sampler: String,
    pub weight: String,
    pub hyperparameter: Option<f64>,
    pub chain: usize,
    pub acceptance: f64,
    pub ess: f64,
    pub ess_per_eval: f64,
    pub ess_per_second: Option<f64>,
    pub energy_evals: u64,
    pub tv_to_exact: Option<f64>,
    pub seed: u64,
}

pub const CSV_HEADER: [&str; 12] = [
    "model",
    "sampler",
    "weight",
    "hyperparameter",
    "chain",
    "acceptance",
    "ess",
    "ess_per_eval",
    "ess_per_second",
    "energy_evals",
    "tv_to_exact",
    "seed",
];

impl ResultRow {
    fn record(&self) -> [String; 12] {
        let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
        [
            self.model.clone(),
            self.sampler.clone(),
            self.weight.clone(),
            opt(self.hyperparameter),
            self.chain.to_string(),
            format_float(self.acceptance),
            format_float(self.ess),
            format_float(self.ess_per_eval),
            opt(self.ess_per_second),
            self.energy_evals.to_string(),
            opt(self.tv_to_exact),
            self.seed.to_string(),
        ]
    }
}

/// Outcome of tuning one sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningOutcome {
    pub sampler: usize,
    pub label: String,
    pub status: TuneStatus,
    pub target_rate: f64,
    pub trailing_acceptance: f64,
    pub value: f64,
}

/// Per-sampler medians over chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSummary {
    pub sampler: usize,
    pub label: String,
    pub hyperparameter: Option<f64>,
    pub median_acceptance: f64,
    pub median_ess: f64,
    pub median_ess_per_eval: f64,
    pub median_ess_per_second: Option<f64>,
    /// Sum of per-chain ESS.
    pub total_ess: f64,
    pub median_tv_to_exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub model: String,
    /// Configuration with tuned hyperparameters filled in.
    pub config: ExperimentConfig,
    pub tuning: Vec<TuningOutcome>,
    pub samplers: Vec<SamplerSummary>,
    pub rows: Vec<ResultRow>,
}

impl ExperimentResult {
    pub fn csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record(r.record())?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
    }

    /// Summary JSON (everything except the per-chain rows).
    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct View<'a> {
            model: &'a str,
            config: &'a ExperimentConfig,
            tuning: &'a [TuningOutcome],
            samplers: &'a [SamplerSummary],
        }
        to_json_17(&View {
            model: &self.model,
            config: &self.config,
            tuning: &self.tuning,
            samplers: &self.samplers,
        })
    }

    /// Writes `results.csv` and `summary.json` into `dir`, returning their paths.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join("results.csv");
        let json_path = dir.join("summary.json");
        write_file(&csv_path, self.csv()?.as_bytes())?;
        write_file(&json_path, self.summary_json()?.as_bytes())?;
        Ok((csv_path, json_path))
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Worker count: explicit value, else `DLMC_THREADS`, else available parallelism.
pub fn resolve_threads(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(THREADS_ENV).ok()?.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Sizes rayon's global pool from [`resolve_threads`]; returns the count.
/// Only the first call in a process takes effect.
pub fn configure_global_threads(explicit: Option<usize>) -> usize {
    let n = resolve_threads(explicit);
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    rayon::current_num_threads()
}

/// Tunes (if enabled) and runs every sampler on `model`. Chains run on a
/// pool of `threads` workers; results do not depend on the thread count.
pub fn run_with_model(config: &ExperimentConfig, model: &Model, threads: usize) -> Result<ExperimentResult> {
    config.validate()?;
    let problems = config.model_violations(model);
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(vec![format!("thread pool: {e}")]))?;
    pool.install(|| execute(config, model))
}

/// Builds the model from the config and runs the experiment; writes outputs
/// when `config.output` is set.
pub fn run_experiment(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentResult> {
    config.validate()?;
    let model = config.model.build()?;
    let result = run_with_model(config, &model, resolve_threads(threads))?;
    if let Some(dir) = &config.output {
        result.write(dir)?;
    }
    Ok(result)
}

/// Tunes the tunable samplers; others pass through untouched.
pub fn tune_samplers(
    config: &ExperimentConfig,
    model: &Model,
) -> Result<(Vec<SamplerConfig>, Vec<TuningOutcome>)> {
    let results: Vec<Result<(SamplerConfig, Option<TuningOutcome>)>> = config
        .samplers
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            if !config.tuning.enabled || s.tunable_value().is_none() {
                return Ok((s.clone(), None));
            }
            let target = config.tuning.target_for(s.kind);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, i as u64, TUNING_CHAIN));
            let report = tune(s, model, target, config.tuning.adaptation_steps, &mut rng)?;
            let outcome = TuningOutcome {
                sampler: i,
                label: s.label(),
                status: report.status,
                target_rate: target,
                trailing_acceptance: report.trailing_acceptance,
                value: report.config.tunable_value().unwrap_or(f64::NAN),
            };
            Ok((report.config, Some(outcome)))
        })
        .collect();
    let mut samplers = Vec::new();
    let mut outcomes = Vec::new();
    for r in results {
        let (s, o) = r?;
        samplers.push(s);
        outcomes.extend(o);
    }
    Ok((samplers, outcomes))
}

fn execute(config: &ExperimentConfig, model: &Model) -> Result<ExperimentResult> {
    let (samplers, tuning) = tune_samplers(config, model)?;
    let name = config.model.name();
    let enumerable = state_space_size(model.dim(), model.n_categories(), ENUMERATION_CAP).ok();
    let jobs: Vec<(usize, usize)> = (0..samplers.len())
        .flat_map(|s| (0..config.chains).map(move |c| (s, c)))
        .collect();
    let mut rows = jobs
        .par_iter()
        .map(|&(s, c)| {
            run_one(
                config,
                model,
                &name,
                &samplers[s],
                s,
                c,
                enumerable,
            )
            .map(|row| (s, c, row))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|&(s, c, _)| (s, c));

    let rows: Vec<(usize, ResultRow)> = rows.into_iter().map(|(s, _, r)| (s, r)).collect();
    let summaries = samplers
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mine: Vec<&ResultRow> = rows.iter().filter(|(j, _)| *j == i).map(|(_, r)| r).collect();
            summarize_sampler(i, s, &mine)
        })
        .collect();
    let mut resolved = config.clone();
    resolved.samplers = samplers;
    Ok(ExperimentResult {
        model: name,
        config: resolved,
        tuning,
        samplers: summaries,
        rows: rows.into_iter().map(|(_, r)| r).collect(),
    })
}

fn run_one(
    config: &ExperimentConfig,
    model: &Model,
    name: &str,
    sampler: &SamplerConfig,
    s: usize,
    c: usize,
    enumerable: Option<usize>,
) -> Result<ResultRow> {
    let seed = derive_seed(config.seed, s as u64, c as u64);
    let mut chain = ChainState::random(model, seed)?;
    run_chain(&mut chain, model, sampler, config.burn_in, |_| {})?;
    chain.reset_record();
    let post = config.steps - config.burn_in;
    let mut counts = enumerable.map(|size| vec![0u64; size]);
    let start = Instant::now();
    match counts.as_mut() {
        Some(counts) => run_chain(&mut chain, model, sampler, post, |x| counts[x.index()] += 1)?,
        None => run_chain(&mut chain, model, sampler, post, |_| {})?,
    }
    let seconds = start.elapsed().as_secs_f64();
    let record = &chain.record;
    let report = ess(&record.trace)?.with_cost(record.energy_evals, config.wall_clock.then_some(seconds));
    let tv = counts
        .map(|counts| compare_counts(&counts, model).map(|r| r.tv_distance))
        .transpose()?;
    Ok(ResultRow {
        model: name.to_string(),
        sampler: sampler.kind.name().to_string(),
        weight: if sampler.kind.uses_weight() {
            sampler.weight.name().to_string()
        } else {
            String::new()
        },
        hyperparameter: sampler.tunable_value(),
        chain: c,
        acceptance: record.acceptance_rate(),
        ess: report.ess,
        ess_per_eval: report.ess_per_eval.unwrap_or(0.0),
        ess_per_second: report.ess_per_second,
        energy_evals: record.energy_evals,
        tv_to_exact: tv,
        seed,
    })
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn summarize_sampler(i: usize, s: &SamplerConfig, rows: &[&ResultRow]) -> SamplerSummary {
    let med = |f: &dyn Fn(&ResultRow) -> f64| median(&mut rows.iter().map(|r| f(r)).collect::<Vec<_>>());
    let med_opt = |f: &dyn Fn(&ResultRow) -> Option<f64>| {
        let mut v: Vec<f64> = rows.iter().filter_map(|r| f(r)).collect();
        (!v.is_empty()).then(|| median(&mut v))
    };
    SamplerSummary {
        sampler: i,
        label: s.label(),
        hyperparameter: s.tunable_value(),
        median_acceptance: med(&|r| r.acceptance),
        median_ess: med(&|r| r.ess),
        median_ess_per_eval: med(&|r| r.ess_per_eval),
        median_ess_per_second: med_opt(&|r| r.ess_per_second),
        total_ess: rows.iter().map(|r| r.ess).sum(),
        median_tv_to_exact: med_opt(&|r| r.tv_to_exact),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ModelSpec;
    use crate::model::ShapeConfig;
    use crate::samplers::SamplerKind;

    fn smoke() -> ExperimentConfig {
        ExperimentConfig {
            model: ModelSpec::shape(ShapeConfig::Bernoulli {
                dim: 5,
                n_categories: 2,
                sigma2: 1.0,
            }),
            samplers: vec![
                SamplerConfig::new(SamplerKind::Dlmc),
                SamplerConfig::new(SamplerKind::Rwm),
                SamplerConfig::new(SamplerKind::BlockGibbs),
            ],
            chains: 2,
            steps: 100,
            burn_in: 20,
            seed: 42,
            tuning: Default::default(),
            output: None,
            wall_clock: false,
        }
    }

    #[test]
    fn pinned_seed_derivation() {
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(derive_seed(0, 0, 0), splitmix64(splitmix64(splitmix64(0))));
        assert_ne!(derive_seed(1, 0, 1), derive_seed(1, 1, 0));
    }

    #[test]
    fn smoke_run_shape() {
        let r = run_experiment(&smoke(), Some(2)).unwrap();
        assert_eq!(r.rows.len(), 6);
        for (k, row) in r.rows.iter().enumerate() {
            assert_eq!(row.chain, k % 2);
            assert!(row.tv_to_exact.is_some());
            assert!(row.ess_per_second.is_none());
            assert!(row.energy_evals > 0);
        }
        let csv = r.csv().unwrap();
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.starts_with(&CSV_HEADER.join(",")));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut c = smoke();
        c.tuning.enabled = true;
        c.tuning.adaptation_steps = 200;
        let a = run_experiment(&c, Some(1)).unwrap();
        let b = run_experiment(&c, Some(3)).unwrap();
        assert_eq!(a.csv().unwrap(), b.csv().unwrap());
        assert_eq!(a.summary_json().unwrap(), b.summary_json().unwrap());
        assert_eq!(a.tuning.len(), 2);
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = smoke();
        c.output = Some(dir.path().join("out"));
        run_experiment(&c, Some(1)).unwrap();
        let csv = fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
        assert!(!csv.contains('\r'));
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
        assert_eq!(json["samplers"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
