//! The oracle and invariant suite behind `dlmc validate`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::distribution::{tv_distance, DenseDistribution};
use crate::dynamics::{
    conductance_flow, default_dt, direct_flow, dmala_row, euler_row, first_jump, full_rate_matrix,
    integrate_dwgf, interpolated_row, matrix_exponential, stationary_row, Adjacency, RateRow, SquareMatrix,
    WeightFunction,
};
use crate::error::Result;
use crate::harness::config::{ExperimentConfig, ModelSpec, Scale, TuningConfig};
use crate::harness::run::{median, run_with_model};
use crate::model::{
    enumerate_distribution, generate_params, Bernoulli, EnergyModel, IsingPotts, LocalRatios, Model, RatioSource,
    ShapeConfig, ENUMERATION_CAP,
};
use crate::samplers::{
    proposal_rows, run_chain, step, tune, ChainState, MoveLaw, SamplerConfig, SamplerKind, TuneStatus,
};
use crate::state::State;

pub const CHECK_NAMES: &[&str] = &[
    "lb_identity",
    "c2_exactness",
    "boundary_conditions",
    "conductance_equivalence",
    "dwgf_descent",
    "first_jump_law",
    "dlmcf_dmala_structure",
    "factorized_degeneration",
    "pas_gwg_equivalence",
    "chain_exactness",
    "tuner_targets",
    "efficiency_ordering",
    "determinism",
];

#[derive(Debug, Clone, Default)]
pub struct ValidateOptions {
    /// Run only these checks (all when empty).
    pub only: Vec<String>,
    /// Negative control: perturb the interpolated rows fed to `c2_exactness`.
    pub mutate_interpolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub tolerance: f64,
    pub observed: f64,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn to_json(&self) -> Result<String> {
        crate::model::to_json_17(self)
    }
}

struct Outcome {
    tolerance: f64,
    observed: f64,
    passed: bool,
    detail: String,
}

impl Outcome {
    /// Passes when `observed < tolerance`.
    fn below(observed: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            tolerance,
            observed,
            passed: observed < tolerance,
            detail: detail.into(),
        }
    }
}

/// Runs the selected checks; names not in [`CHECK_NAMES`] are reported as failures.
pub fn validate(options: &ValidateOptions) -> ValidationReport {
    let selected: Vec<&str> = if options.only.is_empty() {
        CHECK_NAMES.to_vec()
    } else {
        options.only.iter().map(String::as_str).collect()
    };
    let checks: Vec<CheckResult> = selected
        .into_iter()
        .map(|name| {
            let start = Instant::now();
            let outcome = run_check(name, options).unwrap_or_else(|e| Outcome {
                tolerance: f64::NAN,
                observed: f64::NAN,
                passed: false,
                detail: e.to_string(),
            });
            CheckResult {
                name: name.to_string(),
                tolerance: outcome.tolerance,
                observed: outcome.observed,
                passed: outcome.passed,
                detail: outcome.detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect();
    ValidationReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

fn run_check(name: &str, options: &ValidateOptions) -> Result<Outcome> {
    match name {
        "lb_identity" => lb_identity(),
        "c2_exactness" => c2_exactness(options.mutate_interpolated),
        "boundary_conditions" => boundary_conditions(),
        "conductance_equivalence" => conductance_equivalence(),
        "dwgf_descent" => dwgf_descent(),
        "first_jump_law" => first_jump_law(),
        "dlmcf_dmala_structure" => dlmcf_dmala_structure(),
        "factorized_degeneration" => factorized_degeneration(),
        "pas_gwg_equivalence" => pas_gwg_equivalence(),
        "chain_exactness" => chain_exactness(),
        "tuner_targets" => tuner_targets(),
        "efficiency_ordering" => efficiency_ordering(),
        "determinism" => determinism(),
        other => Ok(Outcome {
            tolerance: f64::NAN,
            observed: f64::NAN,
            passed: false,
            detail: format!("unknown check {other:?}"),
        }),
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn lb_identity() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for g in [WeightFunction::Sqrt, WeightFunction::Barker] {
        for k in 0..=3600 {
            let l = -18.0 + 0.01 * k as f64;
            worst = worst.max((g.log_g(l) - (l + g.log_g(-l))).abs());
        }
    }
    Ok(Outcome::below(worst, 1e-12, "max |log g(t) − log t − log g(1/t)| over log t ∈ [−18, 18]"))
}

fn c2_exactness(mutate: bool) -> Result<Outcome> {
    let grid = logspace(1e-3, 1e3, 7);
    let mut worst: f64 = 0.0;
    for &alpha in &grid {
        for &beta in &grid {
            for &h in &grid {
                let q = SquareMatrix::from_rows(&[vec![-alpha, alpha], vec![beta, -beta]])?;
                let p = matrix_exponential(&q, h)?;
                let hh = if mutate { h * 1.01 } else { h };
                let rows = [
                    interpolated_row(
                        &RateRow::from_rates(0, 0, &[0.0, alpha])?,
                        &LocalRatios {
                            site: 0,
                            log_ratios: vec![0.0, (alpha / beta).ln()],
                        },
                        0,
                        hh,
                    ),
                    interpolated_row(
                        &RateRow::from_rates(0, 1, &[beta, 0.0])?,
                        &LocalRatios {
                            site: 0,
                            log_ratios: vec![(beta / alpha).ln(), 0.0],
                        },
                        1,
                        hh,
                    ),
                ];
                for (i, row) in rows.iter().enumerate() {
                    for j in 0..2 {
                        worst = worst.max((row.probs[j] - p.get(i, j)).abs());
                    }
                }
            }
        }
    }
    Ok(Outcome::below(
        worst,
        1e-10,
        "max |interpolated − exp(Qh)| over α, β, h ∈ [1e-3, 1e3] (7-point log grid)",
    ))
}

fn random_log_ratios(rng: &mut ChaCha8Rng, c: usize, current: usize, spread: f64) -> Vec<f64> {
    let u = Uniform::new_inclusive(-spread, spread).expect("valid range");
    (0..c).map(|j| if j == current { 0.0 } else { u.sample(rng) }).collect()
}

fn boundary_conditions() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst_zero, mut worst_inf, mut worst_fd): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for c in [2usize, 4, 8] {
        for _ in 0..100 {
            let current = rng.random_range(0..c);
            let lr = random_log_ratios(&mut rng, c, current, 2.0);
            let g = if rng.random::<bool>() { WeightFunction::Sqrt } else { WeightFunction::Barker };
            let rate = RateRow::from_log_ratios(0, current, &lr, g);
            let local = LocalRatios {
                site: 0,
                log_ratios: lr.clone(),
            };
            let p0 = interpolated_row(&rate, &local, current, 0.0);
            let one_hot: Vec<f64> = (0..c).map(|j| if j == current { 1.0 } else { 0.0 }).collect();
            if p0.probs != one_hot {
                worst_zero = 1.0;
            }
            let nu = stationary_row(&lr);
            let p_inf = interpolated_row(&rate, &local, current, 1e9);
            for j in 0..c {
                worst_inf = worst_inf.max((p_inf.probs[j] - nu[j]).abs());
            }
            let h = 1e-6;
            let ph = interpolated_row(&rate, &local, current, h);
            for j in 0..c {
                let fd = (ph.probs[j] - p0.probs[j]) / h;
                worst_fd = worst_fd.max((fd - rate.rates[j]).abs() / rate.rates[j].abs());
            }
        }
    }
    Ok(Outcome {
        tolerance: 1e-4,
        observed: worst_fd,
        passed: worst_zero == 0.0 && worst_inf < 1e-9 && worst_fd < 1e-4,
        detail: format!(
            "h=0 one-hot mismatches: {worst_zero}; max |P(1e9) − ν| = {worst_inf:e} (tol 1e-9); \
             max relative FD derivative error at h=1e-6 = {worst_fd:e} (tol 1e-4)"
        ),
    })
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn conductance_equivalence() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let adj = Adjacency::hamming(3, 2);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let rho = random_simplex(&mut rng, 8);
        let pi = random_simplex(&mut rng, 8);
        let energies: Vec<f64> = pi.iter().map(|p| -p.ln()).collect();
        let g = if k % 2 == 0 { WeightFunction::Sqrt } else { WeightFunction::Barker };
        let a = conductance_flow(&rho, &pi, &energies, &adj, g)?;
        let b = direct_flow(&rho, &pi, &adj, g)?;
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        worst = worst.max(err / scale);
    }
    Ok(Outcome::below(worst, 1e-10, "max relative difference, conductance form vs direct, 100 pairs"))
}

/// Small random models with enumerable state spaces.
fn tiny_models(seed: u64) -> Result<Vec<Model>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = |n: usize, s: f64| -> Vec<f64> { (0..n).map(|_| rng.random_range(-s..s)).collect() };
    Ok(vec![
        IsingPotts::new(2, 2, 2, u(8, 1.0), 0.5)?.into(),
        IsingPotts::new(2, 2, 3, u(12, 1.0), 0.4)?.into(),
        Bernoulli::new(3, 3, u(9, 1.5))?.into(),
        IsingPotts::new(1, 4, 2, u(8, 1.0), -0.3)?.into(),
        Bernoulli::new(5, 2, u(10, 1.0))?.into(),
    ])
}

fn dwgf_descent() -> Result<Outcome> {
    let mut worst_rise: f64 = 0.0;
    let mut worst_final: f64 = 0.0;
    for (i, model) in tiny_models(13)?.iter().enumerate() {
        let g = if i % 2 == 0 { WeightFunction::Sqrt } else { WeightFunction::Barker };
        let full = full_rate_matrix(model, g)?;
        let rho0 = DenseDistribution::point_mass(full.size(), full.pi.argmax().wrapping_add(1) % full.size())?;
        let traj = integrate_dwgf(&full, &rho0, 50.0, default_dt(&full))?;
        for w in traj.windows(2) {
            worst_rise = worst_rise.max(w[1].kl - w[0].kl);
        }
        worst_final = worst_final.max(traj.last().expect("non-empty").kl);
    }
    Ok(Outcome {
        tolerance: 1e-8,
        observed: worst_final,
        passed: worst_rise <= 1e-12 && worst_final < 1e-8,
        detail: format!("largest KL increase per step {worst_rise:e} (slack 1e-12); worst KL at t=50 {worst_final:e}"),
    })
}

fn first_jump_law() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst: f64 = 0.0;
    for model in tiny_models(15)?.into_iter().take(3) {
        let (n, c) = (model.dim(), model.n_categories());
        let x = State::random(n, c, &mut rng);
        let g = WeightFunction::Sqrt;
        let mut table = crate::model::LogRatioTable::zeros(n, c);
        crate::model::fill_log_ratios(&model, x.values(), RatioSource::Exact, &mut table);
        let law = MoveLaw::new(&x, &table, g).probs();
        let draws = 100_000;
        let mut counts = vec![0.0; n * c];
        for _ in 0..draws {
            let j = first_jump(&model, &x, g, &mut rng)?.expect("non-absorbing");
            counts[j.site * c + j.value] += 1.0 / draws as f64;
        }
        worst = worst.max(tv_distance(&counts, &law));
    }
    Ok(Outcome::below(worst, 0.02, "TV(Gillespie first jump, GWG categorical), 1e5 paths, 3 models"))
}

fn dlmcf_dmala_structure() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut worst: f64 = 0.0;
    let mut self_violations = 0;
    for _ in 0..1000 {
        let c = rng.random_range(2..=8);
        let current = rng.random_range(0..c);
        let lr = random_log_ratios(&mut rng, c, current, 3.0);
        let alpha: f64 = rng.random_range(0.05..3.0);
        let h = (-1.0 / (2.0 * alpha)).exp();
        let local = LocalRatios { site: 0, log_ratios: lr.clone() };
        let e = euler_row(&RateRow::from_log_ratios(0, current, &lr, WeightFunction::Sqrt), current, h).row;
        let d = dmala_row(&local, current, alpha);
        let others: Vec<usize> = (0..c).filter(|&j| j != current).collect();
        let k0 = e.probs[others[0]] / d.probs[others[0]];
        for &j in &others[1..] {
            worst = worst.max((e.probs[j] / d.probs[j] / k0 - 1.0).abs());
        }
        if e.probs[current] > d.probs[current] {
            self_violations += 1;
        }
    }
    Ok(Outcome {
        tolerance: 1e-12,
        observed: worst,
        passed: worst < 1e-12 && self_violations == 0,
        detail: format!("max relative deviation from proportional off-diagonals; self-mass violations: {self_violations}"),
    })
}

fn factorized_degeneration() -> Result<Outcome> {
    let mut worst_row: f64 = 0.0;
    let mut worst_acc: f64 = 1.0;
    for name in ["bernoulli-high", "bernoulli-low", "bernoulli-c4", "bernoulli-c8"] {
        let model = generate_params(&ShapeConfig::desk_preset(name).expect("known preset"), 1)?;
        let Model::Bernoulli(bern) = &model else { unreachable!() };
        let config = SamplerConfig::new(SamplerKind::Dlmc).with_step(1e9);
        let mut chain = ChainState::random(&model, 2)?;
        run_chain(&mut chain, &model, &config, 200, |_| {})?;
        worst_acc = worst_acc.min(chain.record.acceptance_rate());
        for (n, row) in proposal_rows(&model, chain.x(), &config)?.iter().enumerate() {
            for (p, q) in row.probs.iter().zip(bern.marginal(n)) {
                worst_row = worst_row.max((p - q).abs());
            }
        }
    }
    Ok(Outcome {
        tolerance: 1e-8,
        observed: worst_row,
        passed: worst_acc >= 0.999 && worst_row < 1e-8,
        detail: format!("DLMC h=1e9 on Bernoulli presets: min acceptance {worst_acc} (≥ 0.999); max row error {worst_row:e}"),
    })
}

fn pas_gwg_equivalence() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for model in tiny_models(17)? {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let x = State::random(model.dim(), model.n_categories(), &mut rng);
        let mut a = ChainState::new(&model, x.clone(), 5)?;
        let mut b = ChainState::new(&model, x, 5)?;
        let gwg = SamplerConfig::new(SamplerKind::Gwg);
        let pas = SamplerConfig::new(SamplerKind::Pas).with_flips(1);
        for _ in 0..500 {
            let oa = step(&mut a, &model, &gwg)?;
            let ob = step(&mut b, &model, &pas)?;
            worst = worst.max((oa.accept_prob - ob.accept_prob).abs());
            if a.x() != b.x() {
                worst = worst.max(1.0);
            }
        }
    }
    Ok(Outcome::below(worst, 1e-12, "GWG vs PAS(L=1): same-seed chains, max acceptance-probability difference"))
}

/// The three enumerable targets used for chain exactness.
pub(crate) fn exactness_models() -> Result<Vec<(&'static str, Model)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut u = |n: usize, s: f64| -> Vec<f64> { (0..n).map(|_| rng.random_range(-s..s)).collect() };
    Ok(vec![
        ("bernoulli N=6 C=2", Bernoulli::new(6, 2, u(12, 1.0))?.into()),
        ("ising 2x3 C=2", IsingPotts::new(2, 3, 2, u(12, 0.8), 0.4)?.into()),
        ("potts N=4 C=3", IsingPotts::new(2, 2, 3, u(12, 0.8), 0.4)?.into()),
    ])
}

/// One configuration per sampler kind for the exactness runs.
pub(crate) fn exactness_samplers() -> Vec<SamplerConfig> {
    vec![
        SamplerConfig::new(SamplerKind::Rwm).with_flips(1),
        SamplerConfig::new(SamplerKind::BlockGibbs).with_block_size(2),
        SamplerConfig::new(SamplerKind::HammingBall).with_block_size(3),
        SamplerConfig::new(SamplerKind::Gwg),
        SamplerConfig::new(SamplerKind::Pas).with_flips(3),
        SamplerConfig::new(SamplerKind::Dmala).with_step(1.0),
        SamplerConfig::new(SamplerKind::Dlmcf).with_step(0.5),
        SamplerConfig::new(SamplerKind::Dlmc).with_step(1.0),
    ]
}

fn chain_exactness() -> Result<Outcome> {
    use rayon::prelude::*;
    let models = exactness_models()?;
    let samplers = exactness_samplers();
    let jobs: Vec<(usize, usize, u64)> = (0..models.len())
        .flat_map(|m| (0..samplers.len()).flat_map(move |s| (0..3u64).map(move |seed| (m, s, seed))))
        .collect();
    let tvs = jobs
        .par_iter()
        .map(|&(m, s, seed)| {
            let model = &models[m].1;
            let pi = enumerate_distribution(model, ENUMERATION_CAP)?;
            let mut chain = ChainState::random(model, 1000 + seed)?;
            run_chain(&mut chain, model, &samplers[s], 2_000, |_| {})?;
            let steps = 200_000;
            let mut counts = vec![0.0; pi.len()];
            run_chain(&mut chain, model, &samplers[s], steps, |x| counts[x.index()] += 1.0)?;
            counts.iter_mut().for_each(|c| *c /= steps as f64);
            Ok((m, s, tv_distance(&counts, pi.probs())))
        })
        .collect::<Result<Vec<_>>>()?;
    let &(m, s, worst) = tvs
        .iter()
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .expect("jobs exist");
    Ok(Outcome::below(
        worst,
        0.02,
        format!(
            "max TV over 8 kinds × 3 models × 3 seeds, 2e5 steps; worst: {} on {}",
            samplers[s].label(),
            models[m].0
        ),
    ))
}

fn tuner_targets() -> Result<Outcome> {
    let model = generate_params(&ShapeConfig::desk_preset("ising-high").expect("known"), 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    let mut all_converged = true;
    for (kind, target) in [(SamplerKind::Dlmc, 0.574), (SamplerKind::Rwm, 0.234)] {
        let r = tune(&SamplerConfig::new(kind), &model, target, 2000, &mut rng)?;
        worst = worst.max((r.trailing_acceptance - target).abs());
        all_converged &= r.status == TuneStatus::Converged;
        detail.push(format!(
            "{}: trailing {:.4} (target {target}), value {:?}",
            kind.name(),
            r.trailing_acceptance,
            r.config.tunable_value()
        ));
    }
    Ok(Outcome {
        tolerance: 0.05,
        observed: worst,
        passed: worst <= 0.05 && all_converged,
        detail: detail.join("; "),
    })
}

/// Desk-scale high-temperature Ising protocol: 10 chains × 2e4 steps,
/// tuned RWM, DMALA, DLMCf and DLMC with `g = √t`.
pub fn ordering_config() -> ExperimentConfig {
    ExperimentConfig {
        model: ModelSpec {
            scale: Scale::Desk,
            ..ModelSpec::preset("ising-high")
        },
        samplers: vec![
            SamplerConfig::new(SamplerKind::Rwm),
            SamplerConfig::new(SamplerKind::Dmala),
            SamplerConfig::new(SamplerKind::Dlmcf),
            SamplerConfig::new(SamplerKind::Dlmc),
        ],
        chains: 10,
        steps: 20_000,
        burn_in: 10_000,
        seed: 2024,
        tuning: TuningConfig {
            enabled: true,
            target_rate: None,
            adaptation_steps: 2000,
        },
        output: None,
        wall_clock: false,
    }
}

fn efficiency_ordering() -> Result<Outcome> {
    let config = ordering_config();
    let model = config.model.build()?;
    let result = run_with_model(&config, &model, rayon::current_num_threads())?;
    let med = |kind: &str| {
        median(
            &mut result
                .rows
                .iter()
                .filter(|r| r.sampler == kind)
                .map(|r| r.ess_per_eval)
                .collect::<Vec<_>>(),
        )
    };
    let (rwm, dmala, dlmcf, dlmc) = (med("rwm"), med("dmala"), med("dlmcf"), med("dlmc"));
    let ok = dlmc >= dmala && dmala >= rwm && dlmcf >= dmala;
    // observed: smallest margin among the required orderings, relative to DMALA
    let margin = (dlmc - dmala).min(dmala - rwm).min(dlmcf - dmala) / dmala;
    Ok(Outcome {
        tolerance: 0.0,
        observed: margin,
        passed: ok,
        detail: format!(
            "median ess_per_eval: dlmc {dlmc:.4e}, dlmcf {dlmcf:.4e}, dmala {dmala:.4e}, rwm {rwm:.4e}"
        ),
    })
}

fn determinism() -> Result<Outcome> {
    let config = ordering_config();
    let model = config.model.build()?;
    let a = run_with_model(&config, &model, rayon::current_num_threads())?;
    let b = run_with_model(&config, &model, 1)?;
    let same = a.csv()? == b.csv()? && a.summary_json()? == b.summary_json()?;
    Ok(Outcome {
        tolerance: 0.0,
        observed: if same { 0.0 } else { 1.0 },
        passed: same,
        detail: "desk-scale experiment run twice (parallel and single-threaded): CSV and JSON byte comparison".into(),
    })
}
