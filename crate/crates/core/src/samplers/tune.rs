use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EnergyModel;
use crate::samplers::{step, ChainState, SamplerConfig};

/// Trailing window over which the achieved acceptance is measured.
pub const TUNE_WINDOW: usize = 1000;

/// Gain `c` of the schedule `γ_k = c / k^0.6`.
const GAIN: f64 = 1.0;
const DECAY: f64 = 0.6;
const TOLERANCE: f64 = 0.05;
const STEP_BOUNDS: (f64, f64) = (1e-4, 1e4);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TuneStatus {
    /// Trailing acceptance within ±0.05 of the target.
    Converged,
    /// The parameter ended on a bound with acceptance still off target.
    Saturated,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub config: SamplerConfig,
    pub status: TuneStatus,
    /// Mean MH acceptance probability over the last [`TUNE_WINDOW`] steps.
    pub trailing_acceptance: f64,
    pub history: Vec<f64>,
}

/// Robbins–Monro adaptation of the kind's tunable parameter on the log scale:
/// `log θ ← log θ + γ_k (a_k − target)` with `a_k` the MH acceptance
/// probability of step `k`. Integer parameters follow a continuous surrogate
/// rounded to the nearest value in `[1, N]`.
pub fn tune<M: EnergyModel + ?Sized, R: RngCore + ?Sized>(
    config: &SamplerConfig,
    model: &M,
    target_rate: f64,
    adaptation_steps: usize,
    rng: &mut R,
) -> Result<TuneReport> {
    if !(target_rate > 0.0 && target_rate < 1.0) {
        return Err(Error::Config(vec![format!("target rate {target_rate} must lie in (0, 1)")]));
    }
    let Some(initial) = config.tunable_value() else {
        return Err(Error::Config(vec![format!(
            "{} has no tunable parameter",
            config.kind.name()
        )]));
    };
    let integer = config.kind.uses_flips();
    let (lo, hi) = if integer {
        (0.0, (model.dim().max(1) as f64).ln())
    } else {
        (STEP_BOUNDS.0.ln(), STEP_BOUNDS.1.ln())
    };
    let apply = |log_theta: f64, c: &mut SamplerConfig| {
        if integer {
            c.flips = Some((log_theta.exp().round() as usize).clamp(1, model.dim().max(1)));
        } else {
            c.step = Some(log_theta.exp());
        }
    };

    let mut current = config.clone();
    let mut log_theta = initial.ln().clamp(lo, hi);
    let mut chain = ChainState::random(model, rng.random())?;
    let mut probs = Vec::with_capacity(adaptation_steps);
    let mut history = Vec::with_capacity(adaptation_steps);
    for k in 1..=adaptation_steps {
        apply(log_theta, &mut current);
        let a = step(&mut chain, model, &current)?.accept_prob;
        probs.push(a);
        let gamma = GAIN / (k as f64).powf(DECAY);
        log_theta = (log_theta + gamma * (a - target_rate)).clamp(lo, hi);
        history.push(log_theta.exp());
    }
    apply(log_theta, &mut current);

    let window = &probs[probs.len().saturating_sub(TUNE_WINDOW)..];
    let trailing = if window.is_empty() {
        f64::NAN
    } else {
        window.iter().sum::<f64>() / window.len() as f64
    };
    let status = if (trailing - target_rate).abs() <= TOLERANCE {
        TuneStatus::Converged
    } else if log_theta <= lo || log_theta >= hi {
        TuneStatus::Saturated
    } else {
        TuneStatus::Failed
    };
    Ok(TuneReport {
        config: current,
        status,
        trailing_acceptance: trailing,
        history,
    })
}
