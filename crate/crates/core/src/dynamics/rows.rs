use rand::Rng;

use crate::dynamics::{RateRow, WeightFunction};
use crate::model::LocalRatios;

/// Stationary masses below this are treated as unreachable.
pub const NU_FLOOR: f64 = 1e-300;

/// One row of a per-site transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow {
    pub probs: Vec<f64>,
}

impl TransitionRow {
    pub fn one_hot(len: usize, at: usize) -> Self {
        let mut probs = vec![0.0; len];
        probs[at] = 1.0;
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    #[inline]
    pub fn log_prob(&self, j: usize) -> f64 {
        self.probs[j].ln()
    }

    /// Inverse-CDF draw; zero-mass entries are never returned.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.probs, rng)
    }
}

pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in weights.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Per-site conditional `ν(j) ∝ π(x_{\n}, j)`, i.e. `softmax(log_ratios)`.
pub fn stationary_row(log_ratios: &[f64]) -> Vec<f64> {
    let max = log_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_ratios.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// Interpolated approximation of row `current` of `exp(Q_n h)`:
///
/// * `j ≠ i`: `ν(j) (1 − e^{−h Q(i,j)/ν(j)})`
/// * `j = i`: `ν(i) + Σ_{k≠i} ν(k) e^{−h Q(i,k)/ν(k)}`
///
/// Exact for two categories; matches `exp(Q h)` at `h = 0`, `h → ∞` and in
/// its derivative at 0 for any `C`.
pub fn interpolated_row(rate: &RateRow, log_ratios: &LocalRatios, current: usize, h: f64) -> TransitionRow {
    let mut probs = vec![0.0; log_ratios.log_ratios.len()];
    interpolated_into(&log_ratios.log_ratios, |j| rate.log_rates[j], current, h, &mut probs);
    TransitionRow { probs }
}

pub(crate) fn interpolated_into(
    lr: &[f64],
    log_rate: impl Fn(usize) -> f64,
    current: usize,
    h: f64,
    probs: &mut [f64],
) {
    let max = lr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + lr.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    let log_floor = NU_FLOOR.ln();

    let mut diag = 0.0;
    let mut moved = false;
    for j in 0..lr.len() {
        probs[j] = 0.0;
        let log_nu = lr[j] - log_z;
        let nu = log_nu.exp();
        if j == current {
            diag += nu;
            continue;
        }
        if log_nu < log_floor {
            continue;
        }
        // h Q(i,j) / ν(j), in log space so small ν cannot overflow the ratio
        let a = h * (log_rate(j) - log_nu).exp();
        let stay = (-a).exp();
        let go = -(-a).exp_m1();
        probs[j] = nu * go;
        diag += nu * stay;
        moved |= probs[j] > 0.0;
    }
    probs[current] = if moved { diag } else { 1.0 };
}

/// Forward-Euler row with the clamp flag.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerRow {
    pub row: TransitionRow,
    /// The diagonal `1 − hΣQ` went negative and was clamped to 0.
    pub clamped: bool,
}

/// `I + hQ` restricted to row `current`. A negative diagonal is clamped to 0
/// and the row renormalized.
pub fn euler_row(rate: &RateRow, current: usize, h: f64) -> EulerRow {
    let mut probs = vec![0.0; rate.rates.len()];
    let clamped = euler_into(|j| rate.rates[j], current, h, &mut probs);
    EulerRow {
        row: TransitionRow { probs },
        clamped,
    }
}

pub(crate) fn euler_into(rate: impl Fn(usize) -> f64, current: usize, h: f64, probs: &mut [f64]) -> bool {
    let mut off = 0.0;
    for (j, p) in probs.iter_mut().enumerate() {
        *p = if j == current { 0.0 } else { h * rate(j) };
        off += *p;
    }
    let diag = 1.0 - off;
    if diag >= 0.0 {
        probs[current] = diag;
        return false;
    }
    probs.iter_mut().for_each(|p| *p /= off);
    true
}

/// DMALA proposal row (`g = √t`): mass 1 on `current`, `exp(½ r_j − 1/(2α))`
/// elsewhere, normalized.
pub fn dmala_row(log_ratios: &LocalRatios, current: usize, alpha: f64) -> TransitionRow {
    dmala_row_weighted(log_ratios, current, alpha, WeightFunction::Sqrt)
}

/// DMALA row for an arbitrary weight: off-diagonal mass `e^{−1/(2α)} g(t_j)`,
/// diagonal mass 1.
pub fn dmala_row_weighted(
    log_ratios: &LocalRatios,
    current: usize,
    alpha: f64,
    g: WeightFunction,
) -> TransitionRow {
    let mut probs = vec![0.0; log_ratios.log_ratios.len()];
    dmala_into(&log_ratios.log_ratios, current, alpha, g, &mut probs);
    TransitionRow { probs }
}

pub(crate) fn dmala_into(lr: &[f64], current: usize, alpha: f64, g: WeightFunction, probs: &mut [f64]) {
    let log_h = -1.0 / (2.0 * alpha);
    for (j, p) in probs.iter_mut().enumerate() {
        *p = if j == current { 0.0 } else { log_h + g.log_g(lr[j]) };
    }
    let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for p in probs.iter_mut() {
        *p = (*p - max).exp();
        z += *p;
    }
    probs.iter_mut().for_each(|p| *p /= z);
}
