use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_TRACE_LEN: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssReport {
    pub ess: f64,
    /// `ess / energy_evals`, once the cost is attached.
    pub ess_per_eval: Option<f64>,
    pub ess_per_second: Option<f64>,
    /// Last lag included in the autocorrelation sum.
    pub autocorr_cutoff_lag: usize,
    pub statistic: String,
    /// The trace had zero variance.
    pub degenerate: bool,
}

impl EssReport {
    /// Attaches the sampling cost; `seconds` is omitted when not measured.
    pub fn with_cost(mut self, energy_evals: u64, seconds: Option<f64>) -> Self {
        self.ess_per_eval = Some(if energy_evals == 0 {
            0.0
        } else {
            self.ess / energy_evals as f64
        });
        self.ess_per_second = seconds.map(|s| if s > 0.0 { self.ess / s } else { f64::INFINITY });
        self
    }
}

/// Biased autocorrelations `ρ_0..ρ_{L−1}` via zero-padded FFT.
fn autocorrelation(trace: &[f64]) -> Option<Vec<f64>> {
    let n = trace.len();
    let mean = trace.iter().sum::<f64>() / n as f64;
    let padded = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = trace
        .iter()
        .map(|&v| Complex::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(padded)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(padded).process(&mut buf);
    buf.iter_mut().for_each(|z| *z = Complex::new(z.norm_sqr(), 0.0));
    planner.plan_fft_inverse(padded).process(&mut buf);
    let c0 = buf[0].re;
    if !(c0 > 0.0) {
        return None;
    }
    Some(buf[..n].iter().map(|z| z.re / c0).collect())
}

/// Effective sample size of a scalar trace,
/// `L / (1 + 2 Σ_k ρ_k)`, truncated by Geyer's initial monotone positive
/// sequence rule and capped at `L`.
pub fn ess(trace: &[f64]) -> Result<EssReport> {
    let n = trace.len();
    if n < MIN_TRACE_LEN {
        return Err(Error::Domain(format!(
            "trace of length {n} is shorter than {MIN_TRACE_LEN}"
        )));
    }
    if trace.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("trace contains non-finite values".into()));
    }
    let constant = trace.iter().all(|&v| v == trace[0]);
    let rho = if constant { None } else { autocorrelation(trace) };
    let Some(rho) = rho else {
        return Ok(EssReport {
            ess: 0.0,
            ess_per_eval: None,
            ess_per_second: None,
            autocorr_cutoff_lag: 0,
            statistic: "energy".into(),
            degenerate: true,
        });
    };

    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut cutoff = 0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = rho[2 * m] + rho[2 * m + 1];
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        cutoff = 2 * m + 1;
        m += 1;
    }
    let tau = 2.0 * sum - 1.0;
    let ess = if tau > 1.0 { n as f64 / tau } else { n as f64 };
    Ok(EssReport {
        ess,
        ess_per_eval: None,
        ess_per_second: None,
        autocorr_cutoff_lag: cutoff,
        statistic: "energy".into(),
        degenerate: false,
    })
}
