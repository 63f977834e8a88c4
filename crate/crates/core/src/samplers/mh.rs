use rand::Rng;

use crate::error::{Error, Result};

/// `min{1, π(y) q(y, x) / (π(x) q(x, y))}` from log quantities.
///
/// `log_pi_y` or `log_q_yx` equal to `−∞` gives 0. Any NaN, an infinite
/// current-state term, or a `+∞` anywhere is a domain error.
pub fn acceptance_probability(log_pi_x: f64, log_pi_y: f64, log_q_xy: f64, log_q_yx: f64) -> Result<f64> {
    let all = [log_pi_x, log_pi_y, log_q_xy, log_q_yx];
    if all.iter().any(|v| v.is_nan() || *v == f64::INFINITY) || !log_pi_x.is_finite() || !log_q_xy.is_finite() {
        return Err(Error::Domain(format!(
            "invalid MH inputs: log π(x) = {log_pi_x}, log π(y) = {log_pi_y}, log q(x,y) = {log_q_xy}, log q(y,x) = {log_q_yx}"
        )));
    }
    if log_pi_y == f64::NEG_INFINITY || log_q_yx == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let log_a = (log_pi_y + log_q_yx) - (log_pi_x + log_q_xy);
    Ok(log_a.min(0.0).exp())
}

/// Metropolis–Hastings test; consumes one uniform.
pub fn mh_accept<R: Rng + ?Sized>(
    log_pi_x: f64,
    log_pi_y: f64,
    log_q_xy: f64,
    log_q_yx: f64,
    rng: &mut R,
) -> Result<bool> {
    Ok(decide(acceptance_probability(log_pi_x, log_pi_y, log_q_xy, log_q_yx)?, rng))
}

pub(crate) fn decide<R: Rng + ?Sized>(accept_prob: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < accept_prob
}
