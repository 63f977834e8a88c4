use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::dynamics::rows::sample_index;
use crate::dynamics::WeightFunction;
use crate::error::{Error, Result};
use crate::model::EnergyModel;
use crate::state::State;

/// Off-diagonal rates of the full generator at `x`, flattened as
/// `site * C + value` (zero on each site's current value).
pub fn jump_rates<M: EnergyModel + ?Sized>(model: &M, x: &State, g: WeightFunction) -> Result<Vec<f64>> {
    model.check_state(x)?;
    let c = model.n_categories();
    let mut rates = vec![0.0; model.dim() * c];
    let mut row = vec![0.0; c];
    for site in 0..model.dim() {
        model.site_log_ratios(x.values(), site, &mut row);
        let current = x.get(site);
        for (j, &l) in row.iter().enumerate() {
            if j != current {
                rates[site * c + j] = g.log_g(l).exp();
            }
        }
    }
    Ok(rates)
}

/// The first transition out of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstJump {
    pub holding_time: f64,
    pub site: usize,
    pub value: usize,
    /// Total exit rate `−q_xx`.
    pub exit_rate: f64,
}

/// Samples the first jump out of `x`; `None` when `x` is absorbing.
pub fn first_jump<M: EnergyModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    x: &State,
    g: WeightFunction,
    rng: &mut R,
) -> Result<Option<FirstJump>> {
    let rates = jump_rates(model, x, g)?;
    let exit_rate: f64 = rates.iter().sum();
    if !(exit_rate > 0.0) {
        return Ok(None);
    }
    if !exit_rate.is_finite() {
        return Err(Error::Domain(format!("exit rate {exit_rate} at {x:?}")));
    }
    let holding_time = Exp::new(exit_rate)
        .map_err(|e| Error::Domain(e.to_string()))?
        .sample(rng);
    let k = sample_index(&rates, rng);
    let c = model.n_categories();
    Ok(Some(FirstJump {
        holding_time,
        site: k / c,
        value: k % c,
        exit_rate,
    }))
}

/// Piecewise-constant CTMC path on `[0, t_end]`.
#[derive(Debug, Clone)]
pub struct GillespiePath {
    /// `(arrival time, state)`; the first entry is `(0, x0)`.
    pub jumps: Vec<(f64, State)>,
    pub t_end: f64,
}

impl GillespiePath {
    /// State occupied at time `t`.
    pub fn state_at(&self, t: f64) -> &State {
        let k = self.jumps.partition_point(|(s, _)| *s <= t);
        &self.jumps[k.max(1) - 1].1
    }

    pub fn final_state(&self) -> &State {
        &self.jumps.last().expect("path has a start").1
    }
}

/// Exact simulation of the dynamics from `x0` up to `t_end`.
pub fn gillespie_path<M: EnergyModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    x0: &State,
    t_end: f64,
    g: WeightFunction,
    rng: &mut R,
) -> Result<GillespiePath> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::Domain(format!("t_end must be positive, got {t_end}")));
    }
    let mut jumps = vec![(0.0, x0.clone())];
    let mut t = 0.0;
    let mut x = x0.clone();
    while let Some(jump) = first_jump(model, &x, g, rng)? {
        t += jump.holding_time;
        if t > t_end {
            break;
        }
        x.set(jump.site, jump.value);
        jumps.push((t, x.clone()));
    }
    Ok(GillespiePath { jumps, t_end })
}
