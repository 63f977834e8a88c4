use crate::dynamics::rows::{dmala_into, euler_into, interpolated_into, sample_index};
use crate::dynamics::{TransitionRow, WeightFunction};
use crate::error::{Error, Result};
use crate::model::{EnergyModel, LogRatioTable};
use crate::samplers::mh::{acceptance_probability, decide};
use crate::samplers::{sweep_at, ChainState, SamplerConfig, SamplerKind, StepOutcome};
use crate::state::State;

#[derive(Debug, Clone, Copy)]
enum RowRule {
    Interpolated { h: f64, g: WeightFunction },
    Euler { h: f64, g: WeightFunction },
    Dmala { alpha: f64, g: WeightFunction },
}

impl RowRule {
    fn from_config(config: &SamplerConfig) -> Result<Self> {
        let (step, g) = (config.step(), config.weight);
        if !(step >= 0.0) {
            return Err(Error::StepSize(format!("{}: step {step}", config.kind.name())));
        }
        Ok(match config.kind {
            SamplerKind::Dlmc => RowRule::Interpolated { h: step, g },
            SamplerKind::Dlmcf => RowRule::Euler { h: step, g },
            SamplerKind::Dmala => RowRule::Dmala { alpha: step, g },
            k => return Err(Error::Config(vec![format!("{} is not a factorized sampler", k.name())])),
        })
    }

    /// Fills `out`; returns whether the row was clamped.
    fn fill(self, lr: &[f64], current: usize, out: &mut [f64]) -> bool {
        match self {
            RowRule::Interpolated { h, g } => {
                interpolated_into(lr, |j| g.log_g(lr[j]), current, h, out);
                false
            }
            RowRule::Euler { h, g } => euler_into(|j| g.log_g(lr[j]).exp(), current, h, out),
            RowRule::Dmala { alpha, g } => {
                if alpha == 0.0 {
                    out.iter_mut().for_each(|p| *p = 0.0);
                    out[current] = 1.0;
                } else {
                    dmala_into(lr, current, alpha, g, out);
                }
                false
            }
        }
    }
}

/// Per-site proposal rows of a factorized sampler at `x`.
pub fn proposal_rows<M: EnergyModel + ?Sized>(
    model: &M,
    x: &State,
    config: &SamplerConfig,
) -> Result<Vec<TransitionRow>> {
    model.check_state(x)?;
    let rule = RowRule::from_config(config)?;
    let table = sweep_at(model, x, config.ratio_source);
    Ok((0..model.dim())
        .map(|n| {
            let mut probs = vec![0.0; model.n_categories()];
            rule.fill(table.row(n), x.get(n), &mut probs);
            TransitionRow { probs }
        })
        .collect())
}

/// Discrete Langevin Monte Carlo: per-site interpolated transition rows for
/// simulation time `h`, MH-corrected.
pub fn step_dlmc<M: EnergyModel + ?Sized>(
    chain: &mut ChainState,
    model: &M,
    config: &SamplerConfig,
) -> Result<StepOutcome> {
    factorized_step(chain, model, config)
}

/// Forward-Euler rows `I + hQ` with the clamped diagonal.
pub fn step_dlmcf<M: EnergyModel + ?Sized>(
    chain: &mut ChainState,
    model: &M,
    config: &SamplerConfig,
) -> Result<StepOutcome> {
    factorized_step(chain, model, config)
}

/// Discrete Metropolis-adjusted Langevin with step `α`.
pub fn step_dmala<M: EnergyModel + ?Sized>(
    chain: &mut ChainState,
    model: &M,
    config: &SamplerConfig,
) -> Result<StepOutcome> {
    factorized_step(chain, model, config)
}

fn factorized_step<M: EnergyModel + ?Sized>(
    chain: &mut ChainState,
    model: &M,
    config: &SamplerConfig,
) -> Result<StepOutcome> {
    let rule = RowRule::from_config(config)?;
    let source = config.ratio_source;
    let tx = chain.take_sweep(model, source);
    let mut row = vec![0.0; model.n_categories()];
    let mut y = chain.x.clone();
    let mut log_fwd = 0.0;
    let mut changed = false;
    for n in 0..model.dim() {
        let xn = chain.x.get(n);
        if rule.fill(tx.row(n), xn, &mut row) {
            chain.record.clamp_events += 1;
        }
        let yn = sample_index(&row, &mut chain.rng);
        log_fwd += row[yn].ln();
        if yn != xn {
            y.set(n, yn);
            changed = true;
        }
    }
    if !changed {
        chain.sweep = Some((source, tx));
        return Ok(StepOutcome {
            accepted: true,
            accept_prob: 1.0,
        });
    }
    let ty = sweep_at(model, &y, source);
    let log_rev = reverse_log_prob(rule, &ty, &y, &chain.x, &mut row);
    let log_pi_y = -model.energy_of(y.values());
    let a = acceptance_probability(chain.log_pi_x, log_pi_y, log_fwd, log_rev)?;
    let accepted = decide(a, &mut chain.rng);
    if accepted {
        chain.move_to(y, log_pi_y, Some((source, ty)));
    } else {
        chain.sweep = Some((source, tx));
    }
    Ok(StepOutcome {
        accepted,
        accept_prob: a,
    })
}

fn reverse_log_prob(rule: RowRule, ty: &LogRatioTable, y: &State, x: &State, row: &mut [f64]) -> f64 {
    (0..y.dim())
        .map(|n| {
            rule.fill(ty.row(n), y.get(n), row);
            row[x.get(n)].ln()
        })
        .sum()
}
