use rand::Rng;

use crate::dynamics::WeightFunction;
use crate::error::Result;
use crate::model::{EnergyModel, LogRatioTable};
use crate::samplers::mh::{acceptance_probability, decide};
use crate::samplers::{sweep_at, ChainState, SamplerConfig, StepOutcome};
use crate::state::State;

/// Categorical law over all `N(C − 1)` single-site moves from `x`, with
/// logits `log g(π(y)/π(x))`. Moves are indexed `site * C + value`.
#[derive(Debug, Clone)]
pub struct MoveLaw {
    logits: Vec<f64>,
    log_z: f64,
    n_categories: usize,
}

impl MoveLaw {
    pub fn new(x: &State, table: &LogRatioTable, g: WeightFunction) -> Self {
        let c = table.n_categories();
        let mut logits = vec![f64::NEG_INFINITY; table.as_slice().len()];
        for (site, &xn) in x.values().iter().enumerate() {
            for (j, &l) in table.row(site).iter().enumerate() {
                if j != xn {
                    logits[site * c + j] = g.log_g(l);
                }
            }
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        Self {
            logits,
            log_z,
            n_categories: c,
        }
    }

    pub fn log_prob(&self, site: usize, value: usize) -> f64 {
        self.logits[site * self.n_categories + value] - self.log_z
    }

    pub fn probs(&self) -> Vec<f64> {
        self.logits.iter().map(|l| (l - self.log_z).exp()).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let u = rng.random::<f64>();
        let mut acc = 0.0;
        let mut last = 0;
        for (k, &l) in self.logits.iter().enumerate() {
            if l == f64::NEG_INFINITY {
                continue;
            }
            acc += (l - self.log_z).exp();
            last = k;
            if u < acc {
                break;
            }
        }
        (last / self.n_categories, last % self.n_categories)
    }
}

/// Locally balanced single-flip proposal over the 1-Hamming ball.
pub fn step_gwg<M: EnergyModel + ?Sized>(
    chain: &mut ChainState,
    model: &M,
    config: &SamplerConfig,
) -> Result<StepOutcome> {
    path_step(chain, model, config, 1)
}

/// Path auxiliary sampler: the first `L = flips` jumps of the dynamics,
/// corrected on the ratio of reverse to forward path probabilities.
pub fn step_pas<M: EnergyModel + ?Sized>(
    chain: &mut ChainState,
    model: &M,
    config: &SamplerConfig,
) -> Result<StepOutcome> {
    path_step(chain, model, config, config.flips())
}

fn path_step<M: EnergyModel + ?Sized>(
    chain: &mut ChainState,
    model: &M,
    config: &SamplerConfig,
    length: usize,
) -> Result<StepOutcome> {
    let source = config.ratio_source;
    let g = config.weight;
    let t0 = chain.take_sweep(model, source);
    let mut law = MoveLaw::new(&chain.x, &t0, g);
    let mut y = chain.x.clone();
    let mut table = t0.clone();
    let (mut log_fwd, mut log_rev) = (0.0, 0.0);
    for _ in 0..length {
        let (site, value) = law.sample(&mut chain.rng);
        let back = y.get(site);
        log_fwd += law.log_prob(site, value);
        y.set(site, value);
        table = sweep_at(model, &y, source);
        law = MoveLaw::new(&y, &table, g);
        log_rev += law.log_prob(site, back);
    }
    let log_pi_y = -model.energy_of(y.values());
    let a = acceptance_probability(chain.log_pi_x, log_pi_y, log_fwd, log_rev)?;
    let accepted = decide(a, &mut chain.rng);
    if accepted {
        chain.move_to(y, log_pi_y, Some((source, table)));
    } else {
        chain.sweep = Some((source, t0));
    }
    Ok(StepOutcome {
        accepted,
        accept_prob: a,
    })
}
