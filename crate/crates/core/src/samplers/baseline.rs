use rand::seq::index::sample;
use rand::Rng;

use crate::dynamics::rows::sample_index;
use crate::error::{Error, Result};
use crate::model::{EnergyModel, ENUMERATION_CAP};
use crate::samplers::mh::{acceptance_probability, decide};
use crate::samplers::{ChainState, SamplerConfig, StepOutcome};

fn always(accepted: bool) -> StepOutcome {
    StepOutcome {
        accepted,
        accept_prob: 1.0,
    }
}

/// Uniform category different from `current`.
fn other_value<R: Rng + ?Sized>(current: usize, n_categories: usize, rng: &mut R) -> usize {
    let v = rng.random_range(0..n_categories - 1);
    if v >= current {
        v + 1
    } else {
        v
    }
}

/// Random-walk Metropolis: `U` distinct sites, each moved to a uniformly
/// chosen different category.
///
/// With `C = 2` every proposal flips exactly `U` bits, so an even `U`
/// preserves the parity of `Σx` and the chain is not irreducible.
pub fn step_rwm<M: EnergyModel + ?Sized>(
    chain: &mut ChainState,
    model: &M,
    config: &SamplerConfig,
) -> Result<StepOutcome> {
    let (n, c) = (model.dim(), model.n_categories());
    if c < 2 {
        return Ok(always(true));
    }
    let mut y = chain.x.clone();
    for site in sample(&mut chain.rng, n, config.flips().min(n)) {
        y.set(site, other_value(y.get(site), c, &mut chain.rng));
    }
    let log_pi_y = -model.energy_of(y.values());
    let a = acceptance_probability(chain.log_pi_x, log_pi_y, 0.0, 0.0)?;
    let accepted = decide(a, &mut chain.rng);
    if accepted {
        chain.move_to(y, log_pi_y, None);
    }
    Ok(StepOutcome {
        accepted,
        accept_prob: a,
    })
}

/// Exact conditional resampling of a random block of distinct sites.
pub fn step_block_gibbs<M: EnergyModel + ?Sized>(
    chain: &mut ChainState,
    model: &M,
    config: &SamplerConfig,
) -> Result<StepOutcome> {
    let (n, c) = (model.dim(), model.n_categories());
    let b = config.block_size().min(n);
    let size = (c as u128).pow(b as u32);
    if size > ENUMERATION_CAP as u128 {
        return Err(Error::Capacity {
            what: "block configurations",
            size,
            limit: ENUMERATION_CAP as u128,
        });
    }
    let sites = sample(&mut chain.rng, n, b).into_vec();
    let mut y = chain.x.clone();
    let energies: Vec<f64> = (0..size as usize)
        .map(|k| {
            let mut k = k;
            for &s in &sites {
                y.set(s, k % c);
                k /= c;
            }
            model.energy_of(y.values())
        })
        .collect();
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|e| (min - e).exp()).collect();
    let mut k = sample_index(&weights, &mut chain.rng);
    let f = energies[k];
    for &s in &sites {
        y.set(s, k % c);
        k /= c;
    }
    chain.move_to(y, -f, None);
    Ok(always(true))
}

/// Hamming-ball auxiliary-variable sampler, radius 1 within a random block:
/// draw `u` uniformly from the ball around `x`, then `x'` from `π` restricted
/// to the ball around `u`.
pub fn step_hamming_ball<M: EnergyModel + ?Sized>(
    chain: &mut ChainState,
    model: &M,
    config: &SamplerConfig,
) -> Result<StepOutcome> {
    let (n, c) = (model.dim(), model.n_categories());
    let b = config.block_size().min(n);
    let sites = sample(&mut chain.rng, n, b).into_vec();
    let ball = 1 + b * (c - 1);
    let mut u = chain.x.clone();
    let r = chain.rng.random_range(0..ball);
    if r > 0 {
        let s = sites[(r - 1) / (c - 1)];
        u.set(s, other_value(u.get(s), c, &mut chain.rng));
    }
    let mut log_w = Vec::with_capacity(ball);
    let mut moves = Vec::with_capacity(ball);
    log_w.push(0.0);
    moves.push(None);
    let mut ratios = vec![0.0; c];
    for &s in &sites {
        model.site_log_ratios(u.values(), s, &mut ratios);
        for (v, &l) in ratios.iter().enumerate() {
            if v != u.get(s) {
                log_w.push(l);
                moves.push(Some((s, v)));
            }
        }
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let mut y = u;
    if let Some((s, v)) = moves[sample_index(&weights, &mut chain.rng)] {
        y.set(s, v);
    }
    let log_pi_y = -model.energy_of(y.values());
    chain.move_to(y, log_pi_y, None);
    Ok(always(true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::tv_distance;
    use crate::model::{enumerate_distribution, IsingPotts};
    use crate::samplers::test_support::chain_tv;
    use crate::samplers::{step, SamplerKind};

    fn ising() -> IsingPotts {
        let theta: Vec<f64> = (0..12).map(|i| 0.6 * ((i * 13) as f64).cos()).collect();
        IsingPotts::new(2, 3, 2, theta, 0.4).unwrap()
    }

    #[test]
    fn full_block_gibbs_draws_exact_samples() {
        let m = ising();
        let pi = enumerate_distribution(&m, ENUMERATION_CAP).unwrap();
        let config = SamplerConfig::new(SamplerKind::BlockGibbs).with_block_size(6);
        let mut chain = ChainState::random(&m, 1).unwrap();
        let n = 100_000;
        let mut counts = vec![0.0; 64];
        for _ in 0..n {
            step(&mut chain, &m, &config).unwrap();
            counts[chain.x().index()] += 1.0 / n as f64;
        }
        assert!(tv_distance(&counts, pi.probs()) < 0.01);
    }

    #[test]
    fn block_gibbs_over_cap_is_an_error() {
        let m = crate::model::Bernoulli::new(20, 2, vec![0.0; 40]).unwrap();
        let config = SamplerConfig::new(SamplerKind::BlockGibbs).with_block_size(17);
        let mut chain = ChainState::random(&m, 1).unwrap();
        assert!(matches!(step(&mut chain, &m, &config), Err(Error::Capacity { .. })));
    }

    #[test]
    fn baselines_are_exact() {
        let m = ising();
        for (i, config) in [
            SamplerConfig::new(SamplerKind::Rwm).with_flips(3),
            SamplerConfig::new(SamplerKind::BlockGibbs),
            SamplerConfig::new(SamplerKind::HammingBall).with_block_size(3),
        ]
        .iter()
        .enumerate()
        {
            let tv = chain_tv(&m, config, 10 + i as u64, 1000, 200_000);
            assert!(tv < 0.02, "{config:?}: {tv}");
        }
    }
}
