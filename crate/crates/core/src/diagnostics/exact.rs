use serde::{Deserialize, Serialize};

use crate::distribution::{kl_divergence, tv_distance};
use crate::error::{Error, Result};
use crate::model::{enumerate_distribution, EnergyModel, ENUMERATION_CAP};
use crate::state::State;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub tv_distance: f64,
    /// `KL(p̂ ‖ π)`
    pub kl_empirical_to_exact: f64,
    /// Largest per-site, per-category marginal error.
    pub marginal_max_error: f64,
    pub samples: u64,
}

/// Compares an empirical histogram over the enumerated state space (indexed
/// by [`State::index`]) with the exact target.
pub fn compare_counts<M: EnergyModel + ?Sized>(counts: &[u64], model: &M) -> Result<DistributionReport> {
    let pi = enumerate_distribution(model, ENUMERATION_CAP)?;
    if counts.len() != pi.len() {
        return Err(Error::Shape(format!(
            "{} counts for a state space of {}",
            counts.len(),
            pi.len()
        )));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyRun("no samples to compare".into()));
    }
    let p_hat: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let (n, c) = (model.dim(), model.n_categories());
    let mut marg_hat = vec![0.0; n * c];
    let mut marg_pi = vec![0.0; n * c];
    for (i, (&ph, &p)) in p_hat.iter().zip(pi.probs()).enumerate() {
        let x = State::from_index(i, n, c);
        for (site, &v) in x.values().iter().enumerate() {
            marg_hat[site * c + v] += ph;
            marg_pi[site * c + v] += p;
        }
    }
    let marginal_max_error = marg_hat
        .iter()
        .zip(&marg_pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(DistributionReport {
        tv_distance: tv_distance(&p_hat, pi.probs()),
        kl_empirical_to_exact: kl_divergence(&p_hat, pi.probs()).max(0.0),
        marginal_max_error,
        samples: total,
    })
}

pub fn compare_to_exact<M: EnergyModel + ?Sized>(samples: &[State], model: &M) -> Result<DistributionReport> {
    let size = crate::model::enumerate::state_space_size(model.dim(), model.n_categories(), ENUMERATION_CAP)?;
    let mut counts = vec![0u64; size];
    for x in samples {
        model.check_state(x)?;
        counts[x.index()] += 1;
    }
    compare_counts(&counts, model)
}
