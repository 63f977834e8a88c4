use crate::distribution::DenseDistribution;
use crate::error::{Error, Result};
use crate::model::EnergyModel;
use crate::state::State;

/// Largest state space the oracles enumerate by default.
pub const ENUMERATION_CAP: usize = 1 << 16;

pub(crate) fn state_space_size(dim: usize, n_categories: usize, cap: usize) -> Result<usize> {
    let size = (n_categories as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
    if size > cap as u128 {
        return Err(Error::Capacity {
            what: "state space",
            size,
            limit: cap as u128,
        });
    }
    Ok(size as usize)
}

/// Energies of every state, indexed by [`State::index`].
pub fn enumerate_energies<M: EnergyModel + ?Sized>(model: &M, cap: usize) -> Result<Vec<f64>> {
    let (n, c) = (model.dim(), model.n_categories());
    let size = state_space_size(n, c, cap)?;
    Ok((0..size)
        .map(|i| model.energy_of(State::from_index(i, n, c).values()))
        .collect())
}

/// Exact normalized target over the whole space (at most `cap` states).
pub fn enumerate_distribution<M: EnergyModel + ?Sized>(
    model: &M,
    cap: usize,
) -> Result<DenseDistribution> {
    let energies = enumerate_energies(model, cap)?;
    let neg: Vec<f64> = energies.iter().map(|e| -e).collect();
    DenseDistribution::from_log_weights(&neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Bernoulli, IsingPotts, Rbm};

    #[test]
    fn zero_bernoulli_is_uniform() {
        let m = Bernoulli::new(3, 2, vec![0.0; 6]).unwrap();
        let d = enumerate_distribution(&m, ENUMERATION_CAP).unwrap();
        assert!(d.probs().iter().all(|&p| (p - 0.125).abs() < 1e-15));
    }

    #[test]
    fn binary_bernoulli_factorizes_into_sigmoids() {
        // θ_n = (0, 1): P(x_n = 1) = e^{-1} / (1 + e^{-1}) = σ(−1).
        let m = Bernoulli::new(2, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let d = enumerate_distribution(&m, ENUMERATION_CAP).unwrap();
        let p1 = 1.0 / (1.0 + 1f64.exp());
        for idx in 0..4 {
            let s = State::from_index(idx, 2, 2);
            let want: f64 = s
                .values()
                .iter()
                .map(|&v| if v == 1 { p1 } else { 1.0 - p1 })
                .product();
            assert!((d.probs()[idx] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn capacity_error() {
        let m = Bernoulli::new(17, 2, vec![0.0; 34]).unwrap();
        assert!(matches!(
            enumerate_distribution(&m, ENUMERATION_CAP),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn argmax_is_min_energy() {
        let theta: Vec<f64> = (0..18).map(|i| ((i * 5) as f64).sin()).collect();
        let models: Vec<Box<dyn EnergyModel>> = vec![
            Box::new(IsingPotts::new(2, 3, 3, theta.clone(), 0.9).unwrap()),
            Box::new(Rbm::new(6, 3, 2, theta, vec![0.1, -0.2], (0..36).map(|i| (i as f64).cos()).collect()).unwrap()),
        ];
        for m in &models {
            let d = enumerate_distribution(m.as_ref(), ENUMERATION_CAP).unwrap();
            let sum: f64 = d.probs().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            let e = enumerate_energies(m.as_ref(), ENUMERATION_CAP).unwrap();
            let argmin = (0..e.len()).min_by(|&a, &b| e[a].total_cmp(&e[b])).unwrap();
            assert_eq!(d.argmax(), argmin);
        }
    }
}
