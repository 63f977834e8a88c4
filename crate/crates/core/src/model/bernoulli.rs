use crate::error::{Error, Result};
use crate::model::{check_len, EnergyModel};

/// Independent categorical sites, `f(x) = Σ_n θ[n][x_n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bernoulli {
    dim: usize,
    n_categories: usize,
    theta: Vec<f64>,
}

impl Bernoulli {
    /// `theta` is row-major `N × C`.
    pub fn new(dim: usize, n_categories: usize, theta: Vec<f64>) -> Result<Self> {
        if dim == 0 || n_categories < 2 {
            return Err(Error::Shape(format!(
                "bernoulli needs N ≥ 1 and C ≥ 2, got N={dim}, C={n_categories}"
            )));
        }
        check_len("theta", &theta, dim * n_categories)?;
        Ok(Self {
            dim,
            n_categories,
            theta,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    #[inline]
    fn potential(&self, site: usize) -> &[f64] {
        &self.theta[site * self.n_categories..(site + 1) * self.n_categories]
    }

    /// Exact per-site marginal `P(x_n = j)`.
    pub fn marginal(&self, site: usize) -> Vec<f64> {
        let p = self.potential(site);
        let min = p.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = p.iter().map(|t| (min - t).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|v| v / z).collect()
    }
}

impl EnergyModel for Bernoulli {
    fn dim(&self) -> usize {
        self.dim
    }

    fn n_categories(&self) -> usize {
        self.n_categories
    }

    fn energy_of(&self, x: &[usize]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(n, &v)| self.theta[n * self.n_categories + v])
            .sum()
    }

    fn site_log_ratios(&self, x: &[usize], site: usize, out: &mut [f64]) {
        let p = self.potential(site);
        let cur = p[x[site]];
        for (o, t) in out.iter_mut().zip(p) {
            *o = cur - t;
        }
        out[x[site]] = 0.0;
    }

    fn relaxed_energy(&self, z: &[f64]) -> f64 {
        z.iter().zip(&self.theta).map(|(a, b)| a * b).sum()
    }

    fn relaxed_gradient(&self, _x: &[usize], out: &mut [f64]) {
        out.copy_from_slice(&self.theta);
    }
}
