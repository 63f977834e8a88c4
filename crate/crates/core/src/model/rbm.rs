use crate::error::{Error, Result};
use crate::model::{check_len, sigmoid, softplus, EnergyModel};

/// Restricted Boltzmann machine with categorical visibles and binary hiddens,
/// hiddens summed out:
///
/// `f(v) = −Σ_n θ[n][v_n] − Σ_m softplus(β_m + Σ_n W[m][n][v_n])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rbm {
    n_visible: usize,
    n_categories: usize,
    n_hidden: usize,
    theta_vis: Vec<f64>,
    beta: Vec<f64>,
    weights: Vec<f64>,
}

impl Rbm {
    /// `theta_vis` is `N × C`, `beta` has length `M`, `weights` is `M × N × C`.
    pub fn new(
        n_visible: usize,
        n_categories: usize,
        n_hidden: usize,
        theta_vis: Vec<f64>,
        beta: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if n_visible == 0 || n_categories < 2 {
            return Err(Error::Shape(format!(
                "rbm needs N ≥ 1 and C ≥ 2, got N={n_visible}, C={n_categories}"
            )));
        }
        check_len("theta_vis", &theta_vis, n_visible * n_categories)?;
        check_len("beta", &beta, n_hidden)?;
        check_len("weights", &weights, n_hidden * n_visible * n_categories)?;
        Ok(Self {
            n_visible,
            n_categories,
            n_hidden,
            theta_vis,
            beta,
            weights,
        })
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }
    pub fn theta_vis(&self) -> &[f64] {
        &self.theta_vis
    }
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    fn w(&self, m: usize, n: usize, c: usize) -> f64 {
        self.weights[(m * self.n_visible + n) * self.n_categories + c]
    }

    /// Hidden pre-activations `β_m + Σ_n W[m][n][v_n]`.
    fn activations(&self, x: &[usize]) -> Vec<f64> {
        (0..self.n_hidden)
            .map(|m| {
                self.beta[m]
                    + x.iter()
                        .enumerate()
                        .map(|(n, &v)| self.w(m, n, v))
                        .sum::<f64>()
            })
            .collect()
    }

    fn fill_site(&self, x: &[usize], site: usize, act: &[f64], out: &mut [f64]) {
        let c = self.n_categories;
        let cur = x[site];
        let theta = &self.theta_vis[site * c..(site + 1) * c];
        for (j, o) in out.iter_mut().enumerate() {
            if j == cur {
                *o = 0.0;
                continue;
            }
            let mut d = theta[j] - theta[cur];
            for (m, &a) in act.iter().enumerate() {
                let shifted = a - self.w(m, site, cur) + self.w(m, site, j);
                d += softplus(shifted) - softplus(a);
            }
            *o = d;
        }
    }
}

impl EnergyModel for Rbm {
    fn dim(&self) -> usize {
        self.n_visible
    }

    fn n_categories(&self) -> usize {
        self.n_categories
    }

    fn energy_of(&self, x: &[usize]) -> f64 {
        let unary: f64 = x
            .iter()
            .enumerate()
            .map(|(n, &v)| self.theta_vis[n * self.n_categories + v])
            .sum();
        let hidden: f64 = self.activations(x).into_iter().map(softplus).sum();
        -unary - hidden
    }

    fn site_log_ratios(&self, x: &[usize], site: usize, out: &mut [f64]) {
        let act = self.activations(x);
        self.fill_site(x, site, &act, out);
    }

    fn all_log_ratios(&self, x: &[usize], out: &mut [f64]) {
        let act = self.activations(x);
        for (site, row) in out.chunks_exact_mut(self.n_categories).enumerate() {
            self.fill_site(x, site, &act, row);
        }
    }

    fn relaxed_energy(&self, z: &[f64]) -> f64 {
        let unary: f64 = z.iter().zip(&self.theta_vis).map(|(a, b)| a * b).sum();
        let nc = self.n_visible * self.n_categories;
        let hidden: f64 = (0..self.n_hidden)
            .map(|m| {
                let row = &self.weights[m * nc..(m + 1) * nc];
                softplus(self.beta[m] + row.iter().zip(z).map(|(a, b)| a * b).sum::<f64>())
            })
            .sum();
        -unary - hidden
    }

    fn relaxed_gradient(&self, x: &[usize], out: &mut [f64]) {
        let nc = self.n_visible * self.n_categories;
        for (o, t) in out.iter_mut().zip(&self.theta_vis) {
            *o = -t;
        }
        for (m, a) in self.activations(x).into_iter().enumerate() {
            let s = sigmoid(a);
            let row = &self.weights[m * nc..(m + 1) * nc];
            for (o, w) in out.iter_mut().zip(row) {
                *o -= s * w;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_support::*;
    use crate::state::State;

    fn random_rbm(n: usize, c: usize, m: usize, scale: f64) -> Rbm {
        let theta: Vec<f64> = (0..n * c).map(|i| (i as f64 * 1.7).sin()).collect();
        let beta: Vec<f64> = (0..m).map(|i| (i as f64 * 0.9).cos() * 0.5).collect();
        let w: Vec<f64> = (0..m * n * c).map(|i| (i as f64 * 0.61).sin() * scale).collect();
        Rbm::new(n, c, m, theta, beta, w).unwrap()
    }

    #[test]
    fn free_energy_matches_hidden_sum() {
        let rbm = random_rbm(3, 2, 2, 1.2);
        for idx in 0..8 {
            let v = State::from_index(idx, 3, 2);
            // E(v, h) = −Σθ − Σ β_m h_m − Σ h_m W[m][n][v_n]
            let mut z = 0.0;
            for h_bits in 0..4u32 {
                let mut e = 0.0;
                for n in 0..3 {
                    e -= rbm.theta_vis()[n * 2 + v.get(n)];
                }
                for m in 0..2 {
                    if h_bits >> m & 1 == 1 {
                        e -= rbm.beta()[m];
                        for n in 0..3 {
                            e -= rbm.w(m, n, v.get(n));
                        }
                    }
                }
                z += (-e).exp();
            }
            let got = (-rbm.energy_of(v.values())).exp();
            assert!((got - z).abs() <= 1e-10 * z, "{got} vs {z}");
        }
    }

    #[test]
    fn local_ratios_match_brute_force() {
        let rbm = random_rbm(5, 3, 4, 0.8);
        for idx in (0..243).step_by(5) {
            assert_exact_ratios(&rbm, &State::from_index(idx, 5, 3), 1e-10);
        }
    }

    #[test]
    fn relaxed_gradient_matches_finite_differences() {
        let rbm = random_rbm(6, 3, 5, 0.9);
        for idx in [0, 100, 728] {
            let x = State::from_index(idx, 6, 3);
            let fd = fd_gradient(&rbm, &x, 1e-5);
            let mut g = vec![0.0; 18];
            rbm.relaxed_gradient(x.values(), &mut g);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() <= 1e-5 * b.abs().max(1e-3), "{a} vs {b}");
            }
        }
    }
}
