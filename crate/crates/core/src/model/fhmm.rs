use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{check_finite, check_len, log_sum_exp, EnergyModel};

/// Factorial HMM posterior over hidden chains given observations `y`.
///
/// `K` independent Markov chains of length `L` over `C` categories; site
/// `l * K + k` is chain `k` at time `l`. The energy is
/// `−log p(x) − log p(y | x)` with the Gaussian normalizer dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Fhmm {
    length: usize,
    factors: usize,
    n_categories: usize,
    init_logits: Vec<f64>,
    transition_logits: Vec<f64>,
    weights: Vec<f64>,
    bias: f64,
    sigma: f64,
    observations: Vec<f64>,
    log_init: Vec<f64>,
    log_trans: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FhmmShape {
    pub length: usize,
    pub factors: usize,
    pub n_categories: usize,
}

impl Fhmm {
    /// `init_logits` is `K × C`, `transition_logits` is `K × C × C` (from, to),
    /// `weights` is `K × C`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        shape: FhmmShape,
        init_logits: Vec<f64>,
        transition_logits: Vec<f64>,
        weights: Vec<f64>,
        bias: f64,
        sigma: f64,
        observations: Vec<f64>,
    ) -> Result<Self> {
        let FhmmShape {
            length,
            factors,
            n_categories: c,
        } = shape;
        if length == 0 || factors == 0 || c < 2 {
            return Err(Error::Shape(format!(
                "fhmm needs L, K ≥ 1 and C ≥ 2, got L={length}, K={factors}, C={c}"
            )));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Shape(format!("sigma must be positive, got {sigma}")));
        }
        if !bias.is_finite() {
            return Err(Error::Shape("bias is not finite".into()));
        }
        check_len("init_logits", &init_logits, factors * c)?;
        check_len("transition_logits", &transition_logits, factors * c * c)?;
        check_len("weights", &weights, factors * c)?;
        check_len("observations", &observations, length)?;
        let log_init = log_softmax_rows(&init_logits, c);
        let log_trans = log_softmax_rows(&transition_logits, c);
        Ok(Self {
            length,
            factors,
            n_categories: c,
            init_logits,
            transition_logits,
            weights,
            bias,
            sigma,
            observations,
            log_init,
            log_trans,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }
    pub fn factors(&self) -> usize {
        self.factors
    }
    pub fn init_logits(&self) -> &[f64] {
        &self.init_logits
    }
    pub fn transition_logits(&self) -> &[f64] {
        &self.transition_logits
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn bias(&self) -> f64 {
        self.bias
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn with_observations(mut self, observations: Vec<f64>) -> Result<Self> {
        check_len("observations", &observations, self.length)?;
        self.observations = observations;
        Ok(self)
    }

    /// Normalized initial probabilities for chain `k`.
    pub fn init_probs(&self, k: usize) -> Vec<f64> {
        let c = self.n_categories;
        self.log_init[k * c..(k + 1) * c].iter().map(|v| v.exp()).collect()
    }

    /// Normalized transition row `p(x_l = · | x_{l−1} = from)` for chain `k`.
    pub fn transition_probs(&self, k: usize, from: usize) -> Vec<f64> {
        let c = self.n_categories;
        let start = (k * c + from) * c;
        self.log_trans[start..start + c].iter().map(|v| v.exp()).collect()
    }

    #[inline]
    fn log_init(&self, k: usize, v: usize) -> f64 {
        self.log_init[k * self.n_categories + v]
    }

    #[inline]
    fn log_trans(&self, k: usize, from: usize, to: usize) -> f64 {
        let c = self.n_categories;
        self.log_trans[(k * c + from) * c + to]
    }

    #[inline]
    fn weight(&self, k: usize, v: usize) -> f64 {
        self.weights[k * self.n_categories + v]
    }

    fn means(&self, x: &[usize]) -> Vec<f64> {
        let k = self.factors;
        (0..self.length)
            .map(|l| {
                self.bias
                    + (0..k)
                        .map(|f| self.weight(f, x[l * k + f]))
                        .sum::<f64>()
            })
            .collect()
    }

    /// Site-local part of `−log p(x)` when site `(l, k)` holds `v`.
    fn prior_cost(&self, x: &[usize], l: usize, k: usize, v: usize) -> f64 {
        let kk = self.factors;
        let mut cost = if l == 0 {
            -self.log_init(k, v)
        } else {
            -self.log_trans(k, x[(l - 1) * kk + k], v)
        };
        if l + 1 < self.length {
            cost -= self.log_trans(k, v, x[(l + 1) * kk + k]);
        }
        cost
    }

    fn fill_site(&self, x: &[usize], site: usize, mean: f64, out: &mut [f64]) {
        let l = site / self.factors;
        let k = site % self.factors;
        let cur = x[site];
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        let y = self.observations[l];
        let base_mean = mean - self.weight(k, cur);
        let cost = |v: usize| {
            let r = y - (base_mean + self.weight(k, v));
            self.prior_cost(x, l, k, v) + r * r * inv
        };
        let cur_cost = cost(cur);
        for (v, o) in out.iter_mut().enumerate() {
            *o = cur_cost - cost(v);
        }
        out[cur] = 0.0;
    }
}

fn log_softmax_rows(logits: &[f64], c: usize) -> Vec<f64> {
    logits
        .chunks_exact(c)
        .flat_map(|row| {
            let lse = log_sum_exp(row);
            row.iter().map(move |v| v - lse)
        })
        .collect()
}

impl EnergyModel for Fhmm {
    fn dim(&self) -> usize {
        self.length * self.factors
    }

    fn n_categories(&self) -> usize {
        self.n_categories
    }

    fn energy_of(&self, x: &[usize]) -> f64 {
        let k = self.factors;
        let mut log_prior = 0.0;
        for f in 0..k {
            log_prior += self.log_init(f, x[f]);
            for l in 1..self.length {
                log_prior += self.log_trans(f, x[(l - 1) * k + f], x[l * k + f]);
            }
        }
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        let log_lik: f64 = self
            .means(x)
            .iter()
            .zip(&self.observations)
            .map(|(m, y)| -(y - m) * (y - m) * inv)
            .sum();
        -log_prior - log_lik
    }

    fn site_log_ratios(&self, x: &[usize], site: usize, out: &mut [f64]) {
        let l = site / self.factors;
        let k = self.factors;
        let mean = self.bias + (0..k).map(|f| self.weight(f, x[l * k + f])).sum::<f64>();
        self.fill_site(x, site, mean, out);
    }

    fn all_log_ratios(&self, x: &[usize], out: &mut [f64]) {
        let means = self.means(x);
        let c = self.n_categories;
        for (site, row) in out.chunks_exact_mut(c).enumerate() {
            self.fill_site(x, site, means[site / self.factors], row);
        }
    }

    fn relaxed_energy(&self, z: &[f64]) -> f64 {
        let c = self.n_categories;
        let k = self.factors;
        let at = |l: usize, f: usize| &z[(l * k + f) * c..(l * k + f + 1) * c];
        let mut log_prior = 0.0;
        for f in 0..k {
            for v in 0..c {
                log_prior += at(0, f)[v] * self.log_init(f, v);
            }
            for l in 1..self.length {
                let prev = at(l - 1, f);
                let next = at(l, f);
                for a in 0..c {
                    for b in 0..c {
                        log_prior += prev[a] * self.log_trans(f, a, b) * next[b];
                    }
                }
            }
        }
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        let mut log_lik = 0.0;
        for l in 0..self.length {
            let mut mean = self.bias;
            for f in 0..k {
                for v in 0..c {
                    mean += at(l, f)[v] * self.weight(f, v);
                }
            }
            let r = self.observations[l] - mean;
            log_lik -= r * r * inv;
        }
        -log_prior - log_lik
    }

    fn relaxed_gradient(&self, x: &[usize], out: &mut [f64]) {
        let c = self.n_categories;
        let k = self.factors;
        let means = self.means(x);
        let inv_var = 1.0 / (self.sigma * self.sigma);
        for (site, row) in out.chunks_exact_mut(c).enumerate() {
            let l = site / k;
            let f = site % k;
            let resid = (means[l] - self.observations[l]) * inv_var;
            for (v, o) in row.iter_mut().enumerate() {
                let mut g = if l == 0 {
                    -self.log_init(f, v)
                } else {
                    -self.log_trans(f, x[(l - 1) * k + f], v)
                };
                if l + 1 < self.length {
                    g -= self.log_trans(f, v, x[(l + 1) * k + f]);
                }
                *o = g + resid * self.weight(f, v);
            }
        }
    }
}

/// Draws a hidden path from the prior and Gaussian observations around it.
///
/// Existing observations in `params` are ignored.
pub fn fhmm_generate_observations(params: &Fhmm, seed: u64) -> Result<Vec<f64>> {
    check_finite("weights", &params.weights)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (l_len, k) = (params.length, params.factors);
    let mut x = vec![0usize; l_len * k];
    for f in 0..k {
        x[f] = sample_categorical(&params.init_probs(f), &mut rng);
        for l in 1..l_len {
            let probs = params.transition_probs(f, x[(l - 1) * k + f]);
            x[l * k + f] = sample_categorical(&probs, &mut rng);
        }
    }
    Ok(params
        .means(&x)
        .into_iter()
        .map(|m| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            m + params.sigma * eps
        })
        .collect())
}

fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_support::*;
    use crate::state::State;

    fn small(length: usize, factors: usize, c: usize) -> Fhmm {
        let kc = factors * c;
        let init: Vec<f64> = (0..kc).map(|i| (i as f64 * 1.3).sin()).collect();
        let trans: Vec<f64> = (0..kc * c).map(|i| (i as f64 * 0.37).cos() * 2.0).collect();
        let w: Vec<f64> = (0..kc).map(|i| (i as f64 * 2.1).sin() * 1.5).collect();
        let y: Vec<f64> = (0..length).map(|i| (i as f64 * 0.9).cos() * 2.0).collect();
        Fhmm::new(
            FhmmShape {
                length,
                factors,
                n_categories: c,
            },
            init,
            trans,
            w,
            0.3,
            0.8,
            y,
        )
        .unwrap()
    }

    /// Brute-force `−log p(x) − log p(y|x)` with full normalizers.
    fn neg_log_joint(m: &Fhmm, x: &[usize]) -> f64 {
        let (l_len, k) = (m.length(), m.factors());
        let mut lp = 0.0;
        for f in 0..k {
            lp += m.init_probs(f)[x[f]].ln();
            for l in 1..l_len {
                lp += m.transition_probs(f, x[(l - 1) * k + f])[x[l * k + f]].ln();
            }
        }
        for l in 0..l_len {
            let mean: f64 = m.bias() + (0..k).map(|f| m.weights()[f * m.n_categories() + x[l * k + f]]).sum::<f64>();
            let s = m.sigma();
            let r = m.observations()[l] - mean;
            lp += -0.5 * (2.0 * std::f64::consts::PI * s * s).ln() - r * r / (2.0 * s * s);
        }
        -lp
    }

    #[test]
    fn energy_differences_match_log_joint() {
        let m = small(3, 2, 3);
        let base = State::from_index(0, 6, 3);
        let f0 = m.energy_of(base.values());
        let j0 = neg_log_joint(&m, base.values());
        for idx in 0..729 {
            let x = State::from_index(idx, 6, 3);
            let df = m.energy_of(x.values()) - f0;
            let dj = neg_log_joint(&m, x.values()) - j0;
            assert!((df - dj).abs() <= 1e-10, "{df} vs {dj}");
        }
    }

    #[test]
    fn local_ratios_match_brute_force() {
        let m = small(3, 2, 3);
        for idx in (0..729).step_by(7) {
            assert_exact_ratios(&m, &State::from_index(idx, 6, 3), 1e-10);
        }
    }

    #[test]
    fn relaxed_gradient_matches_finite_differences() {
        let m = small(4, 2, 3);
        let x = State::from_index(1234, 8, 3);
        let fd = fd_gradient(&m, &x, 1e-5);
        let mut g = vec![0.0; 24];
        m.relaxed_gradient(x.values(), &mut g);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let m = small(20, 3, 2);
        let a = fhmm_generate_observations(&m, 11).unwrap();
        let b = fhmm_generate_observations(&m, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, fhmm_generate_observations(&m, 12).unwrap());
    }

    #[test]
    fn tiny_sigma_is_accepted() {
        let m = small(2, 1, 2);
        let m = Fhmm::new(
            FhmmShape {
                length: 2,
                factors: 1,
                n_categories: 2,
            },
            m.init_logits().to_vec(),
            m.transition_logits().to_vec(),
            m.weights().to_vec(),
            0.0,
            1e-9,
            vec![0.0; 2],
        )
        .unwrap();
        let y = fhmm_generate_observations(&m, 3).unwrap();
        assert!(y.iter().all(|v| v.is_finite()));
        assert!(Fhmm::new(
            FhmmShape {
                length: 2,
                factors: 1,
                n_categories: 2
            },
            m.init_logits().to_vec(),
            m.transition_logits().to_vec(),
            m.weights().to_vec(),
            0.0,
            0.0,
            vec![0.0; 2],
        )
        .is_err());
    }

    #[test]
    fn single_step_observations_follow_mixture_moments() {
        // L = K = 1, binary: y ~ Σ_c p(c) N(W_c + b, σ²).
        let p0: f64 = 0.9;
        let init = vec![p0.ln(), (1.0 - p0).ln()];
        let w = vec![-1.0, 3.0];
        let (b, sigma) = (0.5, 2.0);
        let m = Fhmm::new(
            FhmmShape {
                length: 1,
                factors: 1,
                n_categories: 2,
            },
            init,
            vec![0.0; 4],
            w.clone(),
            b,
            sigma,
            vec![0.0],
        )
        .unwrap();
        let mean = p0 * (w[0] + b) + (1.0 - p0) * (w[1] + b);
        let second = p0 * ((w[0] + b).powi(2) + sigma * sigma)
            + (1.0 - p0) * ((w[1] + b).powi(2) + sigma * sigma);
        let sd = (second - mean * mean).sqrt();
        let n = 100_000;
        let emp: f64 = (0..n)
            .map(|s| fhmm_generate_observations(&m, s as u64).unwrap()[0])
            .sum::<f64>()
            / n as f64;
        let se = sd / (n as f64).sqrt();
        assert!((emp - mean).abs() < 3.0 * se, "{emp} vs {mean} (se {se})");
    }
}
