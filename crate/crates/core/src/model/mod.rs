//! Discrete target distributions `π(x) ∝ exp(−f(x))` over `{0..C}^N`.
//!
//! Every model exposes its energy, exact single-site log-ratios and the
//! gradient of a continuous relaxation evaluated at the one-hot embedding of
//! a state. Models are immutable; evaluation counting lives in
//! [`Evaluator`], which each chain owns.

mod bernoulli;
pub(crate) mod enumerate;
mod fhmm;
mod ising;
mod params;
mod rbm;

pub use bernoulli::Bernoulli;
pub use enumerate::{enumerate_distribution, enumerate_energies, ENUMERATION_CAP};
pub use fhmm::{fhmm_generate_observations, Fhmm};
pub use ising::IsingPotts;
pub(crate) use params::to_json_17;
pub use params::{generate_params, load_params, save_params, Family, ShapeConfig, PRESETS};
pub use rbm::Rbm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::State;

/// Where per-site log-ratios come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RatioSource {
    /// Exact energy differences.
    Exact,
    /// First-order expansion `−⟨∇f(x), e_j − e_{x_n}⟩` of the relaxed energy.
    #[default]
    Gradient,
}

/// Interface shared by all energy models.
///
/// Methods take raw category slices and assume the caller validated the
/// shape; the checked entry points are the free functions of this module and
/// the [`Evaluator`] methods.
pub trait EnergyModel: Send + Sync {
    fn dim(&self) -> usize;

    fn n_categories(&self) -> usize;

    fn energy_of(&self, x: &[usize]) -> f64;

    /// Writes `log π(x_{\n}, j) − log π(x)` for every category `j` into `out`.
    fn site_log_ratios(&self, x: &[usize], site: usize, out: &mut [f64]);

    /// Exact log-ratios for every site, row-major `N × C`.
    fn all_log_ratios(&self, x: &[usize], out: &mut [f64]) {
        let c = self.n_categories();
        for (n, row) in out.chunks_exact_mut(c).enumerate() {
            self.site_log_ratios(x, n, row);
        }
    }

    /// Energy of the continuous relaxation at `z ∈ R^{N×C}` (row-major).
    fn relaxed_energy(&self, z: &[f64]) -> f64;

    /// Gradient of [`EnergyModel::relaxed_energy`] at the one-hot embedding of `x`.
    fn relaxed_gradient(&self, x: &[usize], out: &mut [f64]);

    fn check_state(&self, x: &State) -> Result<()> {
        if x.dim() != self.dim() || x.n_categories() != self.n_categories() {
            return Err(Error::Shape(format!(
                "state has (N={}, C={}), model expects (N={}, C={})",
                x.dim(),
                x.n_categories(),
                self.dim(),
                self.n_categories()
            )));
        }
        Ok(())
    }
}

/// Log-ratios for one site. The entry at the current value is exactly 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRatios {
    pub site: usize,
    pub log_ratios: Vec<f64>,
}

/// `N × C` table of per-site log-ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRatioTable {
    n_categories: usize,
    data: Vec<f64>,
}

impl LogRatioTable {
    pub fn zeros(dim: usize, n_categories: usize) -> Self {
        Self {
            n_categories,
            data: vec![0.0; dim * n_categories],
        }
    }

    #[inline]
    pub fn row(&self, site: usize) -> &[f64] {
        &self.data[site * self.n_categories..(site + 1) * self.n_categories]
    }

    pub fn dim(&self) -> usize {
        self.data.len() / self.n_categories
    }

    pub fn n_categories(&self) -> usize {
        self.n_categories
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn local(&self, site: usize) -> LocalRatios {
        LocalRatios {
            site,
            log_ratios: self.row(site).to_vec(),
        }
    }
}

/// Fills `table` from the model, one evaluation regardless of source.
pub(crate) fn fill_log_ratios<M: EnergyModel + ?Sized>(
    model: &M,
    x: &[usize],
    source: RatioSource,
    table: &mut LogRatioTable,
) {
    match source {
        RatioSource::Exact => model.all_log_ratios(x, table.as_mut_slice()),
        RatioSource::Gradient => {
            let c = model.n_categories();
            let out = table.as_mut_slice();
            model.relaxed_gradient(x, out);
            for (row, &xn) in out.chunks_exact_mut(c).zip(x) {
                let base = row[xn];
                for v in row.iter_mut() {
                    *v = base - *v;
                }
                row[xn] = 0.0;
            }
        }
    }
}

/// `f(x)`, with shape checking.
pub fn energy<M: EnergyModel + ?Sized>(model: &M, x: &State) -> Result<f64> {
    model.check_state(x)?;
    Ok(model.energy_of(x.values()))
}

pub fn local_log_ratios<M: EnergyModel + ?Sized>(
    model: &M,
    x: &State,
    site: usize,
) -> Result<LocalRatios> {
    model.check_state(x)?;
    if site >= model.dim() {
        return Err(Error::Shape(format!(
            "site {site} out of range for N={}",
            model.dim()
        )));
    }
    let mut log_ratios = vec![0.0; model.n_categories()];
    model.site_log_ratios(x.values(), site, &mut log_ratios);
    log_ratios[x.get(site)] = 0.0;
    Ok(LocalRatios { site, log_ratios })
}

/// Gradient-approximated log-ratios for every site.
pub fn grad_log_ratios<M: EnergyModel + ?Sized>(model: &M, x: &State) -> Result<LogRatioTable> {
    model.check_state(x)?;
    let mut table = LogRatioTable::zeros(model.dim(), model.n_categories());
    fill_log_ratios(model, x.values(), RatioSource::Gradient, &mut table);
    Ok(table)
}

/// Wraps a shared model with a per-chain evaluation tally.
///
/// One call to `energy`, one full log-ratio sweep and one gradient each count
/// as a single evaluation.
#[derive(Debug)]
pub struct Evaluator<'m, M: ?Sized> {
    model: &'m M,
    evals: u64,
}

impl<'m, M: EnergyModel + ?Sized> Evaluator<'m, M> {
    pub fn new(model: &'m M) -> Self {
        Self { model, evals: 0 }
    }

    pub fn model(&self) -> &'m M {
        self.model
    }

    pub fn evals(&self) -> u64 {
        self.evals
    }

    pub fn charge(&mut self, n: u64) {
        self.evals += n;
    }

    pub fn energy(&mut self, x: &State) -> Result<f64> {
        let e = energy(self.model, x)?;
        self.evals += 1;
        Ok(e)
    }

    pub fn local_log_ratios(&mut self, x: &State, site: usize) -> Result<LocalRatios> {
        let r = local_log_ratios(self.model, x, site)?;
        self.evals += 1;
        Ok(r)
    }

    pub fn grad_log_ratios(&mut self, x: &State) -> Result<LogRatioTable> {
        let r = grad_log_ratios(self.model, x)?;
        self.evals += 1;
        Ok(r)
    }

    /// All sites' log-ratios from `source`; counts as one evaluation.
    pub fn sweep(&mut self, x: &State, source: RatioSource) -> Result<LogRatioTable> {
        self.model.check_state(x)?;
        let mut table = LogRatioTable::zeros(self.model.dim(), self.model.n_categories());
        fill_log_ratios(self.model, x.values(), source, &mut table);
        self.evals += 1;
        Ok(table)
    }
}

/// A concrete model from the zoo.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Bernoulli(Bernoulli),
    IsingPotts(IsingPotts),
    Fhmm(Fhmm),
    Rbm(Rbm),
}

impl Model {
    pub fn family(&self) -> Family {
        match self {
            Model::Bernoulli(_) => Family::Bernoulli,
            Model::IsingPotts(_) => Family::Ising,
            Model::Fhmm(_) => Family::Fhmm,
            Model::Rbm(_) => Family::Rbm,
        }
    }

    fn inner(&self) -> &dyn EnergyModel {
        match self {
            Model::Bernoulli(m) => m,
            Model::IsingPotts(m) => m,
            Model::Fhmm(m) => m,
            Model::Rbm(m) => m,
        }
    }
}

impl EnergyModel for Model {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn n_categories(&self) -> usize {
        self.inner().n_categories()
    }
    fn energy_of(&self, x: &[usize]) -> f64 {
        self.inner().energy_of(x)
    }
    fn site_log_ratios(&self, x: &[usize], site: usize, out: &mut [f64]) {
        self.inner().site_log_ratios(x, site, out)
    }
    fn all_log_ratios(&self, x: &[usize], out: &mut [f64]) {
        self.inner().all_log_ratios(x, out)
    }
    fn relaxed_energy(&self, z: &[f64]) -> f64 {
        self.inner().relaxed_energy(z)
    }
    fn relaxed_gradient(&self, x: &[usize], out: &mut [f64]) {
        self.inner().relaxed_gradient(x, out)
    }
}

impl From<Bernoulli> for Model {
    fn from(m: Bernoulli) -> Self {
        Model::Bernoulli(m)
    }
}
impl From<IsingPotts> for Model {
    fn from(m: IsingPotts) -> Self {
        Model::IsingPotts(m)
    }
}
impl From<Fhmm> for Model {
    fn from(m: Fhmm) -> Self {
        Model::Fhmm(m)
    }
}
impl From<Rbm> for Model {
    fn from(m: Rbm) -> Self {
        Model::Rbm(m)
    }
}

pub(crate) fn check_finite(name: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Shape(format!("{name}[{i}] is not finite"))),
        None => Ok(()),
    }
}

pub(crate) fn check_len(name: &str, values: &[f64], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(Error::Shape(format!(
            "{name} has {} entries, expected {expected}",
            values.len()
        )));
    }
    check_finite(name, values)
}

/// `log(1 + e^x)` without overflow.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `log Σ exp(v)`.
pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Brute-force oracle: `−(f(x with site := j) − f(x))`.
    pub fn brute_log_ratios<M: EnergyModel + ?Sized>(model: &M, x: &State, site: usize) -> Vec<f64> {
        let base = model.energy_of(x.values());
        (0..model.n_categories())
            .map(|j| -(model.energy_of(x.with_site(site, j).values()) - base))
            .collect()
    }

    pub fn assert_exact_ratios<M: EnergyModel + ?Sized>(model: &M, x: &State, tol: f64) {
        for site in 0..model.dim() {
            let got = local_log_ratios(model, x, site).unwrap();
            let want = brute_log_ratios(model, x, site);
            for (j, (g, w)) in got.log_ratios.iter().zip(&want).enumerate() {
                assert!(
                    (g - w).abs() <= tol,
                    "site {site} cat {j}: {g} vs brute {w}"
                );
            }
        }
        let mut all = vec![0.0; model.dim() * model.n_categories()];
        model.all_log_ratios(x.values(), &mut all);
        for site in 0..model.dim() {
            let want = brute_log_ratios(model, x, site);
            for j in 0..model.n_categories() {
                let g = all[site * model.n_categories() + j];
                assert!((g - want[j]).abs() <= tol, "sweep site {site} cat {j}");
            }
        }
    }

    /// Central finite differences of the relaxed energy at one-hot(x).
    pub fn fd_gradient<M: EnergyModel + ?Sized>(model: &M, x: &State, eps: f64) -> Vec<f64> {
        let c = model.n_categories();
        let mut z = vec![0.0; model.dim() * c];
        for (n, &v) in x.values().iter().enumerate() {
            z[n * c + v] = 1.0;
        }
        (0..z.len())
            .map(|i| {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[i] += eps;
                zm[i] -= eps;
                (model.relaxed_energy(&zp) - model.relaxed_energy(&zm)) / (2.0 * eps)
            })
            .collect()
    }
}
