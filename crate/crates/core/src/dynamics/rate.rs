use crate::distribution::DenseDistribution;
use crate::dynamics::{SquareMatrix, WeightFunction};
use crate::error::{Error, Result};
use crate::model::enumerate::state_space_size;
use crate::model::{enumerate_energies, fill_log_ratios, EnergyModel, LogRatioTable, RatioSource};
use crate::state::State;

/// Largest state space assembled as a dense generator.
pub const FULL_MATRIX_CAP: usize = 2048;

/// Row `x_n` of the per-site generator `Q_n(x)`.
///
/// `rates[j] = g(π(x_{\n}, j) / π(x))` for `j ≠ current`; the diagonal holds
/// minus the off-diagonal sum. `log_rates` keeps the off-diagonal values in
/// log space (the diagonal slot is `−∞`).
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub site: usize,
    pub current: usize,
    pub rates: Vec<f64>,
    pub log_rates: Vec<f64>,
}

impl RateRow {
    pub fn from_log_ratios(site: usize, current: usize, log_ratios: &[f64], g: WeightFunction) -> Self {
        let log_rates: Vec<f64> = log_ratios
            .iter()
            .enumerate()
            .map(|(j, &l)| if j == current { f64::NEG_INFINITY } else { g.log_g(l) })
            .collect();
        Self::from_log_rates(site, current, log_rates)
    }

    /// Builds a row from arbitrary non-negative off-diagonal rates.
    pub fn from_rates(site: usize, current: usize, off_diagonal: &[f64]) -> Result<Self> {
        if let Some(r) = off_diagonal
            .iter()
            .enumerate()
            .find(|&(j, r)| j != current && !(*r >= 0.0 && r.is_finite()))
        {
            return Err(Error::Domain(format!("rate {} = {} is not a valid rate", r.0, r.1)));
        }
        let log_rates = off_diagonal
            .iter()
            .enumerate()
            .map(|(j, r)| if j == current { f64::NEG_INFINITY } else { r.ln() })
            .collect();
        Ok(Self::from_log_rates(site, current, log_rates))
    }

    fn from_log_rates(site: usize, current: usize, log_rates: Vec<f64>) -> Self {
        let mut rates: Vec<f64> = log_rates.iter().map(|l| l.exp()).collect();
        rates[current] = 0.0;
        rates[current] = -rates.iter().sum::<f64>();
        Self {
            site,
            current,
            rates,
            log_rates,
        }
    }

    /// Total jump rate `−Q(i, i)`.
    pub fn exit_rate(&self) -> f64 {
        -self.rates[self.current]
    }
}

/// Rate row for `site` at `x`, with ratios from `source`.
pub fn rate_row<M: EnergyModel + ?Sized>(
    model: &M,
    x: &State,
    site: usize,
    g: WeightFunction,
    source: RatioSource,
) -> Result<RateRow> {
    model.check_state(x)?;
    if site >= model.dim() {
        return Err(Error::Shape(format!("site {site} out of range")));
    }
    let ratios = match source {
        RatioSource::Exact => {
            let mut row = vec![0.0; model.n_categories()];
            model.site_log_ratios(x.values(), site, &mut row);
            row
        }
        RatioSource::Gradient => {
            let mut table = LogRatioTable::zeros(model.dim(), model.n_categories());
            fill_log_ratios(model, x.values(), source, &mut table);
            table.row(site).to_vec()
        }
    };
    Ok(RateRow::from_log_ratios(site, x.get(site), &ratios, g))
}

/// Full `C × C` generator `Q_n(x)` of site `n` with the other sites frozen.
pub fn site_rate_matrix<M: EnergyModel + ?Sized>(
    model: &M,
    x: &State,
    site: usize,
    g: WeightFunction,
) -> Result<SquareMatrix> {
    model.check_state(x)?;
    if site >= model.dim() {
        return Err(Error::Shape(format!("site {site} out of range")));
    }
    let c = model.n_categories();
    // log π(x_{\n}, j) relative to the current value
    let mut rel = vec![0.0; c];
    model.site_log_ratios(x.values(), site, &mut rel);
    let mut q = SquareMatrix::zeros(c);
    for i in 0..c {
        let shifted: Vec<f64> = rel.iter().map(|r| r - rel[i]).collect();
        let row = RateRow::from_log_ratios(site, i, &shifted, g);
        q.row_mut(i).copy_from_slice(&row.rates);
    }
    Ok(q)
}

/// Dense generator of the discrete Langevin dynamics over the whole space,
/// with the enumerated target it leaves invariant.
#[derive(Debug, Clone)]
pub struct FullRateMatrix {
    pub dim: usize,
    pub n_categories: usize,
    pub q: SquareMatrix,
    pub pi: DenseDistribution,
    pub energies: Vec<f64>,
}

impl FullRateMatrix {
    pub fn size(&self) -> usize {
        self.q.n()
    }

    /// `max_j |(πQ)_j|`.
    pub fn stationarity_residual(&self) -> f64 {
        self.q
            .left_mul(self.pi.probs())
            .into_iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_exit_rate(&self) -> f64 {
        (0..self.size()).fold(0.0, |m, i| m.max(-self.q.get(i, i)))
    }
}

/// Assembles `Q` with `w_xy = 1` on 1-Hamming neighbours, from exact ratios.
pub fn full_rate_matrix<M: EnergyModel + ?Sized>(model: &M, g: WeightFunction) -> Result<FullRateMatrix> {
    let (n, c) = (model.dim(), model.n_categories());
    let size = state_space_size(n, c, FULL_MATRIX_CAP)?;
    let energies = enumerate_energies(model, FULL_MATRIX_CAP)?;
    let neg: Vec<f64> = energies.iter().map(|e| -e).collect();
    let pi = DenseDistribution::from_log_weights(&neg)?;
    let mut q = SquareMatrix::zeros(size);
    let mut table = LogRatioTable::zeros(n, c);
    for idx in 0..size {
        let x = State::from_index(idx, n, c);
        fill_log_ratios(model, x.values(), RatioSource::Exact, &mut table);
        let mut diag = 0.0;
        let mut stride = 1usize;
        for site in 0..n {
            let cur = x.get(site);
            let row = RateRow::from_log_ratios(site, cur, table.row(site), g);
            for (j, &r) in row.rates.iter().enumerate() {
                if j != cur {
                    let target = idx - cur * stride + j * stride;
                    *q.get_mut(idx, target) = r;
                }
            }
            diag += row.rates[cur];
            stride *= c;
        }
        *q.get_mut(idx, idx) = diag;
    }
    Ok(FullRateMatrix {
        dim: n,
        n_categories: c,
        q,
        pi,
        energies,
    })
}
