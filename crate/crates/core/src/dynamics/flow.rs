use crate::distribution::{kl_divergence, DenseDistribution};
use crate::dynamics::{FullRateMatrix, WeightFunction};
use crate::error::{Error, Result};
use crate::state::State;

/// Positive probabilities below this are raised to it.
pub const CLAMP_FLOOR: f64 = 1e-300;

/// Below this gap in `log m` the logarithmic mean is replaced by its limit.
const LOG_MEAN_GAP: f64 = 1e-9;

/// Symmetric edge weights `w_ij` of the state graph.
#[derive(Debug, Clone)]
pub struct Adjacency {
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl Adjacency {
    /// 1-Hamming graph on `{0..C}^N`, unit weights.
    pub fn hamming(dim: usize, n_categories: usize) -> Self {
        let size = n_categories.pow(dim as u32);
        let neighbors = (0..size)
            .map(|i| {
                (0..size)
                    .filter(|&j| {
                        State::from_index(i, dim, n_categories)
                            .hamming(&State::from_index(j, dim, n_categories))
                            == 1
                    })
                    .map(|j| (j, 1.0))
                    .collect()
            })
            .collect();
        Self { neighbors }
    }

    pub fn complete(size: usize) -> Self {
        let neighbors = (0..size)
            .map(|i| (0..size).filter(|&j| j != i).map(|j| (j, 1.0)).collect())
            .collect();
        Self { neighbors }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }
}

fn positive_logs(name: &str, values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if !(v > 0.0) || !v.is_finite() {
                Err(Error::Domain(format!("{name}[{i}] = {v} must be positive")))
            } else {
                Ok(v.max(CLAMP_FLOOR).ln())
            }
        })
        .collect()
}

fn check_lengths(adj: &Adjacency, lens: &[usize]) -> Result<()> {
    if lens.iter().any(|&l| l != adj.len()) {
        return Err(Error::Shape(format!(
            "vectors of lengths {lens:?} on a graph with {} states",
            adj.len()
        )));
    }
    Ok(())
}

/// Gradient-flow velocity in conductance form:
///
/// `dρ_j/dt = Σ_i c_ij(ρ) (f_i + log ρ_i − f_j − log ρ_j)`, where `c_ij` is
/// the logarithmic mean of `m_ij = w_ij g(π_j/π_i) ρ_i` and `m_ji`.
pub fn conductance_flow(
    rho: &[f64],
    pi: &[f64],
    energies: &[f64],
    adj: &Adjacency,
    g: WeightFunction,
) -> Result<Vec<f64>> {
    check_lengths(adj, &[rho.len(), pi.len(), energies.len()])?;
    let log_rho = positive_logs("rho", rho)?;
    let log_pi = positive_logs("pi", pi)?;
    let mut out = vec![0.0; adj.len()];
    for (j, o) in out.iter_mut().enumerate() {
        for &(i, w) in adj.neighbors(j) {
            let log_w = w.ln();
            let log_m_ij = log_w + g.log_g(log_pi[j] - log_pi[i]) + log_rho[i];
            let log_m_ji = log_w + g.log_g(log_pi[i] - log_pi[j]) + log_rho[j];
            let (m_ij, m_ji) = (log_m_ij.exp(), log_m_ji.exp());
            let gap = log_m_ij - log_m_ji;
            let conductance = if gap.abs() < LOG_MEAN_GAP {
                m_ij
            } else {
                (m_ij - m_ji) / gap
            };
            let force = energies[i] + log_rho[i] - energies[j] - log_rho[j];
            *o += conductance * force;
        }
    }
    Ok(out)
}

/// Simplified gradient-flow velocity:
/// `dρ_j/dt = Σ_i w_ij [ρ_i g(π_j/π_i) − ρ_j g(π_i/π_j)]`.
pub fn direct_flow(rho: &[f64], pi: &[f64], adj: &Adjacency, g: WeightFunction) -> Result<Vec<f64>> {
    check_lengths(adj, &[rho.len(), pi.len()])?;
    let log_pi = positive_logs("pi", pi)?;
    Ok((0..adj.len())
        .map(|j| {
            adj.neighbors(j)
                .iter()
                .map(|&(i, w)| {
                    w * (rho[i] * g.log_g(log_pi[j] - log_pi[i]).exp()
                        - rho[j] * g.log_g(log_pi[i] - log_pi[j]).exp())
                })
                .sum()
        })
        .collect())
}

/// One recorded point of the flow.
#[derive(Debug, Clone)]
pub struct FlowPoint {
    pub t: f64,
    pub rho: Vec<f64>,
    /// `KL(ρ ‖ π)`
    pub kl: f64,
}

/// `min(0.01, 0.1 / max|q_ii|)`.
pub fn default_dt(full: &FullRateMatrix) -> f64 {
    let max = full.max_exit_rate();
    if max > 0.0 {
        (0.1 / max).min(0.01)
    } else {
        0.01
    }
}

struct SparseGenerator {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseGenerator {
    fn new(full: &FullRateMatrix) -> Self {
        let n = full.size();
        let rows = (0..n)
            .map(|i| {
                full.q
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        Self { rows }
    }

    /// `out = v Q`
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (row, &vi) in self.rows.iter().zip(v) {
            if vi == 0.0 {
                continue;
            }
            for &(j, q) in row {
                out[j] += vi * q;
            }
        }
    }
}

/// Integrates `dρ/dt = ρQ` with classical fourth-order Runge–Kutta from
/// `rho0` to `t_end`, recording every step (the last step is shortened to
/// land on `t_end`).
pub fn integrate_dwgf(
    full: &FullRateMatrix,
    rho0: &DenseDistribution,
    t_end: f64,
    dt: f64,
) -> Result<Vec<FlowPoint>> {
    if rho0.len() != full.size() {
        return Err(Error::Shape(format!(
            "rho0 has {} states, generator has {}",
            rho0.len(),
            full.size()
        )));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::StepSize(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::Domain(format!("t_end must be non-negative, got {t_end}")));
    }
    let pi = full.pi.probs();
    let gen = SparseGenerator::new(full);
    let n = full.size();
    let mut rho = rho0.probs().to_vec();
    let mut out = vec![FlowPoint {
        t: 0.0,
        kl: kl_divergence(&rho, pi),
        rho: rho.clone(),
    }];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut t = 0.0;
    while t < t_end {
        let h = dt.min(t_end - t);
        gen.apply(&rho, &mut k1);
        for i in 0..n {
            tmp[i] = rho[i] + 0.5 * h * k1[i];
        }
        gen.apply(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = rho[i] + 0.5 * h * k2[i];
        }
        gen.apply(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = rho[i] + h * k3[i];
        }
        gen.apply(&tmp, &mut k4);
        for i in 0..n {
            rho[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let min = rho.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-12 {
            return Err(Error::StepSize(format!(
                "probability fell to {min} at t = {}; reduce dt",
                t + h
            )));
        }
        rho.iter_mut().for_each(|p| *p = p.max(0.0));
        let sum: f64 = rho.iter().sum();
        let drift = (sum - 1.0).abs();
        if drift > 1e-9 * h + 1e-13 {
            return Err(Error::StepSize(format!("mass drifted by {drift} in one step at t = {t}")));
        }
        rho.iter_mut().for_each(|p| *p /= sum);
        t = if t_end - (t + h) < 1e-12 * t_end.max(1.0) { t_end } else { t + h };
        out.push(FlowPoint {
            t,
            kl: kl_divergence(&rho, pi),
            rho: rho.clone(),
        });
    }
    Ok(out)
}
