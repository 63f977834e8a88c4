use crate::error::{Error, Result};
use crate::model::{check_len, EnergyModel};

/// Ising (`C = 2`) and Potts models on an open-boundary square lattice:
///
/// `f(x) = −Σ_n θ[n][x_n] − λ Σ_{(i,j)∈E} δ(x_i, x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingPotts {
    rows: usize,
    cols: usize,
    n_categories: usize,
    theta: Vec<f64>,
    lambda: f64,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl IsingPotts {
    /// Sites are numbered row-major, `n = r * cols + c`.
    pub fn new(
        rows: usize,
        cols: usize,
        n_categories: usize,
        theta: Vec<f64>,
        lambda: f64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 || n_categories < 2 {
            return Err(Error::Shape(format!(
                "lattice needs rows, cols ≥ 1 and C ≥ 2, got {rows}×{cols}, C={n_categories}"
            )));
        }
        if !lambda.is_finite() {
            return Err(Error::Shape("lambda is not finite".into()));
        }
        let dim = rows * cols;
        check_len("theta", &theta, dim * n_categories)?;
        let edges = lattice_edges(rows, cols);
        let mut neighbors = vec![Vec::with_capacity(4); dim];
        for &(a, b) in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        Ok(Self {
            rows,
            cols,
            n_categories,
            theta,
            lambda,
            edges,
            neighbors,
        })
    }

    pub fn square(side: usize, n_categories: usize, theta: Vec<f64>, lambda: f64) -> Result<Self> {
        Self::new(side, side, n_categories, theta, lambda)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Each undirected edge once, `(i, j)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    fn field(&self, site: usize) -> &[f64] {
        &self.theta[site * self.n_categories..(site + 1) * self.n_categories]
    }
}

fn lattice_edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let n = r * cols + c;
            if c + 1 < cols {
                edges.push((n, n + 1));
            }
            if r + 1 < rows {
                edges.push((n, n + cols));
            }
        }
    }
    edges
}

impl EnergyModel for IsingPotts {
    fn dim(&self) -> usize {
        self.rows * self.cols
    }

    fn n_categories(&self) -> usize {
        self.n_categories
    }

    fn energy_of(&self, x: &[usize]) -> f64 {
        let unary: f64 = x
            .iter()
            .enumerate()
            .map(|(n, &v)| self.theta[n * self.n_categories + v])
            .sum();
        let agree = self.edges.iter().filter(|&&(a, b)| x[a] == x[b]).count();
        -unary - self.lambda * agree as f64
    }

    fn site_log_ratios(&self, x: &[usize], site: usize, out: &mut [f64]) {
        let field = self.field(site);
        let cur = x[site];
        out.copy_from_slice(field);
        for &m in &self.neighbors[site] {
            out[x[m]] += self.lambda;
        }
        let base = out[cur];
        for o in out.iter_mut() {
            *o -= base;
        }
        out[cur] = 0.0;
    }

    fn relaxed_energy(&self, z: &[f64]) -> f64 {
        let c = self.n_categories;
        let unary: f64 = z.iter().zip(&self.theta).map(|(a, b)| a * b).sum();
        let pair: f64 = self
            .edges
            .iter()
            .map(|&(a, b)| {
                z[a * c..(a + 1) * c]
                    .iter()
                    .zip(&z[b * c..(b + 1) * c])
                    .map(|(p, q)| p * q)
                    .sum::<f64>()
            })
            .sum();
        -unary - self.lambda * pair
    }

    fn relaxed_gradient(&self, x: &[usize], out: &mut [f64]) {
        let c = self.n_categories;
        for (n, row) in out.chunks_exact_mut(c).enumerate() {
            for (o, t) in row.iter_mut().zip(self.field(n)) {
                *o = -t;
            }
            for &m in &self.neighbors[n] {
                row[x[m]] -= self.lambda;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_support::*;
    use crate::model::{energy, grad_log_ratios, local_log_ratios, Bernoulli};
    use crate::state::State;

    fn field(dim: usize, c: usize) -> Vec<f64> {
        (0..dim * c).map(|i| ((i * 7 + 3) as f64).cos() * 1.5).collect()
    }

    #[test]
    fn edge_counts() {
        let m = IsingPotts::square(2, 2, vec![0.0; 8], 1.0).unwrap();
        assert_eq!(m.edges().len(), 4);
        let m = IsingPotts::new(2, 3, 2, vec![0.0; 12], 1.0).unwrap();
        assert_eq!(m.edges().len(), 7);
        let m = IsingPotts::square(16, 2, vec![0.0; 512], 1.0).unwrap();
        assert_eq!(m.edges().len(), 2 * 16 * 15);
    }

    #[test]
    fn all_equal_two_by_two() {
        let m = IsingPotts::square(2, 2, vec![0.0; 8], 1.0).unwrap();
        let x = State::constant(4, 2, 1).unwrap();
        assert_eq!(energy(&m, &x).unwrap(), -4.0);
    }

    #[test]
    fn zero_coupling_matches_bernoulli() {
        // Ising uses −θ where Bernoulli uses +θ.
        let theta = field(6, 3);
        let ising = IsingPotts::new(2, 3, 3, theta.clone(), 0.0).unwrap();
        let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
        let bern = Bernoulli::new(6, 3, neg).unwrap();
        for idx in 0..729 {
            let x = State::from_index(idx, 6, 3);
            assert_eq!(energy(&ising, &x).unwrap(), energy(&bern, &x).unwrap());
            let g = grad_log_ratios(&ising, &x).unwrap();
            for n in 0..6 {
                let exact = local_log_ratios(&ising, &x, n).unwrap().log_ratios;
                for j in 0..3 {
                    assert!((g.row(n)[j] - exact[j]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn local_ratios_match_brute_force() {
        let m = IsingPotts::new(2, 3, 3, field(6, 3), 0.8).unwrap();
        for idx in 0..729 {
            assert_exact_ratios(&m, &State::from_index(idx, 6, 3), 1e-10);
        }
    }

    #[test]
    fn relaxed_gradient_matches_finite_differences() {
        let m = IsingPotts::new(3, 3, 3, field(9, 3), 0.7).unwrap();
        let x = State::from_index(4321, 9, 3);
        let fd = fd_gradient(&m, &x, 1e-5);
        let mut g = vec![0.0; 27];
        m.relaxed_gradient(x.values(), &mut g);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-7 * (1.0 + b.abs()));
        }
    }
}
