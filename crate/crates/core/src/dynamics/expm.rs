use crate::error::{Error, Result};

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("matrix rows must all have length n".into()));
        }
        Ok(Self {
            n,
            data: rows.concat(),
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn matmul(&self, other: &SquareMatrix) -> SquareMatrix {
        let n = self.n;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(&other.data[k * n..(k + 1) * n]) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Row vector times matrix, `v M`.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.left_mul_into(v, &mut out);
        out
    }

    pub fn left_mul_into(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, q) in out.iter_mut().zip(self.row(i)) {
                *o += vi * q;
            }
        }
    }

    fn add_assign(&mut self, other: &SquareMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Sets each diagonal entry to minus the sum of its row's off-diagonals.
fn rebalance(e: &mut SquareMatrix) {
    for i in 0..e.n() {
        let off: f64 = e.row(i).iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).sum();
        *e.get_mut(i, i) = -off;
    }
}

const TAYLOR_RADIUS: f64 = 0.5;
const MAX_TERMS: usize = 30;

fn check_rate_matrix(q: &SquareMatrix) -> Result<()> {
    let scale = (0..q.n()).fold(1.0f64, |m, i| m.max(q.get(i, i).abs()));
    for i in 0..q.n() {
        let mut sum = 0.0;
        for j in 0..q.n() {
            let v = q.get(i, j);
            if !v.is_finite() {
                return Err(Error::Domain(format!("Q[{i}][{j}] is not finite")));
            }
            if i != j && v < 0.0 {
                return Err(Error::Domain(format!("negative off-diagonal Q[{i}][{j}] = {v}")));
            }
            sum += v;
        }
        if sum.abs() > 1e-10 * scale {
            return Err(Error::Domain(format!("row {i} of Q sums to {sum}")));
        }
    }
    Ok(())
}

/// `exp(Q h)` for a generator `Q` by scaling and squaring a truncated Taylor
/// series. The scaled argument has 1-norm at most 1/2 and the series runs
/// until its terms fall below machine precision.
pub fn matrix_exponential(q: &SquareMatrix, h: f64) -> Result<SquareMatrix> {
    check_rate_matrix(q)?;
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!("h must be finite and non-negative, got {h}")));
    }
    let n = q.n();
    let mut a = q.clone();
    a.scale(h);
    let norm = a.norm1();
    let squarings = if norm > TAYLOR_RADIUS {
        (norm / TAYLOR_RADIUS).log2().ceil() as i32
    } else {
        0
    };
    a.scale(0.5f64.powi(squarings));

    // Work with E = P − I so that small transition probabilities keep their
    // relative accuracy through the squarings: (I + E)² = I + (2E + E²).
    // Each row of E is re-balanced to sum to zero.
    let mut e = SquareMatrix::zeros(n);
    let mut term = SquareMatrix::identity(n);
    for k in 1..=MAX_TERMS {
        term = term.matmul(&a);
        term.scale(1.0 / k as f64);
        e.add_assign(&term);
        if term.norm1() <= f64::EPSILON * 1e-3 {
            break;
        }
    }
    rebalance(&mut e);
    for _ in 0..squarings {
        let mut next = e.matmul(&e);
        for (x, y) in next.data.iter_mut().zip(&e.data) {
            *x += 2.0 * y;
        }
        e = next;
        rebalance(&mut e);
    }
    let mut result = e;
    for i in 0..n {
        *result.get_mut(i, i) += 1.0;
    }
    for v in result.data.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-12 {
                return Err(Error::Domain(format!("exp(Qh) produced entry {v}")));
            }
            *v = 0.0;
        }
    }
    Ok(result)
}
