use crate::error::{Error, Result};

/// Probability vector over an enumerated state space.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseDistribution {
    probs: Vec<f64>,
}

impl DenseDistribution {
    pub const SUM_TOL: f64 = 1e-12;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Domain("empty distribution".into()));
        }
        if let Some(i) = probs.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Domain(format!(
                "probability {i} is {} (must be finite and non-negative)",
                probs[i]
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL * probs.len().max(1) as f64 {
            return Err(Error::Domain(format!("probabilities sum to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::Domain(format!("weights sum to {sum}")));
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    /// `softmax(log_weights)`, max-subtracted.
    pub fn from_log_weights(log_weights: &[f64]) -> Result<Self> {
        let max = log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Domain("no finite log-weight".into()));
        }
        Self::from_weights(log_weights.iter().map(|l| (l - max).exp()).collect())
    }

    pub fn point_mass(len: usize, at: usize) -> Result<Self> {
        if at >= len {
            return Err(Error::Domain(format!("point mass at {at} of {len} states")));
        }
        let mut probs = vec![0.0; len];
        probs[at] = 1.0;
        Ok(Self { probs })
    }

    pub fn uniform(len: usize) -> Result<Self> {
        Self::new(vec![1.0 / len as f64; len])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn argmax(&self) -> usize {
        self.probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| {
                if p > best.1 {
                    (i, p)
                } else {
                    best
                }
            })
            .0
    }

    /// `KL(self ‖ other)` with `0 log 0 = 0`; infinite if supports mismatch.
    pub fn kl(&self, other: &DenseDistribution) -> f64 {
        kl_divergence(&self.probs, &other.probs)
    }

    pub fn tv(&self, other: &DenseDistribution) -> f64 {
        tv_distance(&self.probs, &other.probs)
    }
}

pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            if a <= 0.0 {
                0.0
            } else if b <= 0.0 {
                f64::INFINITY
            } else {
                a * (a / b).ln()
            }
        })
        .sum::<f64>()
        .max(0.0)
}

pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(DenseDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DenseDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(DenseDistribution::new(vec![]).is_err());
        assert!(DenseDistribution::point_mass(3, 3).is_err());
        let d = DenseDistribution::from_log_weights(&[0.0, 2f64.ln()]).unwrap();
        assert!((d.probs()[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn divergences() {
        let p = [0.5, 0.5, 0.0];
        let q = [0.25, 0.25, 0.5];
        assert!((tv_distance(&p, &q) - 0.5).abs() < 1e-15);
        assert!((kl_divergence(&p, &q) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kl_divergence(&q, &p), f64::INFINITY);
    }
}
