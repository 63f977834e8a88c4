use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Locally balanced weight `g` with `g(t) = t·g(1/t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WeightFunction {
    /// `g(t) = √t`
    #[default]
    Sqrt,
    /// `g(t) = t / (1 + t)`
    Barker,
}

impl WeightFunction {
    /// `log g(e^{log_t})`. NaN in, NaN out.
    #[inline]
    pub fn log_g(self, log_t: f64) -> f64 {
        match self {
            WeightFunction::Sqrt => 0.5 * log_t,
            // log t − log(1 + t) = −softplus(−log t)
            WeightFunction::Barker => {
                let u = -log_t;
                -(u.max(0.0) + (-u.abs()).exp().ln_1p())
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WeightFunction::Sqrt => "sqrt",
            WeightFunction::Barker => "barker",
        }
    }
}

/// Checked form of [`WeightFunction::log_g`].
pub fn log_g(w: WeightFunction, log_t: f64) -> Result<f64> {
    if log_t.is_nan() {
        return Err(Error::Domain("log_g of NaN".into()));
    }
    Ok(w.log_g(log_t))
}
