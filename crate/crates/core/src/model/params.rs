//! Parameter generation for the benchmark regimes and the JSON parameter
//! file format.
//!
//! Files are a single JSON object with a `family` tag, explicit shape
//! fields and row-major flat arrays. Floats are written with 17 significant
//! digits so a load/save cycle reproduces the file byte for byte.

use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::fhmm::FhmmShape;
use crate::model::{fhmm_generate_observations, Bernoulli, EnergyModel, Fhmm, IsingPotts, Model, Rbm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Bernoulli,
    /// Ising for `C = 2`, Potts otherwise.
    #[serde(alias = "potts")]
    Ising,
    Fhmm,
    Rbm,
}

/// Everything needed to draw one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ShapeConfig {
    /// `θ[n][c] ~ N(0, sigma2)` independently.
    Bernoulli {
        dim: usize,
        n_categories: usize,
        sigma2: f64,
    },
    /// Square lattice; the centered `(side − 2⌈side/4⌉)²` block is the
    /// "inner" part. Binary lattices put a scalar field on category 1;
    /// categorical ones draw `U(range) ∓ category_shift · (c+1)/C`
    /// (minus outside, plus inside).
    #[serde(alias = "potts")]
    Ising {
        side: usize,
        n_categories: usize,
        lambda: f64,
        outer: (f64, f64),
        inner: (f64, f64),
        category_shift: f64,
    },
    /// Sticky chains: `P(x_1 = 0) = p_init0`, `P(x_l = x_{l−1}) = p_stay`,
    /// remaining mass uniform. `W ~ N(0, weight_scale²)`, `b = 0`.
    Fhmm {
        length: usize,
        factors: usize,
        n_categories: usize,
        p_init0: f64,
        p_stay: f64,
        sigma: f64,
        weight_scale: f64,
    },
    /// All parameters i.i.d. centered normal; the visible and hidden biases
    /// use `bias_scale`, couplings `weight_scale`.
    Rbm {
        n_visible: usize,
        n_categories: usize,
        n_hidden: usize,
        weight_scale: f64,
        bias_scale: f64,
    },
}

/// Names accepted by [`ShapeConfig::preset`] and [`ShapeConfig::desk_preset`].
pub const PRESETS: &[&str] = &[
    "bernoulli-high",
    "bernoulli-low",
    "bernoulli-c4",
    "bernoulli-c8",
    "ising-high",
    "ising-low",
    "potts-c4",
    "potts-c8",
    "fhmm-high",
    "fhmm-low",
    "fhmm-c4",
    "fhmm-c8",
    "rbm-high",
    "rbm-low",
    "rbm-c4",
    "rbm-c8",
];

impl ShapeConfig {
    /// Looks up a named regime at full benchmark scale.
    pub fn preset(name: &str) -> Option<Self> {
        let bern = |dim, n_categories, sigma2| ShapeConfig::Bernoulli {
            dim,
            n_categories,
            sigma2,
        };
        let fhmm = |length, factors, n_categories| ShapeConfig::Fhmm {
            length,
            factors,
            n_categories,
            p_init0: 0.9,
            p_stay: 0.8,
            sigma: 2.0,
            weight_scale: 1.0,
        };
        let rbm = |n_categories, n_hidden| ShapeConfig::Rbm {
            n_visible: 784,
            n_categories,
            n_hidden,
            weight_scale: 0.1,
            bias_scale: 0.5,
        };
        let potts = |n_categories| ShapeConfig::Ising {
            side: 30,
            n_categories,
            lambda: 1.0,
            outer: (-1.5, 1.5),
            inner: (-1.5, 1.5),
            category_shift: 0.5,
        };
        Some(match name {
            "bernoulli-high" => bern(10_000, 2, 0.125),
            "bernoulli-low" => bern(10_000, 2, 12.5),
            "bernoulli-c4" => bern(2_000, 4, 1.125),
            "bernoulli-c8" => bern(2_000, 8, 1.125),
            "ising-high" => ShapeConfig::Ising {
                side: 50,
                n_categories: 2,
                lambda: 0.5,
                outer: (-2.0, 1.0),
                inner: (-1.0, 2.0),
                category_shift: 0.0,
            },
            "ising-low" => ShapeConfig::Ising {
                side: 50,
                n_categories: 2,
                lambda: 1.0,
                outer: (-4.0, 2.0),
                inner: (-2.0, 4.0),
                category_shift: 0.0,
            },
            "potts-c4" => potts(4),
            "potts-c8" => potts(8),
            "fhmm-high" => fhmm(200, 10, 2),
            "fhmm-low" => fhmm(100, 20, 2),
            "fhmm-c4" => fhmm(200, 10, 4),
            "fhmm-c8" => fhmm(200, 10, 8),
            "rbm-high" => rbm(2, 25),
            "rbm-low" => rbm(2, 200),
            "rbm-c4" => rbm(4, 100),
            "rbm-c8" => rbm(8, 100),
            _ => return None,
        })
    }

    /// Same regime shrunk for desk-scale experiments.
    pub fn desk_preset(name: &str) -> Option<Self> {
        let mut shape = Self::preset(name)?;
        match &mut shape {
            ShapeConfig::Bernoulli { dim, n_categories, .. } => {
                *dim = if *n_categories == 2 { 1_000 } else { 200 }
            }
            ShapeConfig::Ising { side, n_categories, .. } => {
                *side = if *n_categories == 2 { 16 } else { 12 }
            }
            ShapeConfig::Fhmm { length, factors, .. } => {
                *length /= 4;
                *factors = (*factors / 2).max(1);
            }
            ShapeConfig::Rbm { n_visible, .. } => *n_visible = 196,
        }
        Some(shape)
    }

    pub fn family(&self) -> Family {
        match self {
            ShapeConfig::Bernoulli { .. } => Family::Bernoulli,
            ShapeConfig::Ising { .. } => Family::Ising,
            ShapeConfig::Fhmm { .. } => Family::Fhmm,
            ShapeConfig::Rbm { .. } => Family::Rbm,
        }
    }

    /// Replaces the primary size knob (N, lattice side, FHMM length, RBM visibles).
    pub fn with_size(mut self, size: usize) -> Self {
        match &mut self {
            ShapeConfig::Bernoulli { dim, .. } => *dim = size,
            ShapeConfig::Ising { side, .. } => *side = size,
            ShapeConfig::Fhmm { length, .. } => *length = size,
            ShapeConfig::Rbm { n_visible, .. } => *n_visible = size,
        }
        self
    }
}

fn uniform(lo: f64, hi: f64) -> Result<Uniform<f64>> {
    Uniform::new_inclusive(lo, hi).map_err(|e| Error::Shape(format!("bad range [{lo}, {hi}]: {e}")))
}

/// Draws parameters for `shape`; identical `(shape, seed)` give identical models.
pub fn generate_params(shape: &ShapeConfig, seed: u64) -> Result<Model> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *shape {
        ShapeConfig::Bernoulli {
            dim,
            n_categories,
            sigma2,
        } => {
            let normal = Normal::new(0.0, sigma2.sqrt())
                .map_err(|e| Error::Shape(format!("bad sigma2 {sigma2}: {e}")))?;
            let theta = (0..dim * n_categories).map(|_| normal.sample(&mut rng)).collect();
            Ok(Bernoulli::new(dim, n_categories, theta)?.into())
        }
        ShapeConfig::Ising {
            side,
            n_categories,
            lambda,
            outer,
            inner,
            category_shift,
        } => {
            let outer = uniform(outer.0, outer.1)?;
            let inner_dist = uniform(inner.0, inner.1)?;
            let margin = side.div_ceil(4);
            let is_inner = |r: usize, c: usize| {
                (margin..side.saturating_sub(margin)).contains(&r)
                    && (margin..side.saturating_sub(margin)).contains(&c)
            };
            let mut theta = vec![0.0; side * side * n_categories];
            for r in 0..side {
                for c in 0..side {
                    let n = r * side + c;
                    let inside = is_inner(r, c);
                    let dist = if inside { &inner_dist } else { &outer };
                    let row = &mut theta[n * n_categories..(n + 1) * n_categories];
                    if n_categories == 2 {
                        row[1] = dist.sample(&mut rng);
                    } else {
                        let sign = if inside { 1.0 } else { -1.0 };
                        for (i, t) in row.iter_mut().enumerate() {
                            *t = dist.sample(&mut rng)
                                + sign * category_shift * (i + 1) as f64 / n_categories as f64;
                        }
                    }
                }
            }
            Ok(IsingPotts::square(side, n_categories, theta, lambda)?.into())
        }
        ShapeConfig::Fhmm {
            length,
            factors,
            n_categories: c,
            p_init0,
            p_stay,
            sigma,
            weight_scale,
        } => {
            if !(0.0 < p_init0 && p_init0 < 1.0 && 0.0 < p_stay && p_stay < 1.0) {
                return Err(Error::Shape("fhmm probabilities must lie in (0, 1)".into()));
            }
            let other_init = ((1.0 - p_init0) / (c - 1) as f64).ln();
            let other_move = ((1.0 - p_stay) / (c - 1) as f64).ln();
            let mut init = Vec::with_capacity(factors * c);
            let mut trans = Vec::with_capacity(factors * c * c);
            for _ in 0..factors {
                init.extend((0..c).map(|v| if v == 0 { p_init0.ln() } else { other_init }));
                for from in 0..c {
                    trans.extend((0..c).map(|to| if to == from { p_stay.ln() } else { other_move }));
                }
            }
            let weights = (0..factors * c)
                .map(|_| weight_scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect::<Vec<f64>>();
            let model = Fhmm::new(
                FhmmShape {
                    length,
                    factors,
                    n_categories: c,
                },
                init,
                trans,
                weights,
                0.0,
                sigma,
                vec![0.0; length],
            )?;
            let y = fhmm_generate_observations(&model, rng.random())?;
            Ok(model.with_observations(y)?.into())
        }
        ShapeConfig::Rbm {
            n_visible,
            n_categories,
            n_hidden,
            weight_scale,
            bias_scale,
        } => {
            let mut draw = |scale: f64, len: usize| -> Vec<f64> {
                (0..len)
                    .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                    .collect()
            };
            let theta = draw(bias_scale, n_visible * n_categories);
            let beta = draw(bias_scale, n_hidden);
            let weights = draw(weight_scale, n_hidden * n_visible * n_categories);
            Ok(Rbm::new(n_visible, n_categories, n_hidden, theta, beta, weights)?.into())
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
enum ParamFile {
    Bernoulli {
        n: usize,
        c: usize,
        theta: Vec<f64>,
    },
    #[serde(alias = "potts")]
    Ising {
        n: usize,
        c: usize,
        rows: usize,
        cols: usize,
        lambda: f64,
        theta: Vec<f64>,
    },
    Fhmm {
        n: usize,
        c: usize,
        length: usize,
        factors: usize,
        init_logits: Vec<f64>,
        transition_logits: Vec<f64>,
        w: Vec<f64>,
        b: f64,
        sigma: f64,
        observations: Vec<f64>,
    },
    Rbm {
        n: usize,
        c: usize,
        n_hidden: usize,
        theta_vis: Vec<f64>,
        beta: Vec<f64>,
        weights: Vec<f64>,
    },
}

impl ParamFile {
    fn from_model(model: &Model) -> Self {
        let (n, c) = (model.dim(), model.n_categories());
        match model {
            Model::Bernoulli(m) => ParamFile::Bernoulli {
                n,
                c,
                theta: m.theta().to_vec(),
            },
            Model::IsingPotts(m) => ParamFile::Ising {
                n,
                c,
                rows: m.rows(),
                cols: m.cols(),
                lambda: m.lambda(),
                theta: m.theta().to_vec(),
            },
            Model::Fhmm(m) => ParamFile::Fhmm {
                n,
                c,
                length: m.length(),
                factors: m.factors(),
                init_logits: m.init_logits().to_vec(),
                transition_logits: m.transition_logits().to_vec(),
                w: m.weights().to_vec(),
                b: m.bias(),
                sigma: m.sigma(),
                observations: m.observations().to_vec(),
            },
            Model::Rbm(m) => ParamFile::Rbm {
                n,
                c,
                n_hidden: m.n_hidden(),
                theta_vis: m.theta_vis().to_vec(),
                beta: m.beta().to_vec(),
                weights: m.weights().to_vec(),
            },
        }
    }

    fn into_model(self) -> Result<Model> {
        let model: Model = match self {
            ParamFile::Bernoulli { n, c, theta } => Bernoulli::new(n, c, theta)?.into(),
            ParamFile::Ising {
                n,
                c,
                rows,
                cols,
                lambda,
                theta,
            } => {
                if rows * cols != n {
                    return Err(Error::Shape(format!("rows × cols = {} but n = {n}", rows * cols)));
                }
                IsingPotts::new(rows, cols, c, theta, lambda)?.into()
            }
            ParamFile::Fhmm {
                n,
                c,
                length,
                factors,
                init_logits,
                transition_logits,
                w,
                b,
                sigma,
                observations,
            } => {
                if length * factors != n {
                    return Err(Error::Shape(format!(
                        "length × factors = {} but n = {n}",
                        length * factors
                    )));
                }
                Fhmm::new(
                    FhmmShape {
                        length,
                        factors,
                        n_categories: c,
                    },
                    init_logits,
                    transition_logits,
                    w,
                    b,
                    sigma,
                    observations,
                )?
                .into()
            }
            ParamFile::Rbm {
                n,
                c,
                n_hidden,
                theta_vis,
                beta,
                weights,
            } => Rbm::new(n, c, n_hidden, theta_vis, beta, weights)?.into(),
        };
        Ok(model)
    }
}

/// Writes floats as `{:.16e}`: 17 significant digits, always exact on re-read.
struct SignificantDigits;

impl serde_json::ser::Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

pub(crate) fn to_json_17<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SignificantDigits);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn params_to_string(model: &Model) -> Result<String> {
    to_json_17(&ParamFile::from_model(model))
}

pub fn params_from_str(text: &str, origin: &Path) -> Result<Model> {
    let file: ParamFile = serde_json::from_str(text).map_err(|e| Error::parse(origin, &e))?;
    file.into_model()
}

pub fn save_params(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, params_to_string(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    params_from_str(&text, path)
}
