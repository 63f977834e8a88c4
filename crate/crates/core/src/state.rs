use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the product space `{0..C}^N`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct State {
    values: Vec<usize>,
    n_categories: usize,
}

impl State {
    pub fn new(values: Vec<usize>, n_categories: usize) -> Result<Self> {
        if n_categories < 2 {
            return Err(Error::Shape(format!(
                "need at least 2 categories, got {n_categories}"
            )));
        }
        if values.is_empty() {
            return Err(Error::Shape("state must have at least one site".into()));
        }
        if let Some((n, v)) = values.iter().enumerate().find(|(_, &v)| v >= n_categories) {
            return Err(Error::Shape(format!(
                "site {n} holds category {v}, outside [0, {n_categories})"
            )));
        }
        Ok(Self {
            values,
            n_categories,
        })
    }

    pub fn constant(dim: usize, n_categories: usize, value: usize) -> Result<Self> {
        Self::new(vec![value; dim], n_categories)
    }

    pub fn random<R: Rng + ?Sized>(dim: usize, n_categories: usize, rng: &mut R) -> Self {
        let values = (0..dim).map(|_| rng.random_range(0..n_categories)).collect();
        Self {
            values,
            n_categories,
        }
    }

    /// Decodes a mixed-radix index; site 0 is the least significant digit.
    pub fn from_index(mut index: usize, dim: usize, n_categories: usize) -> Self {
        let mut values = Vec::with_capacity(dim);
        for _ in 0..dim {
            values.push(index % n_categories);
            index /= n_categories;
        }
        Self {
            values,
            n_categories,
        }
    }

    /// Inverse of [`State::from_index`].
    pub fn index(&self) -> usize {
        index_of(&self.values, self.n_categories)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn n_categories(&self) -> usize {
        self.n_categories
    }

    #[inline]
    pub fn values(&self) -> &[usize] {
        &self.values
    }

    #[inline]
    pub fn get(&self, site: usize) -> usize {
        self.values[site]
    }

    /// Panics if `value` is not a valid category.
    #[inline]
    pub fn set(&mut self, site: usize, value: usize) {
        assert!(value < self.n_categories, "category {value} out of range");
        self.values[site] = value;
    }

    pub fn with_site(&self, site: usize, value: usize) -> Self {
        let mut out = self.clone();
        out.set(site, value);
        out
    }

    pub fn hamming(&self, other: &State) -> usize {
        self.values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a != b)
            .count()
    }
}

pub(crate) fn index_of(values: &[usize], n_categories: usize) -> usize {
    values
        .iter()
        .rev()
        .fold(0usize, |acc, &v| acc * n_categories + v)
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "State{:?}", self.values)
    }
}
