use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float math resolves through this trait under no_std
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Box-shaped search space. Periodic dimensions wrap onto `[lower, upper)`,
/// the others are clamped onto `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
    periodic: Vec<bool>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, periodic: Vec<bool>) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != periodic.len() {
            return Err(Error::config("bounds vectors must have equal length"));
        }
        if lower.is_empty() {
            return Err(Error::config("bounds must have at least one dimension"));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite())
        {
            return Err(Error::config("every lower bound must be finite and below its upper bound"));
        }
        Ok(Bounds { lower, upper, periodic })
    }

    /// The same clamped interval in every dimension.
    pub fn uniform(dimension: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dimension], vec![upper; dimension], vec![false; dimension])
    }

    /// `[lower, upper)^dimension` with wrap-around, e.g. phases on `[0, 2π)`.
    pub fn periodic(dimension: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dimension], vec![upper; dimension], vec![true; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn is_periodic(&self, j: usize) -> bool {
        self.periodic[j]
    }

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    /// Maps a raw coordinate back into the domain of dimension `j`.
    #[inline]
    pub fn fold(&self, j: usize, x: f64) -> f64 {
        let (lo, hi) = (self.lower[j], self.upper[j]);
        if self.periodic[j] {
            if x >= lo && x < hi {
                return x;
            }
            let w = hi - lo;
            let y = x - w * ((x - lo) / w).floor();
            if y >= hi || y < lo {
                lo
            } else {
                y
            }
        } else {
            x.clamp(lo, hi)
        }
    }

    pub fn fold_all(&self, x: &mut [f64]) {
        for (j, v) in x.iter_mut().enumerate() {
            *v = self.fold(j, *v);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x.iter().enumerate().all(|(j, &v)| {
                if self.periodic[j] {
                    v >= self.lower[j] && v < self.upper[j]
                } else {
                    v >= self.lower[j] && v <= self.upper[j]
                }
            })
    }

    /// A uniformly random point of the domain.
    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        (0..self.dimension())
            .map(|j| self.fold(j, rng.next_range(self.lower[j], self.upper[j])))
            .collect()
    }
}
