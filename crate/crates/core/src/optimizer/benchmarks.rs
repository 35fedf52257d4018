//! Standard test functions (all minimized, global minimum 0).

use core::f64::consts::PI;

#[allow(unused_imports)] // float math resolves through this trait under no_std
use num_traits::Float;


use super::bounds::Bounds;
use super::objective::Objective;
use crate::error::Result;
use crate::rng::RngStream;

/// `Σ x_j²`.
#[derive(Debug, Clone, Copy)]
pub struct Sphere {
    dim: usize,
}

impl Sphere {
    pub fn new(dim: usize) -> Self {
        Sphere { dim }
    }

    pub fn bounds(&self) -> Result<Bounds> {
        Bounds::uniform(self.dim, -100.0, 100.0)
    }
}

impl Objective for Sphere {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64], _rng: &mut RngStream) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// `Σ 100 (x_{j+1} - x_j²)² + (1 - x_j)²`, minimum at the all-ones vector.
#[derive(Debug, Clone, Copy)]
pub struct Rosenbrock {
    dim: usize,
}

impl Rosenbrock {
    pub fn new(dim: usize) -> Self {
        Rosenbrock { dim }
    }

    pub fn bounds(&self) -> Result<Bounds> {
        Bounds::uniform(self.dim, -30.0, 30.0)
    }
}

impl Objective for Rosenbrock {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64], _rng: &mut RngStream) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// `10 n + Σ (x_j² - 10 cos 2πx_j)`.
#[derive(Debug, Clone, Copy)]
pub struct Rastrigin {
    dim: usize,
}

impl Rastrigin {
    pub fn new(dim: usize) -> Self {
        Rastrigin { dim }
    }

    pub fn bounds(&self) -> Result<Bounds> {
        Bounds::uniform(self.dim, -5.12, 5.12)
    }
}

impl Objective for Rastrigin {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64], _rng: &mut RngStream) -> f64 {
        10.0 * x.len() as f64
            + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Adds N(0, σ²) noise to another objective.
#[derive(Debug, Clone, Copy)]
pub struct AdditiveNoise<O> {
    pub inner: O,
    pub sigma: f64,
}

impl<O: Objective> Objective for AdditiveNoise<O> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn evaluate(&self, x: &[f64], rng: &mut RngStream) -> f64 {
        let clean = self.inner.evaluate(x, rng);
        clean + self.sigma * rng.next_standard_normal()
    }

    fn is_deterministic(&self) -> bool {
        self.sigma == 0.0 && self.inner.is_deterministic()
    }
}
