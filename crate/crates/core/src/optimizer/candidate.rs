use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the search space with the running mean of its fitness samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub position: Vec<f64>,
    mean: f64,
    samples: u64,
}

impl Candidate {
    pub fn new(position: Vec<f64>) -> Self {
        Candidate { position, mean: 0.0, samples: 0 }
    }

    /// `None` until the first sample is recorded.
    pub fn mean_fitness(&self) -> Option<f64> {
        (self.samples > 0).then_some(self.mean)
    }

    pub fn sample_count(&self) -> u64 {
        self.samples
    }

    pub fn is_evaluated(&self) -> bool {
        self.samples > 0
    }

    /// Folds one more fitness sample into the running mean.
    pub fn record(&mut self, sample: f64) -> Result<()> {
        if !sample.is_finite() {
            return Err(Error::NonFinite(sample));
        }
        self.samples += 1;
        // Incremental form: a constant sample stream leaves the mean bit-exact.
        self.mean += (sample - self.mean) / self.samples as f64;
        Ok(())
    }

    pub(crate) fn fitness_unchecked(&self) -> f64 {
        self.mean
    }
}

/// Strict comparison in the requested orientation.
#[inline]
pub fn is_better(candidate: f64, incumbent: f64, maximize: bool) -> bool {
    if maximize {
        candidate > incumbent
    } else {
        candidate < incumbent
    }
}

/// Index of the best evaluated candidate; the first one wins ties.
pub fn best_index(population: &[Candidate], maximize: bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in population.iter().enumerate() {
        if !c.is_evaluated() {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) if is_better(c.mean, population[b].mean, maximize) => best = Some(i),
            _ => {}
        }
    }
    best
}
