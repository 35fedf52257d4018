use alloc::vec::Vec;

use crate::rng::RngStream;

/// A fitness function over real vectors.
///
/// An evaluation may be stochastic, but all of its randomness must come from
/// the supplied stream: identical `(position, stream)` pairs give identical
/// samples, and no evaluation may touch shared mutable state.
pub trait Objective: Sync {
    fn dimension(&self) -> usize;

    fn evaluate(&self, position: &[f64], rng: &mut RngStream) -> f64;

    /// `true` when the value depends on the position only.
    fn is_deterministic(&self) -> bool {
        false
    }
}

impl<O: Objective + ?Sized> Objective for &O {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn evaluate(&self, position: &[f64], rng: &mut RngStream) -> f64 {
        (**self).evaluate(position, rng)
    }

    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}

/// Runs a batch of independent jobs. Implementations may run them in parallel
/// but must return results in job order.
pub trait Executor: Sync {
    fn map(&self, len: usize, job: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64>;
}

/// Runs every job on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map(&self, len: usize, job: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64> {
        (0..len).map(job).collect()
    }
}

/// Evaluates each position once with stream `seed / prefix / index`.
pub(crate) fn evaluate_batch<O, E>(
    objective: &O,
    executor: &E,
    seed: u64,
    prefix: [u64; 2],
    positions: &[&[f64]],
) -> Vec<f64>
where
    O: Objective + ?Sized,
    E: Executor + ?Sized,
{
    executor.map(positions.len(), &|i| {
        let mut rng = RngStream::seeded(seed, &[prefix[0], prefix[1], i as u64]);
        objective.evaluate(positions[i], &mut rng)
    })
}
