//! Optimization and simulation core for learning quantum control policies.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO. It provides:
//!
//! * [`rng`]: counter-based, path-addressable random streams with block buffering,
//! * [`optimizer`]: plain differential evolution, PSO, stochastic hill climbing and
//!   benchmark objectives,
//! * [`noisy`]: differential evolution on running-mean fitness with resampling,
//! * [`sussade`]: subspace-selective self-adaptive differential evolution,
//! * [`scaling`]: log-log regression, prediction intervals and the accept-reject
//!   campaign controller,
//! * [`phase`]: adaptive Mach-Zehnder phase estimation trajectories and the
//!   sharpness / Holevo variance metrics,
//! * [`gate`]: piecewise-constant pulse propagation and intrinsic gate fidelity.
//!
//! Parallelism is injected through [`optimizer::Executor`]; every evaluation draws
//! from its own stream so results never depend on scheduling.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod error;
pub mod gate;
pub mod noisy;
pub mod optimizer;
pub mod phase;
pub mod rng;
pub mod scaling;
pub mod sussade;

pub use error::{Error, Result};
pub use rng::RngStream;
