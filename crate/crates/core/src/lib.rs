//! Kernel-based location tests for two or more samples of arbitrary
//! dimension, with asymptotic and permutation calibration, classical
//! baselines and a Monte Carlo harness.

pub mod baselines;
pub mod error;
pub mod io;
pub mod kernels;
pub mod model;
pub mod nulldist;
pub mod permutation;
pub mod simulation;
pub mod statistic;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use model::{
    validate_sample, GroupedSample, KernelKind, KernelSpec, Method, SpectrumEstimate, TestOutcome,
    WeightedChiSquare,
};
pub use nulldist::{run_test, PValueMethod};
