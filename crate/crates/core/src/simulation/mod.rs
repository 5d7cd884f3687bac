//! Monte Carlo experiments: the three elliptical models, size and power
//! estimation, power curves and the convergence diagnostic.

mod convergence;
mod harness;
mod models;

pub use convergence::{
    convergence_diagnostic, kolmogorov_distance, BaseLaw, ConvergenceCell, ConvergenceReport,
    EigenProfile,
};
pub use harness::{
    default_delta_grid, estimate_size_power, power_curve, run_one, with_threads, AbortedTest,
    SimulationConfig, SizePowerRow, SizePowerTable, TestId,
};
pub use models::{
    apply_equicorr, equicorr_factor, replicate_rng, sample_group, Model, ModelSpec, ShiftDirection,
    ShiftSpec,
};
