//! Structural-law diagnostics: energy bookkeeping and dissipation balance,
//! maximum-principle bounds, the cancellation identities of the stress
//! structure, renormalized parabolic-cylinder quantities, and the local
//! energy inequality. Everything here is read-only over immutable
//! snapshots.

mod bounds;
mod cancellation;
mod ckn;
mod energy;
mod lei;

pub use bounds::{bm_bound_monitor, max_principle_bound, BmBoundRecord};
pub use cancellation::{
    corotational_cancellation_residual, div2_cancellation_residual, CancellationReport,
};
pub use ckn::{
    ckn_quantities, ckn_scaling_check, singularity_scan, CknRadius, CknReport, ScalingEntry,
    ScanEntry,
};
pub use energy::{energy, energy_balance_residual, BalanceReport, EnergyRecord};
pub use lei::{local_energy_residual, LeiReport, LeiSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("operation requires the {expected} potential variant")]
    WrongVariant { expected: &'static str },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error(
        "parabolic cylinder under-resolved: radius {r} needs {need}, smallest admissible radius {min_r}"
    )]
    UnderResolved {
        r: f64,
        need: &'static str,
        min_r: f64,
    },
    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),
    #[error("trajectory does not cover the requested window [{t0}, {t1}]")]
    WindowNotCovered { t0: f64, t1: f64 },
    #[error("radii must be strictly decreasing and positive")]
    BadRadii,
    #[error(transparent)]
    Potential(#[from] crate::potential::PotentialError),
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
}
