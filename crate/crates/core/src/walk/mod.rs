//! σ-stochastic sequences: sheeted time-dependent random walks on
//! `V_n = [ℓ_n] × G`, their exact distributions, trajectory sampling,
//! harmonicity and martingale checks, Abel-weighted measures and the Følner
//! experiment on `ℤ`.
//!
//! Conventions: `σ^{(n)}` has shape `ℓ_{n-1} × ℓ_n` with `ℓ_{-1} = 1`, and
//! the walk moves `(i, g) → (j, g·h)` with probability `σ^{(n)}_{ij}(h)`.

mod abel;
mod exact;
mod folner;
mod group;
mod harmonic;
mod sample;
mod sequence;

use thiserror::Error;

pub use abel::{abel_identity_residual, abel_measure, AbelIdentityReport, AbelMeasure};
pub use exact::{
    chapman_kolmogorov_residual, convolve_matrices, distribution_from, exact_distribution,
    matrix_product, propagate, LeveledMeasure, WalkState,
};
pub use folner::{
    abel_projection, folner_entropy_curve, folner_sequence, geometric_envelope, shift_entropy,
    BoxScratch, DenseMeasure, FolnerFamily, FolnerPoint, FolnerReport, ShiftEntropy, ShiftMode,
    SIGMA0_DEFECT, SIGMA0_RATIO,
};
pub use group::{FreeGroup, Group, GroupSpec, Integers};
pub use harmonic::{
    check_harmonic, constant_free_walk, martingale_check, one_step_expectation,
    poisson_transform_tables, translated_cylinder_mass, FunctionTables, HarmonicReport,
    LevelResidual, LevelTable,
};
pub use sample::{
    boundary_empirical, chi_squared_statistic, empirical_distribution, sample_endpoints,
    sample_trajectory, trajectory_rng, BoundaryEmpiricalReport, ChiSquaredReport,
    CylinderFrequency, MAX_DISCARD_RATE,
};
pub use sequence::{
    validate_sigma, AnySequence, ColumnViolation, MeasureMatrix, Repetition, RowViolation,
    SigmaReport, StochasticSequence, ROW_SUM_TOLERANCE,
};

use crate::boundary::BoundaryError;
use crate::free_group::FreeGroupError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("invalid stochastic sequence: {0}")]
    InvalidSequence(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("element budget exceeded at level {level} ({size} entries)")]
    BudgetExceeded { level: i64, size: usize },
    #[error("function table at level {level} has no value at {point} and no default")]
    IncompleteTable { level: i64, point: String },
    #[error("{discarded} discarded trajectories exceed the allowed share of {trajectories}")]
    TooManyDiscards {
        discarded: usize,
        trajectories: usize,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    FreeGroup(#[from] FreeGroupError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
}
