//! Cylinder measures on the boundary `∂F_d` of the free group, harmonic
//! measures of symmetric generating random walks, the `T` map and desk-scale
//! checks of entropy minimality.
//!
//! Reduced words of a fixed length are stored in lexicographic order with
//! letters ordered `-d < … < -1 < 1 < … < d`, so every table and report
//! iterates deterministically.

mod cylinder;
mod entropy;
mod harmonic;
mod minimality;
mod tmap;

use thiserror::Error;

pub use cylinder::{pushforward, CylinderMeasure, PushforwardPlan, TailRule};
pub use entropy::{cylinder_entropy, harmonic_entropy_closed_form, rn_generator, EntropyEvaluator};
pub use harmonic::{
    harmonic_measure, harmonic_measure_from_q, solve_q, solve_q_tight, stationarity_residual,
    GeneratorMeasure, QVector, ACCEPTED_Q_RESIDUAL, INTERNAL_Q_TOLERANCE, Q_DAMPING,
    Q_MAX_ITERATIONS,
};
pub use minimality::{
    entropy_gradient, entropy_gradient_at_harmonic, minimality_scan, GradientReport, ScanConfig,
    ScanReport, ScanSample, MINIMALITY_SLACK,
};
pub use tmap::{t_inverse, t_map, t_map_denominators, TINV_MAX_ITERATIONS};

use crate::divergence::DivergenceError;
use crate::free_group::FreeGroupError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("rank {0} is too small; the free group needs d >= 2")]
    RankTooSmall(u32),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        trace: Vec<f64>,
    },
    #[error("depth mismatch: expected {expected}, found {found}")]
    DepthMismatch { expected: usize, found: usize },
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(u32, u32),
    #[error("measure has no tail rule and cannot be refined")]
    MissingTailRule,
    #[error("non-positive denominator Ψ(q) - Ψ(1/q) = {value:e} for generator {generator}")]
    NonPositiveDenominator { generator: i32, value: f64 },
    #[error("finite-difference step {step:e} too large for minimum mass {min_mass:e}")]
    StepTooLarge { step: f64, min_mass: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    FreeGroup(#[from] FreeGroupError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
}
