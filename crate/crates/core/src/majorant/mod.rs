//! Majorant gauges `ρ` on `[0,1]`, `C_ρ` norms of functions on finite
//! probability spaces, de la Vallée-Poussin gauges and integrable-part
//! splitting.

mod gauge;
mod norm;

use thiserror::Error;

pub use gauge::{
    combine, concave_envelope, vallee_poussin, vallee_poussin_report, CombineOp, InvariantReport,
    Majorant, VallePoussinReport, VpGenerator, GRID_INTERVALS, INVARIANT_TOLERANCE,
};
pub use norm::{
    continuity_majorant, rho_abs_continuity, rho_abs_continuity_report, rho_norm, rho_norm_report,
    split_integrable, AbsContinuityReport, NormMode, NormReport, SplitReport, WeightedFunction,
    ABS_CONTINUITY_TOLERANCE, EXACT_ATOM_LIMIT,
};

use crate::divergence::DivergenceError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MajorantError {
    #[error("invalid weights: {0}")]
    InvalidWeight(String),
    #[error("invalid majorant: {0}")]
    InvalidMajorant(String),
    #[error("{atoms} atoms exceed the exact-enumeration limit of {limit}")]
    TooManyAtoms { atoms: usize, limit: usize },
    #[error("atom sets differ: {0}")]
    AtomMismatch(String),
    #[error("bad sample: {0}")]
    BadSample(String),
    #[error("generator is not superlinear: {0}")]
    NotSuperlinear(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid weighted function: {0}")]
    InvalidFunction(String),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
}
