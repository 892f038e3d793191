//! Furstenberg entropy on cylinder algebras of free-group boundaries,
//! matrix-valued time-dependent random walks, and majorant gauges for
//! uniform integrability on finite probability spaces.
//!
//! The crate is split into four layers:
//!
//! - [`divergence`]: f-divergences of finite measures and the (λ,f)-entropy
//!   of a family of translates.
//! - [`free_group`] and [`boundary`]: reduced words in `F_d`, cylinder
//!   measures on `∂F_d`, harmonic measures, the `T` map and numerical
//!   minimality checks.
//! - [`walk`]: σ-stochastic sequences, exact distribution propagation,
//!   trajectory sampling, harmonicity checks, Abel measures and the Følner
//!   experiment on `ℤ`.
//! - [`majorant`]: concave gauges ρ, `C_ρ` norms, concave envelopes and the
//!   de la Vallée-Poussin construction.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod divergence;
pub mod free_group;
pub mod majorant;
pub mod sum;
pub mod walk;

pub use boundary::{BoundaryError, CylinderMeasure, GeneratorMeasure, QVector, TailRule};
pub use divergence::{ConvexGenerator, DivergenceError, FiniteMeasure, MeasureFamily};
pub use free_group::{FreeGroupError, ReducedWord};
pub use majorant::{Majorant, MajorantError, WeightedFunction};
pub use walk::{
    FreeGroup, Group, Integers, LeveledMeasure, StochasticSequence, WalkError, WalkState,
};

/// Default element budget for exact propagation.
pub const ELEMENT_BUDGET: usize = 10_000_000;
