//! f-divergences between finite measures and the (λ,f)-entropy of a family
//! of translates.
//!
//! Divergences are extended reals: `f64::INFINITY` is a legitimate result and
//! `0·∞` is taken to be `0`.

mod generator;
mod measure;

use std::fmt::Debug;

use thiserror::Error;

pub use generator::ConvexGenerator;
pub use measure::{FiniteMeasure, MeasureFamily, PROBABILITY_TOLERANCE};

use crate::sum::CompensatedSum;

/// Masses at or below this are treated as exact zeros on the `p = 0` and
/// `q = 0` branches.
pub const ZERO_MASS: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DivergenceError {
    #[error("atom label sets differ: {0}")]
    AtomMismatch(String),
    #[error("not a probability measure (total mass {0})")]
    NotProbability(f64),
    #[error("negative or non-finite mass at {0}")]
    NegativeMass(String),
    #[error("missing translate for group element {0}")]
    MissingTranslate(String),
    #[error("bad generator: {0}")]
    BadGenerator(String),
}

/// `0·∞ = 0` multiplication for non-negative weights.
#[inline]
pub(crate) fn weight_times(weight: f64, value: f64) -> f64 {
    if weight == 0.0 {
        0.0
    } else {
        weight * value
    }
}

/// `D_f(P‖Q)` for aligned mass vectors, using the given zero-mass threshold.
///
/// Atoms with `q = 0` contribute `p·f′(∞)`; atoms with `p = 0 < q` contribute
/// `f(0⁺)·q`. No normalization is checked here.
pub fn divergence_of_masses(p: &[f64], q: &[f64], f: &ConvexGenerator, zero_mass: f64) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let slope = f.at_infinity_slope();
    let at_zero = f.at_zero();
    let mut acc = CompensatedSum::new();
    let mut infinite = false;
    for (&pi, &qi) in p.iter().zip(q) {
        let p_zero = pi <= zero_mass;
        let q_zero = qi <= zero_mass;
        let term = match (p_zero, q_zero) {
            (true, true) => 0.0,
            (false, true) => weight_times(pi, slope),
            (true, false) => weight_times(qi, at_zero),
            (false, false) => f.eval(pi / qi) * qi,
        };
        if term == f64::INFINITY {
            infinite = true;
        } else {
            acc.add(term);
        }
    }
    if infinite {
        f64::INFINITY
    } else {
        acc.value()
    }
}

/// `D_f(P‖Q) = Σ_{q>0} f(p/q) q + P(q = 0)·f′(∞)`.
pub fn f_divergence<K: Ord + Clone + Debug>(
    p: &FiniteMeasure<K>,
    q: &FiniteMeasure<K>,
    f: &ConvexGenerator,
) -> Result<f64, DivergenceError> {
    if !p.same_labels(q) {
        return Err(DivergenceError::AtomMismatch(format!(
            "{} vs {} atoms",
            p.len(),
            q.len()
        )));
    }
    for m in [p, q] {
        if !m.is_probability() {
            return Err(DivergenceError::NotProbability(m.total()));
        }
    }
    Ok(divergence_of_masses(&p.masses(), &q.masses(), f, ZERO_MASS))
}

/// Same as [`f_divergence`] but evaluated with the supporting-line-normalized
/// generator `f(t) - f′(1)(t - 1)`. Every term is non-negative, and for
/// probability measures the value coincides with [`f_divergence`].
pub fn normalized_f_divergence<K: Ord + Clone + Debug>(
    p: &FiniteMeasure<K>,
    q: &FiniteMeasure<K>,
    f: &ConvexGenerator,
) -> Result<f64, DivergenceError> {
    f_divergence(p, q, f)?;
    let d1 = f.deriv(1.0);
    let slope = f.at_infinity_slope() - d1;
    let at_zero = f.at_zero() + d1;
    let mut acc = CompensatedSum::new();
    for (&pi, &qi) in p.masses().iter().zip(&q.masses()) {
        let term = match (pi <= ZERO_MASS, qi <= ZERO_MASS) {
            (true, true) => 0.0,
            (false, true) => weight_times(pi, slope),
            (true, false) => weight_times(qi, at_zero),
            (false, false) => f.normalized_eval(pi / qi) * qi,
        };
        if term == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        acc.add(term);
    }
    Ok(acc.value())
}

/// `h_{λ,f}(X,ν) = Σ_g λ(g) D_f(gν‖ν)`.
pub fn furstenberg_entropy<K: Ord + Clone + Debug, G: Ord + Clone + Debug>(
    family: &MeasureFamily<K, G>,
    f: &ConvexGenerator,
) -> Result<f64, DivergenceError> {
    family.validate()?;
    let mut acc = CompensatedSum::new();
    for (g, &weight) in family.lambda.atoms() {
        if weight == 0.0 {
            continue;
        }
        let translate = family
            .translates
            .get(g)
            .ok_or_else(|| DivergenceError::MissingTranslate(format!("{g:?}")))?;
        let d = f_divergence(translate, &family.base, f)?;
        if d == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        acc.add(weight * d);
    }
    Ok(acc.value())
}
