//! Fixtures shared by the criterion benchmarks.

use furstenberg_core::boundary::GeneratorMeasure;
use furstenberg_core::majorant::WeightedFunction;
use furstenberg_core::walk::{Integers, StochasticSequence};

/// A skewed symmetric generating measure on `F_d`.
pub fn skewed_measure(rank: usize) -> GeneratorMeasure {
    let half: Vec<f64> = (1..=rank).map(|k| k as f64).collect();
    GeneratorMeasure::symmetric(&half).expect("positive weights")
}

/// Lazy simple random walk on `ℤ`.
pub fn lazy_walk() -> StochasticSequence<Integers> {
    StochasticSequence::constant(Integers, vec![(-1, 0.25), (0, 0.5), (1, 0.25)])
        .expect("probability measure")
}

/// A deterministic `n`-atom function with uneven masses and values.
pub fn weighted_function(n: usize) -> WeightedFunction {
    let total: f64 = (1..=n).map(|k| k as f64).sum();
    WeightedFunction::from_pairs((1..=n).map(|k| {
        let value = ((k * 7919) % 101) as f64 - 50.0;
        (format!("x{k:02}"), k as f64 / total, value)
    }))
    .expect("valid function")
}
