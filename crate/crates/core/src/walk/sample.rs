use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{Group, LeveledMeasure, StochasticSequence, WalkError, WalkState};
use crate::boundary::{harmonic_measure, GeneratorMeasure};
use crate::free_group::{Letter, WordIndexer};

/// Share of discarded trajectories above which [`boundary_empirical`] fails.
pub const MAX_DISCARD_RATE: f64 = 0.1;

/// The generator for trajectory `index` under `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

struct FlatRow<E> {
    cumulative: Vec<f64>,
    targets: Vec<(usize, E)>,
}

impl<E: Clone> FlatRow<E> {
    fn sample(&self, rng: &mut ChaCha8Rng) -> (usize, E) {
        let total = *self.cumulative.last().expect("non-empty row");
        let u = rng.random::<f64>() * total;
        let k = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.targets.len() - 1);
        self.targets[k].clone()
    }
}

/// Cumulative tables for the normalized rows of every stored matrix.
struct RowSampler<'a, G: Group> {
    s: &'a StochasticSequence<G>,
    rows: Vec<Vec<FlatRow<G::Element>>>,
}

impl<'a, G: Group> RowSampler<'a, G> {
    fn new(s: &'a StochasticSequence<G>) -> Result<Self, WalkError> {
        let mut rows = Vec::with_capacity(s.horizon());
        for (level, m) in s.stored().iter().enumerate() {
            let mut level_rows = Vec::with_capacity(m.rows());
            for i in 0..m.rows() {
                let mut cumulative = Vec::new();
                let mut targets = Vec::new();
                let mut acc = 0.0;
                for j in 0..m.cols() {
                    for (h, w) in m.cell(i, j) {
                        acc += w;
                        cumulative.push(acc);
                        targets.push((j, h.clone()));
                    }
                }
                if targets.is_empty() {
                    return Err(WalkError::InvalidSequence(format!(
                        "row {i} of σ^({level}) is empty"
                    )));
                }
                level_rows.push(FlatRow {
                    cumulative,
                    targets,
                });
            }
            rows.push(level_rows);
        }
        Ok(Self { s, rows })
    }

    fn step(&self, level: usize, row: usize, rng: &mut ChaCha8Rng) -> (usize, G::Element) {
        self.rows[self.s.stored_index(level)][row].sample(rng)
    }

    fn trajectory(&self, steps: usize, rng: &mut ChaCha8Rng) -> Vec<WalkState<G::Element>> {
        let group = self.s.group();
        let (i, g) = self.step(0, 0, rng);
        let mut states = Vec::with_capacity(steps + 1);
        states.push(WalkState { n: 0, i, g });
        for n in 1..=steps {
            let prev = &states[n - 1];
            let (j, h) = self.step(n, prev.i, rng);
            let g = group.multiply(&prev.g, &h);
            states.push(WalkState { n, i: j, g });
        }
        states
    }
}

/// `X_0, …, X_T` with `X_0 ~ σ^{(0)}` and `(i,g) → (j, g·h)` with probability
/// `σ^{(n)}_{ij}(h)` normalized by the row sum; deterministic given `seed`.
pub fn sample_trajectory<G: Group>(
    s: &StochasticSequence<G>,
    steps: usize,
    seed: u64,
) -> Result<Vec<WalkState<G::Element>>, WalkError> {
    if steps < 1 {
        return Err(WalkError::InvalidParameter(
            "steps must be at least 1".into(),
        ));
    }
    let sampler = RowSampler::new(s)?;
    Ok(sampler.trajectory(steps, &mut trajectory_rng(seed, 0)))
}

/// Final states `X_T` of `count` independent trajectories; trajectory `k`
/// uses stream `k` of the seed, so the result does not depend on the number
/// of worker threads.
pub fn sample_endpoints<G: Group>(
    s: &StochasticSequence<G>,
    steps: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<WalkState<G::Element>>, WalkError> {
    let sampler = RowSampler::new(s)?;
    Ok((0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = trajectory_rng(seed, k as u64);
            let group = s.group();
            let (mut i, mut g) = sampler.step(0, 0, &mut rng);
            for n in 1..=steps {
                let (j, h) = sampler.step(n, i, &mut rng);
                i = j;
                g = group.multiply(&g, &h);
            }
            WalkState { n: steps, i, g }
        })
        .collect())
}

/// Empirical distribution of a sample of states on one level.
pub fn empirical_distribution<E: Clone + Ord>(
    level: usize,
    states: &[WalkState<E>],
) -> LeveledMeasure<E> {
    let mut counts: BTreeMap<(usize, E), usize> = BTreeMap::new();
    for s in states {
        *counts.entry((s.i, s.g.clone())).or_default() += 1;
    }
    let n = states.len() as f64;
    LeveledMeasure {
        level: level as i64,
        entries: counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquaredReport {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub cells: usize,
    pub samples: usize,
}

/// Pearson statistic of sampled states against an exact distribution. Atoms
/// with expected count below 5 are pooled into one cell together with any
/// sampled state outside the exact support.
pub fn chi_squared_statistic<E: Clone + Ord>(
    exact: &LeveledMeasure<E>,
    states: &[WalkState<E>],
) -> ChiSquaredReport {
    let n = states.len() as f64;
    let mut observed: BTreeMap<(usize, E), usize> = BTreeMap::new();
    for s in states {
        *observed.entry((s.i, s.g.clone())).or_default() += 1;
    }
    let mut statistic = 0.0;
    let mut cells = 0usize;
    let (mut pooled_expected, mut pooled_observed) = (0.0, 0usize);
    for (k, &p) in &exact.entries {
        let expected = p * n;
        let seen = observed.remove(k).unwrap_or(0);
        if expected >= 5.0 {
            statistic += (seen as f64 - expected).powi(2) / expected;
            cells += 1;
        } else {
            pooled_expected += expected;
            pooled_observed += seen;
        }
    }
    pooled_observed += observed.values().sum::<usize>();
    if pooled_expected > 0.0 {
        statistic += (pooled_observed as f64 - pooled_expected).powi(2) / pooled_expected;
        cells += 1;
    } else if pooled_observed > 0 {
        statistic = f64::INFINITY;
    }
    ChiSquaredReport {
        statistic,
        degrees_of_freedom: cells.saturating_sub(1),
        cells,
        samples: states.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CylinderFrequency {
    pub word: String,
    pub count: usize,
    pub frequency: f64,
    pub expected: f64,
    pub std_error: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryEmpiricalReport {
    pub depth: usize,
    pub steps: usize,
    pub trajectories: usize,
    pub discarded: usize,
    pub discard_rate: f64,
    pub max_abs_z: f64,
    pub frequencies: Vec<CylinderFrequency>,
}

/// Length-`n` prefixes of `Y_T` for the constant-μ walk on `F_d`, compared
/// with `ν_μ` on depth-`n` cylinders.
///
/// `Y_T` is the product of `T + 1` independent μ-steps. A trajectory ending
/// with `|Y_T| < n` is discarded and redrawn from the same stream.
pub fn boundary_empirical(
    mu: &GeneratorMeasure,
    steps: usize,
    trajectories: usize,
    seed: u64,
    depth: usize,
) -> Result<BoundaryEmpiricalReport, WalkError> {
    if depth < 1 {
        return Err(WalkError::InvalidParameter(
            "depth must be at least 1".into(),
        ));
    }
    if steps < 4 * depth {
        return Err(WalkError::InvalidParameter(format!(
            "steps must be at least 4·depth = {}, got {steps}",
            4 * depth
        )));
    }
    let rank = mu.rank();
    let letters = mu.letters();
    let mut cumulative = Vec::with_capacity(letters.len());
    let mut acc = 0.0;
    for &l in &letters {
        acc += mu.weight(l);
        cumulative.push(acc);
    }
    let max_discards = (MAX_DISCARD_RATE * trajectories as f64).floor() as usize;
    let indexer = WordIndexer::new(rank, depth);
    let outcomes: Vec<(usize, usize)> = (0..trajectories)
        .into_par_iter()
        .map(|k| {
            let mut rng = trajectory_rng(seed, k as u64);
            let mut discards = 0usize;
            loop {
                let mut word: Vec<Letter> = Vec::with_capacity(steps + 1);
                for _ in 0..=steps {
                    let u = rng.random::<f64>() * acc;
                    let l = letters[cumulative
                        .partition_point(|&c| c <= u)
                        .min(letters.len() - 1)];
                    if word.last() == Some(&-l) {
                        word.pop();
                    } else {
                        word.push(l);
                    }
                }
                if word.len() >= depth {
                    return (indexer.index_of(&word[..depth]), discards);
                }
                discards += 1;
                if discards > max_discards {
                    return (usize::MAX, discards);
                }
            }
        })
        .collect();
    let discarded: usize = outcomes.iter().map(|(_, d)| d).sum();
    if discarded > max_discards || outcomes.iter().any(|(i, _)| *i == usize::MAX) {
        return Err(WalkError::TooManyDiscards {
            discarded,
            trajectories,
        });
    }
    if trajectories == 0 {
        return Ok(BoundaryEmpiricalReport {
            depth,
            steps,
            trajectories,
            discarded: 0,
            discard_rate: 0.0,
            max_abs_z: 0.0,
            frequencies: Vec::new(),
        });
    }
    let mut counts = vec![0usize; indexer.count()];
    for (i, _) in &outcomes {
        counts[*i] += 1;
    }
    let nu = harmonic_measure(mu, depth)?;
    let n = trajectories as f64;
    let mut max_abs_z: f64 = 0.0;
    let frequencies = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| {
            let expected = nu.masses()[i];
            let frequency = count as f64 / n;
            let std_error = (expected * (1.0 - expected) / n).sqrt();
            let z = (frequency - expected) / std_error;
            max_abs_z = max_abs_z.max(z.abs());
            CylinderFrequency {
                word: indexer.word_at(i).to_key(),
                count,
                frequency,
                expected,
                std_error,
                z,
            }
        })
        .collect();
    Ok(BoundaryEmpiricalReport {
        depth,
        steps,
        trajectories,
        discarded,
        discard_rate: discarded as f64 / n,
        max_abs_z,
        frequencies,
    })
}
