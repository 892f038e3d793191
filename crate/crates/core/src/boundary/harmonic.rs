use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{BoundaryError, CylinderMeasure, TailRule};
use crate::free_group::{code_letter, generator_letters, letter_code, Letter, WordIndexer};

/// Damping factor of the first-passage fixed-point iteration.
pub const Q_DAMPING: f64 = 0.5;
/// Iteration cap of [`solve_q`].
pub const Q_MAX_ITERATIONS: usize = 100_000;

const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// A generating symmetric probability measure on `{a_{±1}, …, a_{±d}}`.
///
/// Weights are stored by letter code (see [`crate::free_group::letter_code`]).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMeasure {
    rank: u32,
    weights: Vec<f64>,
}

impl GeneratorMeasure {
    pub fn new(
        rank: u32,
        weights_by_letter: &BTreeMap<Letter, f64>,
    ) -> Result<Self, BoundaryError> {
        if rank < 1 {
            return Err(BoundaryError::InvalidMeasure(format!("rank {rank}")));
        }
        let mut weights = vec![f64::NAN; 2 * rank as usize];
        for (&letter, &w) in weights_by_letter {
            if letter == 0 || letter.unsigned_abs() > rank {
                return Err(BoundaryError::InvalidMeasure(format!(
                    "letter {letter} outside rank {rank}"
                )));
            }
            weights[letter_code(rank, letter)] = w;
        }
        Self::from_codes(rank, weights)
    }

    /// Builds a measure from weights indexed by letter code.
    pub fn from_codes(rank: u32, weights: Vec<f64>) -> Result<Self, BoundaryError> {
        let m = Self { rank, weights };
        m.validate()?;
        Ok(m)
    }

    /// `p_{±j} = half[j-1] / (2 Σ half)`.
    pub fn symmetric(half: &[f64]) -> Result<Self, BoundaryError> {
        let rank = half.len() as u32;
        let total: f64 = half.iter().sum::<f64>() * 2.0;
        let weights = generator_letters(rank)
            .into_iter()
            .map(|l| half[l.unsigned_abs() as usize - 1] / total)
            .collect();
        Self::from_codes(rank, weights)
    }

    pub fn uniform(rank: u32) -> Self {
        let w = 1.0 / (2 * rank) as f64;
        Self {
            rank,
            weights: vec![w; 2 * rank as usize],
        }
    }

    fn validate(&self) -> Result<(), BoundaryError> {
        let d = self.rank;
        for (code, &w) in self.weights.iter().enumerate() {
            let letter = code_letter(d, code);
            if w.is_nan() {
                return Err(BoundaryError::InvalidMeasure(format!(
                    "missing weight for {letter}"
                )));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(BoundaryError::InvalidMeasure(format!(
                    "weight of {letter} must be positive, got {w}"
                )));
            }
            let mirror = self.weights[letter_code(d, -letter)];
            if (w - mirror).abs() > SIMPLEX_TOLERANCE {
                return Err(BoundaryError::InvalidMeasure(format!(
                    "not symmetric at {letter}: {w} vs {mirror}"
                )));
            }
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(BoundaryError::InvalidMeasure(format!("total mass {total}")));
        }
        Ok(())
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn weight(&self, letter: Letter) -> f64 {
        self.weights[letter_code(self.rank, letter)]
    }

    /// Weights by letter code.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `p_1, …, p_d`.
    pub fn half_weights(&self) -> Vec<f64> {
        (1..=self.rank as Letter).map(|j| self.weight(j)).collect()
    }

    pub fn letters(&self) -> Vec<Letter> {
        generator_letters(self.rank)
    }

    /// Sup-norm distance between two measures of equal rank.
    pub fn distance(&self, other: &Self) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct GeneratorMeasureJson {
    d: u32,
    p: BTreeMap<String, f64>,
}

impl Serialize for GeneratorMeasure {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let p = generator_letters(self.rank)
            .into_iter()
            .map(|l| (l.to_string(), self.weight(l)))
            .collect();
        GeneratorMeasureJson { d: self.rank, p }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GeneratorMeasure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = GeneratorMeasureJson::deserialize(deserializer)?;
        let mut by_letter = BTreeMap::new();
        for (k, w) in raw.p {
            let l: Letter = k
                .trim()
                .parse()
                .map_err(|_| D::Error::custom(format!("bad letter '{k}'")))?;
            by_letter.insert(l, w);
        }
        GeneratorMeasure::new(raw.d, &by_letter).map_err(D::Error::custom)
    }
}

/// First-passage probabilities `q_j` and the derived `v_j = q_j/(1+q_j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QVector {
    rank: u32,
    q: Vec<f64>,
    v: Vec<f64>,
    /// Iterations used by the solver.
    #[serde(skip)]
    iterations: usize,
}

impl QVector {
    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn q(&self, letter: Letter) -> f64 {
        self.q[letter_code(self.rank, letter)]
    }

    pub fn v(&self, letter: Letter) -> f64 {
        self.v[letter_code(self.rank, letter)]
    }

    /// `q` by letter code.
    pub fn q_codes(&self) -> &[f64] {
        &self.q
    }

    /// `v` by letter code.
    pub fn v_codes(&self) -> &[f64] {
        &self.v
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn v_sum(&self) -> f64 {
        self.v.iter().sum()
    }

    /// Max over `j` of `|q_j - p_j - q_j Σ_{i≠j} p_i q_{-i}|`.
    pub fn residual(&self, mu: &GeneratorMeasure) -> f64 {
        residuals(self.rank, mu.weights(), &self.q)
            .into_iter()
            .fold(0.0, |m, r| m.max(r.abs()))
    }
}

fn residuals(rank: u32, p: &[f64], q: &[f64]) -> Vec<f64> {
    let mirror: Vec<usize> = (0..q.len())
        .map(|c| letter_code(rank, -code_letter(rank, c)))
        .collect();
    let total: f64 = (0..q.len()).map(|i| p[i] * q[mirror[i]]).sum();
    (0..q.len())
        .map(|j| {
            let others = total - p[j] * q[mirror[j]];
            q[j] - p[j] - q[j] * others
        })
        .collect()
}

/// Solves `q_j = p_j + q_j Σ_{i≠j} p_i q_{-i}` for the first-passage
/// probabilities by damped fixed-point iteration.
///
/// The iteration starts from `q = p`, below the minimal fixed point; the map
/// is monotone, so the iterates increase to the solution in `(0,1)` rather
/// than the spurious fixed point `q ≡ 1`.
pub fn solve_q(mu: &GeneratorMeasure, tol: f64) -> Result<QVector, BoundaryError> {
    if !(tol > 0.0) {
        return Err(BoundaryError::InvalidParameter(format!(
            "tol must be positive, got {tol}"
        )));
    }
    iterate_q(mu, tol, None)
}

/// Solver tolerance aimed for wherever `q` feeds further computation.
pub const INTERNAL_Q_TOLERANCE: f64 = 1e-15;
/// Residual accepted by [`solve_q_tight`] once the iteration stalls.
pub const ACCEPTED_Q_RESIDUAL: f64 = 1e-13;

/// Iterates until the residual drops below [`INTERNAL_Q_TOLERANCE`] or stops
/// improving at floating-point resolution, then accepts the result if the
/// residual is below [`ACCEPTED_Q_RESIDUAL`].
pub fn solve_q_tight(mu: &GeneratorMeasure) -> Result<QVector, BoundaryError> {
    iterate_q(mu, INTERNAL_Q_TOLERANCE, Some(ACCEPTED_Q_RESIDUAL))
}

fn iterate_q(
    mu: &GeneratorMeasure,
    tol: f64,
    accept_on_stall: Option<f64>,
) -> Result<QVector, BoundaryError> {
    const STALL_WINDOW: usize = 200;
    let rank = mu.rank();
    if rank < 2 {
        return Err(BoundaryError::RankTooSmall(rank));
    }
    let p = mu.weights();
    let n = p.len();
    let mirror: Vec<usize> = (0..n)
        .map(|c| letter_code(rank, -code_letter(rank, c)))
        .collect();
    let mut q = p.to_vec();
    let mut next = vec![0.0; n];
    let mut last_residual = f64::INFINITY;
    let mut best = f64::INFINITY;
    let mut since_best = 0usize;
    let finish = |q: Vec<f64>, iterations: usize| {
        let v = q.iter().map(|&x| x / (1.0 + x)).collect();
        QVector {
            rank,
            q,
            v,
            iterations,
        }
    };
    for iteration in 0..Q_MAX_ITERATIONS {
        let total: f64 = (0..n).map(|i| p[i] * q[mirror[i]]).sum();
        let mut residual: f64 = 0.0;
        for j in 0..n {
            let rhs = p[j] + q[j] * (total - p[j] * q[mirror[j]]);
            residual = residual.max((q[j] - rhs).abs());
            next[j] = (1.0 - Q_DAMPING) * q[j] + Q_DAMPING * rhs;
        }
        last_residual = residual;
        if residual < tol {
            return Ok(finish(q, iteration));
        }
        if let Some(accept) = accept_on_stall {
            if residual < best {
                best = residual;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= STALL_WINDOW && best < accept {
                    return Ok(finish(q, iteration));
                }
            }
        }
        std::mem::swap(&mut q, &mut next);
    }
    Err(BoundaryError::NoConvergence {
        iterations: Q_MAX_ITERATIONS,
        residual: last_residual,
        trace: Vec::new(),
    })
}

/// The harmonic measure `ν_μ` on depth-`n` cylinders:
/// `ν_μ(C_w) = (Π_{k<n} q_{w_k}) · v_{w_n}`, with the harmonic tail rule.
pub fn harmonic_measure(
    mu: &GeneratorMeasure,
    depth: usize,
) -> Result<CylinderMeasure, BoundaryError> {
    let q = solve_q_tight(mu)?;
    harmonic_measure_from_q(&q, depth)
}

pub fn harmonic_measure_from_q(
    q: &QVector,
    depth: usize,
) -> Result<CylinderMeasure, BoundaryError> {
    if depth < 1 {
        return Err(BoundaryError::InvalidParameter(
            "depth must be at least 1".into(),
        ));
    }
    let rank = q.rank();
    let indexer = WordIndexer::new(rank, depth);
    let masses = (0..indexer.count())
        .map(|i| {
            let letters = indexer.letters_at(i);
            let head: f64 = letters[..depth - 1].iter().map(|&l| q.q(l)).product();
            head * q.v(letters[depth - 1])
        })
        .collect();
    CylinderMeasure::new(rank, depth, masses, Some(TailRule::Harmonic(q.clone())))
}

/// Max over all cylinders of depth `1..nu.depth()` of `|(μ∗ν)(C_w) - ν(C_w)|`,
/// where `μ∗ν = Σ_j p_j a_jν` is evaluated through cylinder pushforwards.
pub fn stationarity_residual(
    mu: &GeneratorMeasure,
    nu: &CylinderMeasure,
) -> Result<f64, BoundaryError> {
    if nu.depth() < 2 {
        return Err(BoundaryError::InvalidParameter(
            "stationarity needs a measure of depth at least 2".into(),
        ));
    }
    let mut worst: f64 = 0.0;
    for m in 1..nu.depth() {
        let target = nu.marginal(m)?;
        let source = nu.marginal(m + 1)?;
        let mut convolved = vec![0.0; target.masses().len()];
        for letter in mu.letters() {
            let g = crate::free_group::ReducedWord::generator(mu.rank(), letter)?;
            let pushed = super::pushforward(&g, &source)?;
            let w = mu.weight(letter);
            for (acc, m) in convolved.iter_mut().zip(pushed.masses()) {
                *acc += w * m;
            }
        }
        for (a, b) in convolved.iter().zip(target.masses()) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_f2_gives_one_third() {
        let q = solve_q(&GeneratorMeasure::uniform(2), 1e-14).unwrap();
        for l in [-2, -1, 1, 2] {
            assert!((q.q(l) - 1.0 / 3.0).abs() < 1e-13);
            assert!((q.v(l) - 0.25).abs() < 1e-13);
        }
    }

    #[test]
    fn uniform_fd_root_of_quadratic() {
        for d in 2..=6u32 {
            let q = solve_q(&GeneratorMeasure::uniform(d), 1e-15).unwrap();
            let expected = 1.0 / (2 * d - 1) as f64;
            // root of (2d-1)q² - 2d q + 1 = 0
            let k = (2 * d - 1) as f64;
            assert!((k * expected * expected - 2.0 * d as f64 * expected + 1.0).abs() < 1e-15);
            for &x in q.q_codes() {
                assert!((x - expected).abs() < 1e-13, "d={d}: {x}");
            }
        }
    }

    #[test]
    fn asymmetric_example() {
        let mu = GeneratorMeasure::symmetric(&[0.4, 0.1]).unwrap();
        assert!((mu.weight(1) - 0.4).abs() < 1e-15);
        let q = solve_q(&mu, 1e-13).unwrap();
        assert!(q.residual(&mu) < 1e-12);
        assert!((q.q(1) - 0.5325).abs() < 1e-3, "{}", q.q(1));
        assert!((q.q(2) - 0.1797).abs() < 1e-3, "{}", q.q(2));
        assert!((q.v_sum() - 1.0).abs() < 1e-10);
        assert_eq!(q.q(1), q.q(-1));
    }

    #[test]
    fn rank_one_is_rejected() {
        let mu = GeneratorMeasure::uniform(1);
        assert_eq!(solve_q(&mu, 1e-12), Err(BoundaryError::RankTooSmall(1)));
    }

    #[test]
    fn invalid_measures_are_rejected() {
        assert!(GeneratorMeasure::from_codes(2, vec![0.25, 0.25, 0.3, 0.2]).is_err());
        assert!(GeneratorMeasure::from_codes(2, vec![0.5, 0.0, 0.0, 0.5]).is_err());
        assert!(GeneratorMeasure::from_codes(2, vec![0.3, 0.3, 0.3, 0.3]).is_err());
    }

    #[test]
    fn harmonic_masses_match_examples() {
        let nu1 = harmonic_measure(&GeneratorMeasure::uniform(2), 1).unwrap();
        for &m in nu1.masses() {
            assert!((m - 0.25).abs() < 1e-14);
        }
        let nu2 = harmonic_measure(&GeneratorMeasure::uniform(2), 2).unwrap();
        let w = crate::free_group::reduce(&[1, 2], 2).unwrap();
        assert!((nu2.mass(&w).unwrap() - 1.0 / 12.0).abs() < 1e-14);
        let row: f64 = [-2, 1, 2]
            .iter()
            .map(|&j| {
                nu2.mass(&crate::free_group::reduce(&[1, j], 2).unwrap())
                    .unwrap()
            })
            .sum();
        assert!((row - 0.25).abs() < 1e-14);
        assert!(stationarity_residual(&GeneratorMeasure::uniform(2), &nu2).unwrap() < 1e-12);

        let mu = GeneratorMeasure::symmetric(&[0.4, 0.1]).unwrap();
        let q = solve_q(&mu, 1e-14).unwrap();
        let nu = harmonic_measure(&mu, 1).unwrap();
        let a1 = crate::free_group::reduce(&[1], 2).unwrap();
        assert!((nu.mass(&a1).unwrap() - q.q(1) / (1.0 + q.q(1))).abs() < 1e-13);
        assert!((nu.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_schema() {
        let mu: GeneratorMeasure =
            serde_json::from_str(r#"{"d": 2, "p": {"1": 0.4, "-1": 0.4, "2": 0.1, "-2": 0.1}}"#)
                .unwrap();
        assert_eq!(mu.weight(-2), 0.1);
        let back: GeneratorMeasure =
            serde_json::from_str(&serde_json::to_string(&mu).unwrap()).unwrap();
        assert_eq!(back, mu);
        assert!(serde_json::from_str::<GeneratorMeasure>(
            r#"{"d": 2, "p": {"1": 0.5, "-1": 0.5}}"#
        )
        .is_err());
    }
}
