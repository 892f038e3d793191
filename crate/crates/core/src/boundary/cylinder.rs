use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{BoundaryError, GeneratorMeasure, QVector};
use crate::free_group::{generator_letters, letter_code, Letter, ReducedWord, WordIndexer};

const MASS_TOLERANCE: f64 = 1e-12;

/// How a depth-`n` cylinder table extends to deeper cylinders: the next
/// letter is drawn conditionally on the last one.
#[derive(Debug, Clone, PartialEq)]
pub enum TailRule {
    /// The conditional law of `ν_μ`: `P(next = x | last = y) = q_y v_x / v_y`.
    Harmonic(QVector),
    /// Each of the `2d - 1` admissible letters with equal probability.
    Uniform,
}

impl TailRule {
    /// Conditional probability of appending `next` after a word ending in `last`.
    pub fn conditional(&self, rank: u32, last: Letter, next: Letter) -> f64 {
        if next == -last {
            return 0.0;
        }
        match self {
            TailRule::Harmonic(q) => q.q(last) * q.v(next) / q.v(last),
            TailRule::Uniform => 1.0 / (2 * rank - 1) as f64,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TailRule::Harmonic(_) => "harmonic",
            TailRule::Uniform => "uniform",
        }
    }
}

/// Masses of the depth-`n` cylinders `C_w ⊂ ∂F_d`, stored in lexicographic
/// word order, plus an optional tail rule that turns the table into a genuine
/// boundary measure.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderMeasure {
    rank: u32,
    depth: usize,
    masses: Vec<f64>,
    tail: Option<TailRule>,
}

impl CylinderMeasure {
    pub fn new(
        rank: u32,
        depth: usize,
        masses: Vec<f64>,
        tail: Option<TailRule>,
    ) -> Result<Self, BoundaryError> {
        if rank < 2 {
            return Err(BoundaryError::RankTooSmall(rank));
        }
        if depth < 1 {
            return Err(BoundaryError::InvalidParameter(
                "depth must be at least 1".into(),
            ));
        }
        let count = WordIndexer::new(rank, depth).count();
        if masses.len() != count {
            return Err(BoundaryError::InvalidMeasure(format!(
                "expected {count} cylinder masses at depth {depth}, got {}",
                masses.len()
            )));
        }
        if let Some(bad) = masses.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
            return Err(BoundaryError::InvalidMeasure(format!(
                "negative or non-finite mass {bad}"
            )));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(BoundaryError::InvalidMeasure(format!("total mass {total}")));
        }
        if let Some(TailRule::Harmonic(q)) = &tail {
            if q.rank() != rank {
                return Err(BoundaryError::InvalidMeasure(
                    "tail rank differs from measure rank".into(),
                ));
            }
        }
        Ok(Self {
            rank,
            depth,
            masses,
            tail,
        })
    }

    /// Builds a measure from `(word, mass)` pairs; absent cylinders get mass 0.
    pub fn from_words<'a>(
        rank: u32,
        depth: usize,
        entries: impl IntoIterator<Item = (&'a ReducedWord, f64)>,
        tail: Option<TailRule>,
    ) -> Result<Self, BoundaryError> {
        let indexer = WordIndexer::new(rank, depth.max(1));
        let mut masses = vec![0.0; indexer.count()];
        for (w, m) in entries {
            if w.len() != depth || w.rank() != rank {
                return Err(BoundaryError::InvalidMeasure(format!(
                    "word {w} is not a depth-{depth} word of rank {rank}"
                )));
            }
            masses[indexer.index_of(w.letters())] += m;
        }
        Self::new(rank, depth, masses, tail)
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn tail(&self) -> Option<&TailRule> {
        self.tail.as_ref()
    }

    pub fn indexer(&self) -> WordIndexer {
        WordIndexer::new(self.rank, self.depth)
    }

    /// `ν(C_w)` for a word of length at most the stored depth.
    pub fn mass(&self, w: &ReducedWord) -> Result<f64, BoundaryError> {
        if w.is_identity() {
            return Ok(self.masses.iter().sum());
        }
        if w.len() > self.depth {
            return Err(BoundaryError::DepthMismatch {
                expected: self.depth,
                found: w.len(),
            });
        }
        if w.len() == self.depth {
            return Ok(self.masses[self.indexer().index_of(w.letters())]);
        }
        self.marginal(w.len())?.mass(w)
    }

    /// Entries as `(word, mass)` in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (ReducedWord, f64)> + '_ {
        let ix = self.indexer();
        self.masses
            .iter()
            .enumerate()
            .map(move |(i, &m)| (ix.word_at(i), m))
    }

    pub fn with_masses(&self, masses: Vec<f64>) -> Result<Self, BoundaryError> {
        Self::new(self.rank, self.depth, masses, self.tail.clone())
    }

    pub fn with_tail(mut self, tail: Option<TailRule>) -> Self {
        self.tail = tail;
        self
    }

    /// Induced masses on cylinders of depth `m ≤ depth`.
    pub fn marginal(&self, m: usize) -> Result<Self, BoundaryError> {
        if m < 1 || m > self.depth {
            return Err(BoundaryError::DepthMismatch {
                expected: self.depth,
                found: m,
            });
        }
        if m == self.depth {
            return Ok(self.clone());
        }
        let block = (2 * self.rank as usize - 1).pow((self.depth - m) as u32);
        let masses = self.masses.chunks(block).map(|c| c.iter().sum()).collect();
        Ok(Self {
            rank: self.rank,
            depth: m,
            masses,
            tail: None,
        })
    }

    /// Extends the table to a deeper level through the tail rule.
    pub fn refine(&self, depth: usize) -> Result<Self, BoundaryError> {
        if depth < self.depth {
            return self.marginal(depth);
        }
        let tail = self.tail.as_ref().ok_or(BoundaryError::MissingTailRule)?;
        let rank = self.rank;
        let branching = 2 * rank as usize - 1;
        let letters = generator_letters(rank);
        let mut masses = self.masses.clone();
        let mut current_depth = self.depth;
        while current_depth < depth {
            let ix = WordIndexer::new(rank, current_depth);
            let mut next = vec![0.0; masses.len() * branching];
            for (i, &m) in masses.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let last = ix.letters_at(i)[current_depth - 1];
                let forbidden = letter_code(rank, -last);
                for &x in &letters {
                    let c = letter_code(rank, x);
                    if c == forbidden {
                        continue;
                    }
                    let rel = if c > forbidden { c - 1 } else { c };
                    next[i * branching + rel] = m * tail.conditional(rank, last, x);
                }
            }
            masses = next;
            current_depth += 1;
        }
        Ok(Self {
            rank,
            depth,
            masses,
            tail: self.tail.clone(),
        })
    }

    /// Max absolute difference against another table of the same shape.
    pub fn max_difference(&self, other: &Self) -> f64 {
        self.masses
            .iter()
            .zip(&other.masses)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Maps each depth-`m + |g|` cylinder `C_u` to the depth-`m` cylinder
/// containing `g·C_u = C_{reduce(gu)}`.
#[derive(Debug, Clone)]
pub struct PushforwardPlan {
    source_depth: usize,
    target_depth: usize,
    rank: u32,
    targets: Vec<u32>,
}

impl PushforwardPlan {
    pub fn new(g: &ReducedWord, source_depth: usize) -> Result<Self, BoundaryError> {
        let rank = g.rank();
        if source_depth < g.len() + 1 {
            return Err(BoundaryError::DepthMismatch {
                expected: g.len() + 1,
                found: source_depth,
            });
        }
        let target_depth = source_depth - g.len();
        let source = WordIndexer::new(rank, source_depth);
        let target = WordIndexer::new(rank, target_depth);
        let gl = g.letters();
        let targets = (0..source.count())
            .map(|i| {
                let u = source.letters_at(i);
                let mut k = 0;
                while k < gl.len() && u[k] == -gl[gl.len() - 1 - k] {
                    k += 1;
                }
                target.index_of_concat(&gl[..gl.len() - k], &u[k..]) as u32
            })
            .collect();
        Ok(Self {
            source_depth,
            target_depth,
            rank,
            targets,
        })
    }

    pub fn target_depth(&self) -> usize {
        self.target_depth
    }

    pub fn apply_masses(&self, masses: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; WordIndexer::new(self.rank, self.target_depth).count()];
        for (&t, &m) in self.targets.iter().zip(masses) {
            out[t as usize] += m;
        }
        out
    }

    pub fn apply(&self, nu: &CylinderMeasure) -> Result<CylinderMeasure, BoundaryError> {
        if nu.depth() != self.source_depth || nu.rank() != self.rank {
            return Err(BoundaryError::DepthMismatch {
                expected: self.source_depth,
                found: nu.depth(),
            });
        }
        Ok(CylinderMeasure {
            rank: self.rank,
            depth: self.target_depth,
            masses: self.apply_masses(nu.masses()),
            tail: None,
        })
    }
}

/// `gν` on depth-`m` cylinders from `ν` given at depth `m + |g|`:
/// `(gν)(C_w) = Σ { ν(C_u) : |u| = m + |g|, w is a prefix of reduce(gu) }`.
///
/// The result carries no tail rule.
pub fn pushforward(
    g: &ReducedWord,
    nu: &CylinderMeasure,
) -> Result<CylinderMeasure, BoundaryError> {
    if g.rank() != nu.rank() {
        return Err(BoundaryError::RankMismatch(g.rank(), nu.rank()));
    }
    PushforwardPlan::new(g, nu.depth())?.apply(nu)
}

#[derive(Serialize, Deserialize)]
struct CylinderMeasureJson {
    d: u32,
    depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<GeneratorMeasure>,
    masses: BTreeMap<String, f64>,
}

impl CylinderMeasure {
    /// Serializable form; a harmonic tail is recorded through the measure `μ`
    /// that generated it when supplied.
    pub fn to_json_value(&self, mu: Option<&GeneratorMeasure>) -> serde_json::Value {
        let raw = CylinderMeasureJson {
            d: self.rank,
            depth: self.depth,
            tail: self.tail.as_ref().map(|t| t.name().to_string()),
            mu: mu.cloned(),
            masses: self.entries().map(|(w, m)| (w.to_key(), m)).collect(),
        };
        serde_json::to_value(raw).expect("cylinder measure serializes")
    }

    /// Parses the JSON schema. A `"harmonic"` tail needs `μ`, taken from the
    /// document's `"mu"` field or from `default_mu`.
    pub fn from_json_value(
        value: serde_json::Value,
        default_mu: Option<&GeneratorMeasure>,
    ) -> Result<Self, BoundaryError> {
        let raw: CylinderMeasureJson =
            serde_json::from_value(value).map_err(|e| BoundaryError::Parse(e.to_string()))?;
        parse_raw(raw, default_mu)
    }
}

fn parse_raw(
    raw: CylinderMeasureJson,
    default_mu: Option<&GeneratorMeasure>,
) -> Result<CylinderMeasure, BoundaryError> {
    let tail = match raw.tail.as_deref() {
        None => None,
        Some("uniform") => Some(TailRule::Uniform),
        Some("harmonic") => {
            let mu = raw.mu.as_ref().or(default_mu).ok_or_else(|| {
                BoundaryError::Parse("harmonic tail needs a generating measure \"mu\"".into())
            })?;
            Some(TailRule::Harmonic(super::solve_q_tight(mu)?))
        }
        Some(other) => return Err(BoundaryError::Parse(format!("unknown tail rule '{other}'"))),
    };
    let mut words = Vec::with_capacity(raw.masses.len());
    for (k, m) in &raw.masses {
        let w = ReducedWord::parse_reduced_key(k, raw.d)?;
        words.push((w, *m));
    }
    CylinderMeasure::from_words(raw.d, raw.depth, words.iter().map(|(w, m)| (w, *m)), tail)
}

impl Serialize for CylinderMeasure {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json_value(None).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CylinderMeasure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = CylinderMeasureJson::deserialize(deserializer)?;
        parse_raw(raw, None).map_err(D::Error::custom)
    }
}
