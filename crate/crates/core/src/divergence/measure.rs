use std::collections::BTreeMap;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use super::DivergenceError;
use crate::sum::compensated_sum;

/// Absolute tolerance on the total mass of a probability measure.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Finitely many labelled atoms with non-negative masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "K: Ord + Serialize",
    deserialize = "K: Ord + Deserialize<'de>"
))]
pub struct FiniteMeasure<K: Ord = String> {
    atoms: BTreeMap<K, f64>,
}

impl<K: Ord + Clone + Debug> FiniteMeasure<K> {
    pub fn new(atoms: BTreeMap<K, f64>) -> Result<Self, DivergenceError> {
        for (label, &mass) in &atoms {
            if !(mass >= 0.0) || !mass.is_finite() {
                return Err(DivergenceError::NegativeMass(format!("{label:?}: {mass}")));
            }
        }
        Ok(Self { atoms })
    }

    pub fn from_pairs<I: IntoIterator<Item = (K, f64)>>(pairs: I) -> Result<Self, DivergenceError> {
        let mut atoms = BTreeMap::new();
        for (k, m) in pairs {
            *atoms.entry(k).or_insert(0.0) += m;
        }
        Self::new(atoms)
    }

    /// Re-checks the mass invariants, e.g. after deserialization.
    pub fn validate(&self) -> Result<(), DivergenceError> {
        for (label, &mass) in &self.atoms {
            if !(mass >= 0.0) || !mass.is_finite() {
                return Err(DivergenceError::NegativeMass(format!("{label:?}: {mass}")));
            }
        }
        Ok(())
    }

    pub fn atoms(&self) -> &BTreeMap<K, f64> {
        &self.atoms
    }

    pub fn mass(&self, label: &K) -> f64 {
        self.atoms.get(label).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.atoms.values().copied())
    }

    pub fn is_probability(&self) -> bool {
        (self.total() - 1.0).abs() <= PROBABILITY_TOLERANCE
    }

    pub fn labels(&self) -> impl Iterator<Item = &K> {
        self.atoms.keys()
    }

    pub fn same_labels(&self, other: &Self) -> bool {
        self.atoms.len() == other.atoms.len()
            && self
                .atoms
                .keys()
                .zip(other.atoms.keys())
                .all(|(a, b)| a == b)
    }

    /// Masses in label order.
    pub fn masses(&self) -> Vec<f64> {
        self.atoms.values().copied().collect()
    }

    /// Image measure under a label map.
    pub fn pushforward<L: Ord + Clone + Debug>(&self, map: impl Fn(&K) -> L) -> FiniteMeasure<L> {
        let mut atoms = BTreeMap::new();
        for (k, &m) in &self.atoms {
            *atoms.entry(map(k)).or_insert(0.0) += m;
        }
        FiniteMeasure { atoms }
    }

    /// Product measure with labels `(k, l)`.
    pub fn product<L: Ord + Clone + Debug>(
        &self,
        other: &FiniteMeasure<L>,
    ) -> FiniteMeasure<(K, L)> {
        let mut atoms = BTreeMap::new();
        for (k, &a) in &self.atoms {
            for (l, &b) in &other.atoms {
                atoms.insert((k.clone(), l.clone()), a * b);
            }
        }
        FiniteMeasure { atoms }
    }

    /// `t·self + (1 - t)·other` over the union of labels.
    pub fn mix(&self, other: &Self, t: f64) -> Self {
        let mut atoms: BTreeMap<K, f64> = self
            .atoms
            .iter()
            .map(|(k, &m)| (k.clone(), t * m))
            .collect();
        for (k, &m) in &other.atoms {
            *atoms.entry(k.clone()).or_insert(0.0) += (1.0 - t) * m;
        }
        Self { atoms }
    }

    /// Same measure with every label in `labels` present (missing ones get mass 0).
    pub fn extended_to<'a>(&self, labels: impl IntoIterator<Item = &'a K>) -> Self
    where
        K: 'a,
    {
        let mut atoms = self.atoms.clone();
        for l in labels {
            atoms.entry(l.clone()).or_insert(0.0);
        }
        Self { atoms }
    }
}

/// A base measure `ν`, its translates `gν`, and a finitely supported
/// probability measure `λ` on group-element keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "K: Ord + Serialize, G: Ord + Serialize",
    deserialize = "K: Ord + Deserialize<'de>, G: Ord + Deserialize<'de>"
))]
pub struct MeasureFamily<K: Ord = String, G: Ord = String> {
    pub base: FiniteMeasure<K>,
    pub translates: BTreeMap<G, FiniteMeasure<K>>,
    pub lambda: FiniteMeasure<G>,
}

impl<K: Ord + Clone + Debug, G: Ord + Clone + Debug> MeasureFamily<K, G> {
    pub fn new(
        base: FiniteMeasure<K>,
        translates: BTreeMap<G, FiniteMeasure<K>>,
        lambda: FiniteMeasure<G>,
    ) -> Result<Self, DivergenceError> {
        let family = Self {
            base,
            translates,
            lambda,
        };
        family.validate()?;
        Ok(family)
    }

    pub fn validate(&self) -> Result<(), DivergenceError> {
        for (g, t) in &self.translates {
            if !t.same_labels(&self.base) {
                return Err(DivergenceError::AtomMismatch(format!(
                    "translate {g:?} does not share the base label set"
                )));
            }
        }
        if !self.lambda.is_probability() {
            return Err(DivergenceError::NotProbability(self.lambda.total()));
        }
        Ok(())
    }

    /// Applies a label map consistently to the base and every translate.
    pub fn factor<L: Ord + Clone + Debug>(&self, map: impl Fn(&K) -> L) -> MeasureFamily<L, G> {
        MeasureFamily {
            base: self.base.pushforward(&map),
            translates: self
                .translates
                .iter()
                .map(|(g, t)| (g.clone(), t.pushforward(&map)))
                .collect(),
            lambda: self.lambda.clone(),
        }
    }
}
