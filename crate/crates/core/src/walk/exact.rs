use std::collections::BTreeMap;

use serde::Serialize;

use super::{Group, MeasureMatrix, StochasticSequence, WalkError};
use crate::sum::CompensatedSum;

/// A state `X_n = (i, g)` of the sheeted walk on `V_n = [ℓ_n] × G`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct WalkState<E> {
    pub n: usize,
    pub i: usize,
    pub g: E,
}

/// A measure on `V_n` for a fixed level `n ≥ -1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeveledMeasure<E: Ord> {
    pub level: i64,
    pub entries: BTreeMap<(usize, E), f64>,
}

impl<E: Clone + Ord> LeveledMeasure<E> {
    pub fn point_mass(level: i64, sheet: usize, g: E) -> Self {
        Self {
            level,
            entries: BTreeMap::from([((sheet, g), 1.0)]),
        }
    }

    pub fn mass(&self, sheet: usize, g: &E) -> f64 {
        self.entries
            .get(&(sheet, g.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries
            .values()
            .copied()
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sup-norm difference over the union of supports.
    pub fn max_difference(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, v) in &self.entries {
            worst = worst.max((v - other.entries.get(k).copied().unwrap_or(0.0)).abs());
        }
        for (k, v) in &other.entries {
            if !self.entries.contains_key(k) {
                worst = worst.max(v.abs());
            }
        }
        worst
    }

    pub fn to_json_value<G: Group<Element = E>>(&self, group: &G) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|((j, g), m)| serde_json::json!({"sheet": j, "elem": group.format_element(g), "mass": m}))
            .collect();
        serde_json::json!({"level": self.level, "entries": entries})
    }
}

fn accumulate<E: Ord>(acc: BTreeMap<(usize, E), CompensatedSum>) -> BTreeMap<(usize, E), f64> {
    acc.into_iter()
        .map(|(k, s)| (k, s.value()))
        .filter(|(_, m)| *m != 0.0)
        .collect()
}

/// One step: `P_{n+1}(j, g·h) += P_n(i, g) σ^{(n+1)}_{ij}(h)`.
pub fn propagate<G: Group>(
    s: &StochasticSequence<G>,
    current: &LeveledMeasure<G::Element>,
    budget: usize,
) -> Result<LeveledMeasure<G::Element>, WalkError> {
    let level = current.level + 1;
    let m = s.matrix(level as usize);
    let group = s.group();
    let mut acc: BTreeMap<(usize, G::Element), CompensatedSum> = BTreeMap::new();
    for ((i, g), &p) in &current.entries {
        if *i >= m.rows() {
            return Err(WalkError::InvalidParameter(format!(
                "sheet {i} out of range at level {}",
                current.level
            )));
        }
        for j in 0..m.cols() {
            for (h, w) in m.cell(*i, j) {
                acc.entry((j, group.multiply(g, h))).or_default().add(p * w);
            }
        }
        if acc.len() > budget {
            return Err(WalkError::BudgetExceeded {
                level,
                size: acc.len(),
            });
        }
    }
    Ok(LeveledMeasure {
        level,
        entries: accumulate(acc),
    })
}

/// Row `r` of `σ^{(t+1)} ∗ … ∗ σ^{(n)}` as a measure on `V_n`; the point mass
/// at `(r, e)` on level `t` when `n = t`.
pub fn distribution_from<G: Group>(
    s: &StochasticSequence<G>,
    t: i64,
    r: usize,
    n: i64,
    budget: usize,
) -> Result<LeveledMeasure<G::Element>, WalkError> {
    if t < -1 || n < t {
        return Err(WalkError::InvalidParameter(format!(
            "levels must satisfy -1 ≤ t ≤ n, got t={t}, n={n}"
        )));
    }
    if r >= s.ell(t) {
        return Err(WalkError::InvalidParameter(format!(
            "sheet {r} out of range at level {t}"
        )));
    }
    let mut current = LeveledMeasure::point_mass(t, r, s.group().identity());
    while current.level < n {
        current = propagate(s, &current, budget)?;
    }
    Ok(current)
}

/// `ℙ(I_n = j, Y_n = g) = (σ^{(0)} ∗ … ∗ σ^{(n)})_j(g)`.
pub fn exact_distribution<G: Group>(
    s: &StochasticSequence<G>,
    n: usize,
    budget: usize,
) -> Result<LeveledMeasure<G::Element>, WalkError> {
    distribution_from(s, -1, 0, n as i64, budget)
}

/// Matrix convolution `(A ∗ B)_{ik}(g) = Σ_j Σ_{xy=g} A_{ij}(x) B_{jk}(y)`.
pub fn convolve_matrices<G: Group>(
    group: &G,
    a: &MeasureMatrix<G::Element>,
    b: &MeasureMatrix<G::Element>,
    budget: usize,
) -> Result<MeasureMatrix<G::Element>, WalkError> {
    if a.cols() != b.rows() {
        return Err(WalkError::InvalidParameter(
            "matrix shapes do not chain".into(),
        ));
    }
    let mut size = 0;
    let mut cells = Vec::with_capacity(a.rows());
    for i in 0..a.rows() {
        let mut row = Vec::with_capacity(b.cols());
        for k in 0..b.cols() {
            let mut acc: BTreeMap<G::Element, CompensatedSum> = BTreeMap::new();
            for j in 0..a.cols() {
                for (x, p) in a.cell(i, j) {
                    for (y, q) in b.cell(j, k) {
                        acc.entry(group.multiply(x, y)).or_default().add(p * q);
                    }
                }
            }
            size += acc.len();
            if size > budget {
                return Err(WalkError::BudgetExceeded { level: 0, size });
            }
            row.push(acc.into_iter().map(|(g, s)| (g, s.value())).collect());
        }
        cells.push(row);
    }
    MeasureMatrix::new(cells)
}

/// `σ^{(from)} ∗ … ∗ σ^{(to)}`, associated from the right.
pub fn matrix_product<G: Group>(
    s: &StochasticSequence<G>,
    from: usize,
    to: usize,
    budget: usize,
) -> Result<MeasureMatrix<G::Element>, WalkError> {
    if from > to {
        return Err(WalkError::InvalidParameter(format!(
            "empty product {from}..{to}"
        )));
    }
    let mut product = s.matrix(to).clone();
    for n in (from..to).rev() {
        product =
            convolve_matrices(s.group(), s.matrix(n), &product, budget).map_err(|e| match e {
                WalkError::BudgetExceeded { size, .. } => WalkError::BudgetExceeded {
                    level: n as i64,
                    size,
                },
                other => other,
            })?;
    }
    Ok(product)
}

/// Sup-norm gap between `P_{n+1}` computed by propagating `P_n` one step and
/// by the right-associated matrix product `σ^{(0)} ∗ (σ^{(1)} ∗ … ∗ σ^{(n+1)})`.
pub fn chapman_kolmogorov_residual<G: Group>(
    s: &StochasticSequence<G>,
    n: usize,
    budget: usize,
) -> Result<f64, WalkError> {
    let stepped = propagate(s, &exact_distribution(s, n, budget)?, budget)?;
    let product = matrix_product(s, 0, n + 1, budget)?;
    let mut entries = BTreeMap::new();
    for j in 0..product.cols() {
        for (g, m) in product.cell(0, j) {
            entries.insert((j, g.clone()), *m);
        }
    }
    let by_product = LeveledMeasure {
        level: n as i64 + 1,
        entries,
    };
    Ok(stepped.max_difference(&by_product))
}
