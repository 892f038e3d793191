use std::collections::BTreeMap;

use serde::Serialize;

use super::{propagate, Group, LeveledMeasure, StochasticSequence, WalkError};
use crate::sum::CompensatedSum;

/// `ν^{(t)}_{r,a;K}` on the truncation `⊔_{n≤N} {n} × V_n` of
/// `E = ⊔_n {n} × V_n`:
///
/// `ν(n, j, g) = (1-a)/a^{t+1+K} · 1_{n ≥ t+1+K} · a^n · (σ^{(t+1)} ∗ … ∗ σ^{(n)})_{r,j}(g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbelMeasure<E: Ord> {
    pub t: i64,
    pub r: usize,
    pub a: f64,
    pub k: u32,
    pub truncation: i64,
    /// Keyed by `(n, j, g)`.
    pub entries: BTreeMap<(i64, usize, E), f64>,
    /// `Σ_{n > N}` of the level weights, `a^{N+1-(t+1+K)}`.
    pub tail_mass: f64,
}

impl<E: Clone + Ord> AbelMeasure<E> {
    pub fn first_level(&self) -> i64 {
        self.t + 1 + self.k as i64
    }

    /// `(1-a)/a^{t+1+K} · a^n` for `n ≥ t+1+K`, else 0.
    pub fn level_weight(&self, n: i64) -> f64 {
        level_weight(self.a, self.first_level(), n)
    }

    pub fn stored_total(&self) -> f64 {
        self.entries
            .values()
            .copied()
            .collect::<CompensatedSum>()
            .value()
    }

    /// Stored mass on level `n`.
    pub fn level_total(&self, n: i64) -> f64 {
        self.entries
            .iter()
            .filter(|((m, _, _), _)| *m == n)
            .map(|(_, v)| *v)
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn to_json_value<G: Group<Element = E>>(&self, group: &G) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|((n, j, g), m)| serde_json::json!({"n": n, "sheet": j, "elem": group.format_element(g), "mass": m}))
            .collect();
        serde_json::json!({
            "t": self.t, "r": self.r, "a": self.a, "K": self.k,
            "truncation": self.truncation, "tail_mass": self.tail_mass,
            "stored_total": self.stored_total(), "entries": entries,
        })
    }
}

fn level_weight(a: f64, first: i64, n: i64) -> f64 {
    if n < first {
        0.0
    } else {
        (1.0 - a) * a.powi((n - first) as i32)
    }
}

/// Smallest `m ≥ 0` with `a^m < eps`.
fn geometric_cutoff(a: f64, eps: f64) -> i64 {
    let mut m = ((eps.ln() / a.ln()).floor() as i64).max(0);
    while a.powi(m as i32) >= eps {
        m += 1;
    }
    while m > 0 && a.powi((m - 1) as i32) < eps {
        m -= 1;
    }
    m
}

fn check_parameters(a: f64, eps: f64) -> Result<(), WalkError> {
    if !(a > 0.0 && a < 1.0) {
        return Err(WalkError::InvalidParameter(format!(
            "a must lie in (0,1), got {a}"
        )));
    }
    if !(eps > 0.0) {
        return Err(WalkError::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    Ok(())
}

/// Builds `ν^{(t)}_{r,a;K}` truncated at the smallest `N` whose geometric
/// tail `a^{N+1-(t+1+K)}` is below `eps`.
pub fn abel_measure<G: Group>(
    s: &StochasticSequence<G>,
    t: i64,
    r: usize,
    a: f64,
    k: u32,
    eps: f64,
    budget: usize,
) -> Result<AbelMeasure<G::Element>, WalkError> {
    check_parameters(a, eps)?;
    if t < -1 {
        return Err(WalkError::InvalidParameter(format!(
            "t must be at least -1, got {t}"
        )));
    }
    if r >= s.ell(t) {
        return Err(WalkError::InvalidParameter(format!(
            "r = {r} out of range at level {t}"
        )));
    }
    let first = t + 1 + k as i64;
    let cutoff = geometric_cutoff(a, eps);
    let truncation = first + cutoff - 1;
    let tail_mass = a.powi(cutoff as i32);
    let mut entries = BTreeMap::new();
    let mut stored = 0usize;
    let mut current = LeveledMeasure::point_mass(t, r, s.group().identity());
    while current.level < truncation {
        current = propagate(s, &current, budget)?;
        let n = current.level;
        if n < first {
            continue;
        }
        let w = level_weight(a, first, n);
        stored += current.len();
        if stored > budget {
            return Err(WalkError::BudgetExceeded {
                level: n,
                size: stored,
            });
        }
        for ((j, g), m) in &current.entries {
            entries.insert((n, *j, g.clone()), w * m);
        }
    }
    Ok(AbelMeasure {
        t,
        r,
        a,
        k,
        truncation,
        entries,
        tail_mass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbelIdentityReport {
    pub t: i64,
    pub s: usize,
    pub a: f64,
    pub k: u32,
    pub truncation: i64,
    pub entries: usize,
    pub residual: f64,
    pub tail_mass: f64,
}

/// Sup-norm residual of `Σ_r σ^{(t)}_{s,r} ∗ ν^{(t)}_{r,a;K} = ν^{(t-1)}_{s,a;K+1}`
/// on the shared truncation, where `(μ ∗ ν)(n, j, g) = Σ_h μ(h) ν(n, j, h⁻¹g)`.
pub fn abel_identity_residual<G: Group>(
    seq: &StochasticSequence<G>,
    t: i64,
    s: usize,
    a: f64,
    k: u32,
    eps: f64,
    budget: usize,
) -> Result<AbelIdentityReport, WalkError> {
    if t < 0 {
        return Err(WalkError::InvalidParameter(format!(
            "identity needs t ≥ 0, got {t}"
        )));
    }
    let group = seq.group();
    let sigma = seq.matrix(t as usize);
    if s >= sigma.rows() {
        return Err(WalkError::InvalidParameter(format!(
            "s = {s} out of range at level {}",
            t - 1
        )));
    }
    let rhs = abel_measure(seq, t - 1, s, a, k + 1, eps, budget)?;
    let mut acc: BTreeMap<(i64, usize, G::Element), CompensatedSum> = BTreeMap::new();
    let mut truncation = rhs.truncation;
    for r in 0..sigma.cols() {
        let cell = sigma.cell(s, r);
        if cell.is_empty() {
            continue;
        }
        let nu = abel_measure(seq, t, r, a, k, eps, budget)?;
        truncation = nu.truncation;
        for ((n, j, g), m) in &nu.entries {
            for (h, w) in cell {
                acc.entry((*n, *j, group.multiply(h, g)))
                    .or_default()
                    .add(w * m);
            }
        }
        if acc.len() > budget {
            return Err(WalkError::BudgetExceeded {
                level: t,
                size: acc.len(),
            });
        }
    }
    if truncation != rhs.truncation {
        return Err(WalkError::InvalidParameter(
            "truncations of the two sides differ".into(),
        ));
    }
    let lhs: BTreeMap<_, f64> = acc.into_iter().map(|(key, v)| (key, v.value())).collect();
    let mut residual: f64 = 0.0;
    for (key, v) in &lhs {
        residual = residual.max((v - rhs.entries.get(key).copied().unwrap_or(0.0)).abs());
    }
    for (key, v) in &rhs.entries {
        if !lhs.contains_key(key) {
            residual = residual.max(v.abs());
        }
    }
    Ok(AbelIdentityReport {
        t,
        s,
        a,
        k,
        truncation,
        entries: rhs.entries.len(),
        residual,
        tail_mass: rhs.tail_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{Integers, MeasureMatrix, Repetition};

    fn coin() -> StochasticSequence<Integers> {
        StochasticSequence::constant(Integers, vec![(-1, 0.5), (1, 0.5)]).unwrap()
    }

    #[test]
    fn level_masses_and_tail_are_geometric() {
        let a = 0.5;
        let nu = abel_measure(&coin(), -1, 0, a, 0, 1e-10, 1_000_000).unwrap();
        for n in 0..=nu.truncation {
            assert_eq!(nu.level_total(n), (1.0 - a) * a.powi(n as i32));
        }
        assert_eq!(nu.tail_mass, a.powi(nu.truncation as i32 + 1));
        assert!(nu.tail_mass < 1e-10 && nu.tail_mass * 2.0 >= 1e-10);
        assert!((nu.stored_total() + nu.tail_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cutoff_is_minimal() {
        assert_eq!(geometric_cutoff(0.5, 0.25), 3);
        assert_eq!(geometric_cutoff(0.5, 0.3), 2);
        assert_eq!(geometric_cutoff(0.1, 2.0), 0);
    }

    #[test]
    fn identity_holds_for_a_two_sheet_sequence() {
        let s = StochasticSequence::new(
            Integers,
            vec![
                MeasureMatrix::new(vec![vec![vec![(0, 0.5)], vec![(1, 0.5)]]]).unwrap(),
                MeasureMatrix::new(vec![
                    vec![vec![(1, 0.3), (-1, 0.2)], vec![(2, 0.5)]],
                    vec![vec![(0, 0.9)], vec![(-3, 0.1)]],
                ])
                .unwrap(),
            ],
            Repetition::HoldLast,
        )
        .unwrap();
        for (t, k) in [(0, 0), (1, 0), (2, 1)] {
            for row in 0..s.ell(t - 1) {
                let r = abel_identity_residual(&s, t, row, 0.6, k, 1e-10, 1_000_000).unwrap();
                assert!(r.residual < 1e-12, "t={t} s={row}: {}", r.residual);
            }
        }
    }

    #[test]
    fn domination_by_one_over_a() {
        let s = coin();
        let a = 0.7;
        let nu0 = abel_measure(&s, 0, 0, a, 0, 1e-8, 1_000_000).unwrap();
        let nu1 = abel_measure(&s, 0, 0, a, 1, 1e-8, 1_000_000).unwrap();
        for (key, v) in &nu1.entries {
            let bound = nu0.entries.get(key).copied().unwrap_or(0.0) / a;
            if nu0.entries.contains_key(key) {
                assert!(*v <= bound * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn bad_parameters() {
        assert!(abel_measure(&coin(), -1, 0, 1.0, 0, 1e-3, 100).is_err());
        assert!(abel_measure(&coin(), -1, 0, 0.5, 0, 0.0, 100).is_err());
        assert!(abel_measure(&coin(), -2, 0, 0.5, 0, 1e-3, 100).is_err());
        assert!(matches!(
            abel_measure(&coin(), -1, 0, 0.999, 0, 1e-12, 1000),
            Err(WalkError::BudgetExceeded { .. })
        ));
    }
}
