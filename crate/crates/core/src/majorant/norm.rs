use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{concave_envelope, Majorant, MajorantError};
use crate::divergence::FiniteMeasure;
use crate::sum::CompensatedSum;

/// Largest atom count for exhaustive subset enumeration.
pub const EXACT_ATOM_LIMIT: usize = 20;

/// Slack in `m(A) ≤ ρ(ν(A)) + tol`.
pub const ABS_CONTINUITY_TOLERANCE: f64 = 1e-12;

/// A real function on the atoms of a finite probability space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeightedFunction")]
pub struct WeightedFunction {
    space: FiniteMeasure,
    values: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct RawWeightedFunction {
    space: FiniteMeasure,
    values: BTreeMap<String, f64>,
}

impl TryFrom<RawWeightedFunction> for WeightedFunction {
    type Error = MajorantError;

    fn try_from(raw: RawWeightedFunction) -> Result<Self, Self::Error> {
        WeightedFunction::new(raw.space, raw.values)
    }
}

impl WeightedFunction {
    pub fn new(space: FiniteMeasure, values: BTreeMap<String, f64>) -> Result<Self, MajorantError> {
        space.validate()?;
        if !space.is_probability() {
            return Err(MajorantError::InvalidFunction(format!(
                "space has total mass {}, expected 1",
                space.total()
            )));
        }
        for label in space.labels() {
            match values.get(label) {
                None => {
                    return Err(MajorantError::InvalidFunction(format!(
                        "atom {label:?} has no value"
                    )))
                }
                Some(v) if !v.is_finite() => {
                    return Err(MajorantError::InvalidFunction(format!(
                        "value {v} at {label:?} is not finite"
                    )))
                }
                _ => {}
            }
        }
        if let Some(extra) = values.keys().find(|k| !space.atoms().contains_key(*k)) {
            return Err(MajorantError::InvalidFunction(format!(
                "value given for unknown atom {extra:?}"
            )));
        }
        Ok(Self { space, values })
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, f64, f64)>>(
        atoms: I,
    ) -> Result<Self, MajorantError> {
        let mut masses = BTreeMap::new();
        let mut values = BTreeMap::new();
        for (label, mass, value) in atoms {
            masses.insert(label.clone(), mass);
            values.insert(label, value);
        }
        Self::new(FiniteMeasure::new(masses)?, values)
    }

    pub fn space(&self) -> &FiniteMeasure {
        &self.space
    }

    pub fn values(&self) -> &BTreeMap<String, f64> {
        &self.values
    }

    pub fn value(&self, label: &str) -> f64 {
        self.values.get(label).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// `f·1_{B^c}`.
    pub fn restricted_to_complement(&self, b: &BTreeSet<String>) -> Self {
        let values = self
            .values
            .iter()
            .map(|(k, v)| (k.clone(), if b.contains(k) { 0.0 } else { *v }))
            .collect();
        Self {
            space: self.space.clone(),
            values,
        }
    }

    /// `∫ |f| dν`.
    pub fn l1_norm(&self) -> f64 {
        self.space
            .atoms()
            .iter()
            .map(|(k, m)| m * self.value(k).abs())
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "space": self.space,
            "values": self.values,
        })
    }

    /// Positive-mass atoms with `(label, ν(x), ν(x)·|f(x)|)`.
    fn weighted_atoms(&self) -> Vec<(String, f64, f64)> {
        self.space
            .atoms()
            .iter()
            .filter(|(_, m)| **m > 0.0)
            .map(|(k, m)| (k.clone(), *m, m * self.value(k).abs()))
            .collect()
    }
}

/// Subset sums of two weight vectors over at most `EXACT_ATOM_LIMIT` atoms,
/// split into low and high halves so each sum is at most a short fold.
struct SubsetTable {
    n: usize,
    lo_bits: usize,
    lo: Vec<(f64, f64)>,
    hi: Vec<(f64, f64)>,
}

impl SubsetTable {
    fn new(a: &[f64], b: &[f64]) -> Self {
        let n = a.len();
        let lo_bits = n / 2;
        let half = |offset: usize, bits: usize| {
            let mut sums = vec![(0.0, 0.0); 1 << bits];
            for mask in 1usize..(1 << bits) {
                let low = mask.trailing_zeros() as usize;
                let prev = sums[mask & (mask - 1)];
                sums[mask] = (prev.0 + a[offset + low], prev.1 + b[offset + low]);
            }
            sums
        };
        Self {
            n,
            lo_bits,
            lo: half(0, lo_bits),
            hi: half(lo_bits, n - lo_bits),
        }
    }

    fn sums(&self, mask: u64) -> (f64, f64) {
        let lo = self.lo[(mask & ((1u64 << self.lo_bits) - 1)) as usize];
        let hi = self.hi[(mask >> self.lo_bits) as usize];
        (lo.0 + hi.0, lo.1 + hi.1)
    }

    /// Largest score over masks with `mask & !allowed == 0`; ties go to the
    /// smallest mask. `score` returns `None` to skip a subset.
    fn best<F>(&self, allowed: u64, score: F) -> Option<(f64, u64)>
    where
        F: Fn(u64, f64, f64) -> Option<f64> + Sync,
    {
        let hi_count = 1u64 << (self.n - self.lo_bits);
        let lo_count = 1u64 << self.lo_bits;
        (0..hi_count)
            .into_par_iter()
            .filter_map(|hi| {
                let mut best: Option<(f64, u64)> = None;
                for lo in 0..lo_count {
                    let mask = (hi << self.lo_bits) | lo;
                    if mask & !allowed != 0 {
                        continue;
                    }
                    let (x, y) = self.sums(mask);
                    if let Some(s) = score(mask, x, y) {
                        if best.is_none_or(|(b, _)| s > b) {
                            best = Some((s, mask));
                        }
                    }
                }
                best
            })
            .reduce_with(pick_better)
    }
}

fn pick_better(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn full_mask(n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        u64::MAX >> (64 - n)
    }
}

fn mask_labels(labels: &[String], mask: u64) -> Vec<String> {
    labels
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, l)| l.clone())
        .collect()
}

/// `∫_A |f| / ρ(ν(A))`, with sets of zero measure scoring 0.
fn ratio(rho: &Majorant, mass: f64, integral: f64) -> f64 {
    if mass <= 0.0 {
        0.0
    } else {
        integral / rho.eval(mass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    /// Maximum over all subsets.
    #[default]
    Exact,
    /// Maximum over descending-`|f|` prefixes; a lower bound of `Exact`.
    Prefix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub mode: NormMode,
    pub norm: f64,
    pub l1_norm: f64,
    /// A maximizing event.
    pub argmax: Vec<String>,
    pub argmax_mass: f64,
    pub argmax_integral: f64,
}

/// `‖f‖_ρ = sup_A ∫_A |f| dν / ρ(ν(A))`.
pub fn rho_norm(
    f: &WeightedFunction,
    rho: &Majorant,
    mode: NormMode,
) -> Result<f64, MajorantError> {
    Ok(rho_norm_report(f, rho, mode)?.norm)
}

pub fn rho_norm_report(
    f: &WeightedFunction,
    rho: &Majorant,
    mode: NormMode,
) -> Result<NormReport, MajorantError> {
    let atoms = f.weighted_atoms();
    let labels: Vec<String> = atoms.iter().map(|a| a.0.clone()).collect();
    let (norm, argmax, argmax_mass, argmax_integral) = match mode {
        NormMode::Exact => {
            if f.len() > EXACT_ATOM_LIMIT {
                return Err(MajorantError::TooManyAtoms {
                    atoms: f.len(),
                    limit: EXACT_ATOM_LIMIT,
                });
            }
            let masses: Vec<f64> = atoms.iter().map(|a| a.1).collect();
            let integrals: Vec<f64> = atoms.iter().map(|a| a.2).collect();
            let table = SubsetTable::new(&masses, &integrals);
            let (norm, mask) = table
                .best(full_mask(atoms.len()), |_, m, i| Some(ratio(rho, m, i)))
                .unwrap_or((0.0, 0));
            let (m, i) = table.sums(mask);
            (norm, mask_labels(&labels, mask), m, i)
        }
        NormMode::Prefix => {
            let order = descending_order(&atoms);
            let mut best = (0.0, 0usize, 0.0, 0.0);
            let mut mass = CompensatedSum::new();
            let mut integral = CompensatedSum::new();
            for (len, &idx) in order.iter().enumerate() {
                mass.add(atoms[idx].1);
                integral.add(atoms[idx].2);
                let r = ratio(rho, mass.value(), integral.value());
                if r > best.0 {
                    best = (r, len + 1, mass.value(), integral.value());
                }
            }
            let mut argmax: Vec<String> = order[..best.1]
                .iter()
                .map(|&i| atoms[i].0.clone())
                .collect();
            argmax.sort();
            (best.0, argmax, best.2, best.3)
        }
    };
    Ok(NormReport {
        mode,
        norm,
        l1_norm: f.l1_norm(),
        argmax,
        argmax_mass,
        argmax_integral,
    })
}

/// Indices sorted by `|f|` descending, ties by label.
fn descending_order(atoms: &[(String, f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = atoms[a].2 / atoms[a].1;
        let fb = atoms[b].2 / atoms[b].1;
        fb.total_cmp(&fa).then_with(|| atoms[a].0.cmp(&atoms[b].0))
    });
    order
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsContinuityReport {
    pub holds: bool,
    /// `max_A m(A) − ρ(ν(A))`.
    pub worst_excess: f64,
    pub worst_set: Vec<String>,
}

fn check_same_atoms(m: &FiniteMeasure, nu: &FiniteMeasure) -> Result<(), MajorantError> {
    if !m.same_labels(nu) {
        let a: Vec<&String> = m.labels().collect();
        let b: Vec<&String> = nu.labels().collect();
        return Err(MajorantError::AtomMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

/// Whether `m(A) ≤ ρ(ν(A))` for every event `A`.
pub fn rho_abs_continuity(
    m: &FiniteMeasure,
    nu: &FiniteMeasure,
    rho: &Majorant,
) -> Result<bool, MajorantError> {
    Ok(rho_abs_continuity_report(m, nu, rho)?.holds)
}

pub fn rho_abs_continuity_report(
    m: &FiniteMeasure,
    nu: &FiniteMeasure,
    rho: &Majorant,
) -> Result<AbsContinuityReport, MajorantError> {
    check_same_atoms(m, nu)?;
    m.validate()?;
    nu.validate()?;
    if m.len() > EXACT_ATOM_LIMIT {
        return Err(MajorantError::TooManyAtoms {
            atoms: m.len(),
            limit: EXACT_ATOM_LIMIT,
        });
    }
    let labels: Vec<String> = m.labels().cloned().collect();
    let table = SubsetTable::new(&nu.masses(), &m.masses());
    let (worst_excess, mask) = table
        .best(full_mask(labels.len()), |_, v, w| Some(w - rho.eval(v)))
        .unwrap_or((0.0, 0));
    Ok(AbsContinuityReport {
        holds: worst_excess <= ABS_CONTINUITY_TOLERANCE,
        worst_excess,
        worst_set: mask_labels(&labels, mask),
    })
}

/// Least concave gauge through the points `(ν(A), m(A))` over all events,
/// which makes `m` `ρ`-absolutely continuous with respect to `ν`.
pub fn continuity_majorant(
    m: &FiniteMeasure,
    nu: &FiniteMeasure,
) -> Result<Majorant, MajorantError> {
    check_same_atoms(m, nu)?;
    if m.len() > EXACT_ATOM_LIMIT {
        return Err(MajorantError::TooManyAtoms {
            atoms: m.len(),
            limit: EXACT_ATOM_LIMIT,
        });
    }
    let table = SubsetTable::new(&nu.masses(), &m.masses());
    let mut samples = vec![(0.0, 0.0)];
    for mask in 1..=full_mask(m.len()) {
        let (v, w) = table.sums(mask);
        if v <= 0.0 && w > 0.0 {
            return Err(MajorantError::BadSample(format!(
                "m puts mass {w} on a ν-null set, so m is not absolutely continuous"
            )));
        }
        samples.push((v.min(1.0), w.min(1.0)));
    }
    concave_envelope(&samples)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitReport {
    pub c: f64,
    /// The bad set `B`.
    pub bad_set: Vec<String>,
    pub bad_mass: f64,
    pub bad_integral: f64,
    /// `C·ρ(ν(B))`, exceeded by `bad_integral` whenever `B` is nonempty.
    pub bad_threshold: f64,
    /// `‖f·1_{B^c}‖_ρ`, exact when certified and a prefix lower bound otherwise.
    pub residual_norm: f64,
    pub certified: bool,
    pub rounds: usize,
}

/// A set `B` with `‖f·1_{B^c}‖_ρ ≤ C` that is itself bad unless empty, grown
/// by repeatedly adding a bad set of maximal measure disjoint from `B`.
///
/// Up to `EXACT_ATOM_LIMIT` atoms every candidate subset is scanned and the
/// result is certified; beyond that only descending-`|f|` prefixes of the
/// remaining atoms are candidates and `certified` is false.
pub fn split_integrable(
    f: &WeightedFunction,
    rho: &Majorant,
    c: f64,
) -> Result<SplitReport, MajorantError> {
    if !(c.is_finite() && c > 0.0) {
        return Err(MajorantError::InvalidParameter(format!(
            "C must be positive, got {c}"
        )));
    }
    let atoms = f.weighted_atoms();
    let labels: Vec<String> = atoms.iter().map(|a| a.0.clone()).collect();
    let certified = f.len() <= EXACT_ATOM_LIMIT;
    let mut bad: BTreeSet<usize> = BTreeSet::new();
    let mut rounds = 0;
    if certified {
        let masses: Vec<f64> = atoms.iter().map(|a| a.1).collect();
        let integrals: Vec<f64> = atoms.iter().map(|a| a.2).collect();
        let table = SubsetTable::new(&masses, &integrals);
        loop {
            let taken: u64 = bad.iter().map(|i| 1u64 << i).sum();
            let allowed = full_mask(atoms.len()) & !taken;
            let is_bad = |m: f64, i: f64| ratio(rho, m, i) > c;
            let Some((_, mask)) = table.best(allowed, |_, m, i| is_bad(m, i).then_some(m)) else {
                break;
            };
            bad.extend((0..atoms.len()).filter(|i| mask >> i & 1 == 1));
            rounds += 1;
        }
    } else {
        loop {
            let remaining: Vec<usize> = (0..atoms.len()).filter(|i| !bad.contains(i)).collect();
            let sub: Vec<(String, f64, f64)> =
                remaining.iter().map(|&i| atoms[i].clone()).collect();
            let order = descending_order(&sub);
            let mut mass = CompensatedSum::new();
            let mut integral = CompensatedSum::new();
            let mut best: Option<(f64, usize)> = None;
            for (len, &idx) in order.iter().enumerate() {
                mass.add(sub[idx].1);
                integral.add(sub[idx].2);
                if ratio(rho, mass.value(), integral.value()) > c
                    && best.is_none_or(|(m, _)| mass.value() > m)
                {
                    best = Some((mass.value(), len + 1));
                }
            }
            let Some((_, len)) = best else { break };
            bad.extend(order[..len].iter().map(|&i| remaining[i]));
            rounds += 1;
        }
    }
    let bad_set: BTreeSet<String> = bad.iter().map(|&i| labels[i].clone()).collect();
    let bad_mass = bad
        .iter()
        .map(|&i| atoms[i].1)
        .collect::<CompensatedSum>()
        .value();
    let bad_integral = bad
        .iter()
        .map(|&i| atoms[i].2)
        .collect::<CompensatedSum>()
        .value();
    let mode = if certified {
        NormMode::Exact
    } else {
        NormMode::Prefix
    };
    let residual_norm = rho_norm(&f.restricted_to_complement(&bad_set), rho, mode)?;
    Ok(SplitReport {
        c,
        bad_set: bad_set.into_iter().collect(),
        bad_mass,
        bad_integral,
        bad_threshold: c * rho.eval(bad_mass),
        residual_norm,
        certified,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wf(atoms: &[(&str, f64, f64)]) -> WeightedFunction {
        WeightedFunction::from_pairs(atoms.iter().map(|(l, m, v)| (l.to_string(), *m, *v))).unwrap()
    }

    fn measure(atoms: &[(&str, f64)]) -> FiniteMeasure {
        FiniteMeasure::from_pairs(atoms.iter().map(|(l, m)| (l.to_string(), *m))).unwrap()
    }

    #[test]
    fn constant_function_norm() {
        let f = wf(&[("a", 0.2, -3.0), ("b", 0.3, -3.0), ("c", 0.5, -3.0)]);
        for rho in [
            Majorant::power(2.0).unwrap(),
            Majorant::identity(),
            Majorant::power(7.0).unwrap(),
        ] {
            assert!((rho_norm(&f, &rho, NormMode::Exact).unwrap() - 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_atom_examples() {
        let f = wf(&[("x1", 0.5, 10.0), ("x2", 0.5, 0.0)]);
        let r = rho_norm_report(&f, &Majorant::power(2.0).unwrap(), NormMode::Exact).unwrap();
        assert!((r.norm - 5.0 / 0.5f64.sqrt()).abs() < 1e-14);
        assert_eq!(r.argmax, vec!["x1".to_string()]);
        let g = wf(&[("x1", 0.5, 3.0), ("x2", 0.5, 7.0)]);
        assert_eq!(
            rho_norm(&g, &Majorant::identity(), NormMode::Exact).unwrap(),
            7.0
        );
    }

    #[test]
    fn identity_gauge_gives_sup_norm() {
        let f = wf(&[
            ("a", 0.1, 2.0),
            ("b", 0.0, 100.0),
            ("c", 0.6, -5.5),
            ("d", 0.3, 1.0),
        ]);
        let n = rho_norm(&f, &Majorant::identity(), NormMode::Exact).unwrap();
        assert!((n - 5.5).abs() < 1e-14);
    }

    #[test]
    fn prefix_is_a_lower_bound_and_both_dominate_l1() {
        let f = wf(&[("a", 0.05, 4.0), ("b", 0.45, 1.0), ("c", 0.5, -0.5)]);
        let rho = Majorant::power(3.0).unwrap();
        let exact = rho_norm(&f, &rho, NormMode::Exact).unwrap();
        let prefix = rho_norm(&f, &rho, NormMode::Prefix).unwrap();
        assert!(prefix <= exact * (1.0 + 4.0 * f64::EPSILON));
        assert!(prefix >= f.l1_norm() * (1.0 - 4.0 * f64::EPSILON));
    }

    #[test]
    fn too_many_atoms() {
        let atoms: Vec<(String, f64, f64)> = (0..21)
            .map(|i| (format!("x{i:02}"), 1.0 / 21.0, i as f64))
            .collect();
        let f = WeightedFunction::from_pairs(atoms).unwrap();
        assert!(matches!(
            rho_norm(&f, &Majorant::identity(), NormMode::Exact),
            Err(MajorantError::TooManyAtoms { atoms: 21, .. })
        ));
        assert!(rho_norm(&f, &Majorant::identity(), NormMode::Prefix).is_ok());
    }

    #[test]
    fn weighted_function_validation() {
        let space = measure(&[("a", 0.5), ("b", 0.5)]);
        let missing = BTreeMap::from([("a".to_string(), 1.0)]);
        assert!(WeightedFunction::new(space.clone(), missing).is_err());
        let extra = BTreeMap::from([
            ("a".to_string(), 1.0),
            ("b".to_string(), 1.0),
            ("c".to_string(), 1.0),
        ]);
        assert!(WeightedFunction::new(space, extra).is_err());
        let json = r#"{"space":{"atoms":{"a":0.25,"b":0.75}},"values":{"a":2,"b":-1}}"#;
        let f: WeightedFunction = serde_json::from_str(json).unwrap();
        assert_eq!(f.value("b"), -1.0);
        assert!(serde_json::from_str::<WeightedFunction>(
            r#"{"space":{"atoms":{"a":0.5}},"values":{"a":1}}"#
        )
        .is_err());
    }

    #[test]
    fn abs_continuity_examples() {
        let rho = Majorant::power(2.0).unwrap();
        let nu = measure(&[("a", 0.5), ("b", 0.5)]);
        assert!(rho_abs_continuity(&nu, &nu, &rho).unwrap());
        let m = measure(&[("a", 0.9), ("b", 0.1)]);
        let r = rho_abs_continuity_report(&m, &nu, &rho).unwrap();
        assert!(!r.holds);
        assert_eq!(r.worst_set, vec!["a".to_string()]);
        let delta = measure(&[("a", 1.0), ("z", 0.0)]);
        let nu0 = measure(&[("a", 0.0), ("z", 1.0)]);
        assert!(!rho_abs_continuity(&delta, &nu0, &Majorant::power(50.0).unwrap()).unwrap());
        assert!(matches!(
            rho_abs_continuity(&m, &measure(&[("a", 0.5), ("c", 0.5)]), &rho),
            Err(MajorantError::AtomMismatch(_))
        ));
    }

    #[test]
    fn continuity_majorant_certifies() {
        let nu = measure(&[("a", 0.1), ("b", 0.2), ("c", 0.3), ("d", 0.4)]);
        let m = measure(&[("a", 0.5), ("b", 0.0), ("c", 0.3), ("d", 0.2)]);
        let rho = continuity_majorant(&m, &nu).unwrap();
        assert!(rho.check_invariants().passes);
        assert!(rho_abs_continuity(&m, &nu, &rho).unwrap());
        let singular = measure(&[("a", 0.5), ("b", 0.5)]);
        let null_b = measure(&[("a", 1.0), ("b", 0.0)]);
        assert!(continuity_majorant(&singular, &null_b).is_err());
    }

    #[test]
    fn split_already_integrable() {
        let f = wf(&[("a", 0.5, 1.0), ("b", 0.5, 2.0)]);
        let rho = Majorant::power(2.0).unwrap();
        let n = rho_norm(&f, &rho, NormMode::Exact).unwrap();
        let s = split_integrable(&f, &rho, n).unwrap();
        assert!(s.bad_set.is_empty());
        assert_eq!(s.residual_norm, n);
        assert!(s.certified);
    }

    #[test]
    fn split_single_huge_atom() {
        let f = wf(&[("big", 0.01, 1000.0), ("b", 0.49, 1.0), ("c", 0.5, 0.5)]);
        let rho = Majorant::power(2.0).unwrap();
        let s = split_integrable(&f, &rho, 20.0).unwrap();
        assert_eq!(s.bad_set, vec!["big".to_string()]);
        assert!(s.bad_integral > s.bad_threshold);
        assert!(s.residual_norm <= 20.0);
        let everything = split_integrable(&f, &rho, 5.0).unwrap();
        assert_eq!(everything.bad_set.len(), 3);
        assert_eq!(everything.residual_norm, 0.0);
    }

    #[test]
    fn split_rejects_bad_constant() {
        let f = wf(&[("a", 1.0, 1.0)]);
        assert!(split_integrable(&f, &Majorant::identity(), 0.0).is_err());
    }
}
