use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MajorantError;

/// Number of intervals of the uniform validation grid on `[0,1]`.
pub const GRID_INTERVALS: usize = 1000;

/// Absolute slack for the grid invariant checks.
pub const INVARIANT_TOLERANCE: f64 = 1e-12;

const WEIGHT_TOLERANCE: f64 = 1e-12;
/// Relative slack on the slope sequence of a piecewise-linear gauge.
const SLOPE_TOLERANCE: f64 = 1e-9;
/// Below this argument a perspective gauge is continued linearly to 0.
const PERSPECTIVE_FLOOR: f64 = 1e-290;
const BRACKET_LIMIT: f64 = 1e300;

/// Convex superlinear `G : [0,∞) → [0,∞)` with `G(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VpGenerator {
    /// `t^p`, `p > 1`.
    Power { p: f64 },
    /// `max(0, t ln t)`.
    XLogX,
}

impl VpGenerator {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            VpGenerator::Power { p } => t.powf(p),
            VpGenerator::XLogX => {
                if t <= 1.0 {
                    0.0
                } else {
                    t * t.ln()
                }
            }
        }
    }

    fn validate(&self) -> Result<(), MajorantError> {
        match *self {
            VpGenerator::Power { p } if !p.is_finite() => Err(MajorantError::InvalidParameter(
                format!("power exponent must be finite, got {p}"),
            )),
            VpGenerator::Power { p } if p <= 1.0 => Err(MajorantError::NotSuperlinear(format!(
                "t^{p} has G(t)/t bounded for p ≤ 1"
            ))),
            _ => Ok(()),
        }
    }

    /// `sup{s ≥ 0 : G(s) ≤ y}` by doubling then bisection to relative `1e-15`.
    fn upper_inverse(&self, y: f64) -> Result<f64, MajorantError> {
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.eval(hi) <= y {
            lo = hi;
            hi *= 2.0;
            if hi > BRACKET_LIMIT {
                return Err(MajorantError::NotSuperlinear(format!(
                    "G stays below {y} on [0, {BRACKET_LIMIT:e}]"
                )));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
                break;
            }
            if self.eval(mid) <= y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl fmt::Display for VpGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VpGenerator::Power { p } => write!(f, "power:{p}"),
            VpGenerator::XLogX => write!(f, "xlogx"),
        }
    }
}

impl FromStr for VpGenerator {
    type Err = MajorantError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "xlogx" {
            return Ok(VpGenerator::XLogX);
        }
        if let Some(rest) = s.strip_prefix("power:") {
            let p: f64 = rest
                .parse()
                .map_err(|_| MajorantError::InvalidParameter(format!("bad exponent in {s:?}")))?;
            let g = VpGenerator::Power { p };
            g.validate()?;
            return Ok(g);
        }
        Err(MajorantError::InvalidParameter(format!(
            "unknown generator {s:?} (expected power:<p> or xlogx)"
        )))
    }
}

impl TryFrom<String> for VpGenerator {
    type Error = MajorantError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<VpGenerator> for String {
    fn from(g: VpGenerator) -> Self {
        g.to_string()
    }
}

impl Serialize for VpGenerator {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for VpGenerator {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum Node {
    Power {
        q: f64,
    },
    Pwl {
        points: Vec<[f64; 2]>,
    },
    Mix {
        weights: Vec<f64>,
        inputs: Vec<Node>,
    },
    Cap {
        k: f64,
        inner: Box<Node>,
    },
    Compose {
        outer: Box<Node>,
        inner: Box<Node>,
    },
    /// `v ↦ ρ₁(v)/ρ₁(1)` with `ρ₁(v) = v·sup{s : G(s) ≤ M/v}`.
    Perspective {
        generator: VpGenerator,
        m: f64,
        #[serde(skip)]
        scale: f64,
    },
}

impl Node {
    fn validate(&mut self) -> Result<(), MajorantError> {
        match self {
            Node::Power { q } => {
                if !(q.is_finite() && *q >= 1.0) {
                    return Err(MajorantError::InvalidMajorant(format!(
                        "power needs finite q ≥ 1, got {q}"
                    )));
                }
            }
            Node::Pwl { points } => validate_points(points)?,
            Node::Mix { weights, inputs } => {
                check_weights(weights, inputs.len())?;
                for input in inputs.iter_mut() {
                    input.validate()?;
                }
            }
            Node::Cap { k, inner } => {
                if !(k.is_finite() && *k >= 1.0) {
                    return Err(MajorantError::InvalidMajorant(format!(
                        "cap needs finite K ≥ 1, got {k}"
                    )));
                }
                inner.validate()?;
            }
            Node::Compose { outer, inner } => {
                outer.validate()?;
                inner.validate()?;
            }
            Node::Perspective {
                generator,
                m,
                scale,
            } => {
                generator.validate()?;
                if !(m.is_finite() && *m > 0.0) {
                    return Err(MajorantError::InvalidParameter(format!(
                        "M must be positive, got {m}"
                    )));
                }
                *scale = generator.upper_inverse(*m)?;
                if !(*scale > 0.0) {
                    return Err(MajorantError::InvalidParameter("ρ₁(1) vanishes".into()));
                }
                generator.upper_inverse(*m / PERSPECTIVE_FLOOR)?;
            }
        }
        Ok(())
    }

    fn eval(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        let t = t.min(1.0);
        match self {
            Node::Power { q } => {
                if *q == 1.0 {
                    t
                } else {
                    t.powf(1.0 / q)
                }
            }
            Node::Pwl { points } => eval_pwl(points, t),
            Node::Mix { weights, inputs } => weights
                .iter()
                .zip(inputs)
                .map(|(w, r)| w * r.eval(t))
                .sum::<f64>()
                .min(1.0),
            Node::Cap { k, inner } => (k * inner.eval(t)).min(1.0),
            Node::Compose { outer, inner } => outer.eval(inner.eval(t)),
            Node::Perspective {
                generator,
                m,
                scale,
            } => {
                if t == 1.0 {
                    return 1.0;
                }
                let perspective =
                    |v: f64| v * generator.upper_inverse(m / v).unwrap_or(f64::INFINITY) / scale;
                if t < PERSPECTIVE_FLOOR {
                    t * perspective(PERSPECTIVE_FLOOR) / PERSPECTIVE_FLOOR
                } else {
                    perspective(t).min(1.0)
                }
            }
        }
    }

    fn collect_breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            Node::Pwl { points } => out.extend(points.iter().map(|p| p[0])),
            Node::Mix { inputs, .. } => inputs.iter().for_each(|n| n.collect_breakpoints(out)),
            Node::Cap { inner, .. } => inner.collect_breakpoints(out),
            Node::Compose { inner, .. } => inner.collect_breakpoints(out),
            Node::Power { .. } | Node::Perspective { .. } => {}
        }
    }
}

fn check_weights(weights: &[f64], inputs: usize) -> Result<(), MajorantError> {
    if weights.len() != inputs || inputs == 0 {
        return Err(MajorantError::InvalidWeight(format!(
            "{} weights for {inputs} inputs",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(MajorantError::InvalidWeight(format!(
            "weight {w} is not a non-negative real"
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(MajorantError::InvalidWeight(format!(
            "weights sum to {total}"
        )));
    }
    Ok(())
}

fn validate_points(points: &[[f64; 2]]) -> Result<(), MajorantError> {
    let bad = |msg: String| Err(MajorantError::InvalidMajorant(msg));
    if points.len() < 2 {
        return bad("a piecewise-linear gauge needs at least two breakpoints".into());
    }
    if points[0] != [0.0, 0.0] {
        return bad(format!(
            "first breakpoint must be (0,0), got {:?}",
            points[0]
        ));
    }
    if points[points.len() - 1] != [1.0, 1.0] {
        return bad(format!(
            "last breakpoint must be (1,1), got {:?}",
            points[points.len() - 1]
        ));
    }
    for p in points {
        if !(p[0].is_finite() && p[1].is_finite() && (0.0..=1.0).contains(&p[1])) {
            return bad(format!("breakpoint {p:?} outside [0,1]²"));
        }
    }
    let mut previous = f64::INFINITY;
    for w in points.windows(2) {
        let dt = w[1][0] - w[0][0];
        if !(dt > 0.0) {
            return bad(format!("abscissae not strictly increasing at {:?}", w[1]));
        }
        let slope = (w[1][1] - w[0][1]) / dt;
        if slope < -SLOPE_TOLERANCE {
            return bad(format!("decreasing segment ending at {:?}", w[1]));
        }
        if slope > previous + SLOPE_TOLERANCE * previous.abs().max(1.0) {
            return bad(format!(
                "slopes increase at {:?} ({previous} → {slope})",
                w[0]
            ));
        }
        previous = slope;
    }
    Ok(())
}

fn eval_pwl(points: &[[f64; 2]], t: f64) -> f64 {
    let k = points.partition_point(|p| p[0] <= t);
    if k == 0 {
        return points[0][1];
    }
    if k == points.len() {
        return points[k - 1][1];
    }
    let [t0, y0] = points[k - 1];
    let [t1, y1] = points[k];
    if t == t0 {
        return y0;
    }
    y0 + (y1 - y0) * ((t - t0) / (t1 - t0))
}

/// A concave gauge `ρ : [0,1] → [0,1]` with `ρ(0) = 0` and `ρ(1) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Node", into = "Node")]
pub struct Majorant {
    node: Node,
}

impl TryFrom<Node> for Majorant {
    type Error = MajorantError;

    fn try_from(mut node: Node) -> Result<Self, Self::Error> {
        node.validate()?;
        Ok(Self { node })
    }
}

impl From<Majorant> for Node {
    fn from(m: Majorant) -> Self {
        m.node
    }
}

impl Majorant {
    /// `t ↦ t^{1/q}`.
    pub fn power(q: f64) -> Result<Self, MajorantError> {
        Node::Power { q }.try_into()
    }

    /// `t ↦ t`.
    pub fn identity() -> Self {
        Self {
            node: Node::Power { q: 1.0 },
        }
    }

    /// Piecewise-linear concave gauge through the given breakpoints.
    pub fn pwl(points: Vec<[f64; 2]>) -> Result<Self, MajorantError> {
        Node::Pwl { points }.try_into()
    }

    /// `v ↦ ρ₁(v)/ρ₁(1)` with `ρ₁(v) = sup{t : G(t/v) ≤ M/v}`.
    pub fn perspective(generator: VpGenerator, m: f64) -> Result<Self, MajorantError> {
        Node::Perspective {
            generator,
            m,
            scale: 0.0,
        }
        .try_into()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.node.eval(t)
    }

    /// `Some(q)` for `t^{1/q}`.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.node {
            Node::Power { q } => Some(q),
            _ => None,
        }
    }

    /// Breakpoints for a piecewise-linear gauge.
    pub fn breakpoints(&self) -> Option<&[[f64; 2]]> {
        match &self.node {
            Node::Pwl { points } => Some(points),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.node {
            Node::Power { .. } => "power",
            Node::Pwl { .. } => "pwl",
            Node::Mix { .. } => "mix",
            Node::Cap { .. } => "cap",
            Node::Compose { .. } => "compose",
            Node::Perspective { .. } => "perspective",
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self, MajorantError> {
        serde_json::from_str(s).map_err(|e| MajorantError::InvalidMajorant(e.to_string()))
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("majorant serializes")
    }

    /// Grid check of normalization, monotonicity, concavity, `ρ(t) ≥ t` and
    /// sub-additivity on `t = i/GRID_INTERVALS`.
    pub fn check_invariants(&self) -> InvariantReport {
        let n = GRID_INTERVALS;
        let values: Vec<f64> = (0..=n).map(|i| self.eval(i as f64 / n as f64)).collect();
        let normalization_error = values[0].abs().max((values[n] - 1.0).abs());
        let mut max_decrease: f64 = 0.0;
        let mut max_concavity_violation: f64 = 0.0;
        let mut max_below_identity: f64 = 0.0;
        let mut max_subadditivity_violation: f64 = 0.0;
        for i in 0..=n {
            max_below_identity = max_below_identity.max(i as f64 / n as f64 - values[i]);
            if i > 0 {
                max_decrease = max_decrease.max(values[i - 1] - values[i]);
            }
            if i > 0 && i < n {
                max_concavity_violation =
                    max_concavity_violation.max(values[i - 1] + values[i + 1] - 2.0 * values[i]);
            }
            for j in 1..=(n - i) {
                max_subadditivity_violation =
                    max_subadditivity_violation.max(values[i + j] - values[i] - values[j]);
            }
        }
        let tol = INVARIANT_TOLERANCE;
        let passes = normalization_error <= tol
            && max_decrease <= tol
            && max_concavity_violation <= tol
            && max_below_identity <= tol
            && max_subadditivity_violation <= tol;
        InvariantReport {
            grid_intervals: n,
            normalization_error,
            max_decrease,
            max_concavity_violation,
            max_below_identity,
            max_subadditivity_violation,
            passes,
        }
    }

    /// Abscissae for sampling: the uniform grid, a geometric refinement
    /// towards 0, and every piecewise-linear breakpoint in the tree.
    fn sample_abscissae(inputs: &[Majorant]) -> Vec<f64> {
        let mut ts: Vec<f64> = (0..=GRID_INTERVALS)
            .map(|i| i as f64 / GRID_INTERVALS as f64)
            .collect();
        ts.extend((10..=120).map(|k| 10f64.powf(-(k as f64) / 10.0)));
        for m in inputs {
            m.node.collect_breakpoints(&mut ts);
        }
        ts.retain(|t| (0.0..=1.0).contains(t));
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub grid_intervals: usize,
    pub normalization_error: f64,
    pub max_decrease: f64,
    pub max_concavity_violation: f64,
    pub max_below_identity: f64,
    pub max_subadditivity_violation: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum CombineOp {
    /// `ρ₁ ∘ ρ₂ ∘ …`.
    Compose,
    /// Concave envelope of the pointwise maximum.
    Max,
    /// `min(1, K·ρ)`.
    Cap { k: f64 },
    /// `Σ wᵢ ρᵢ`.
    Mix { weights: Vec<f64> },
}

/// Builds a new gauge from existing ones.
///
/// The pointwise maximum of concave gauges need not be concave, so `Max`
/// returns the upper concave envelope of the maximum sampled on the
/// validation grid, a geometric refinement near 0 and all breakpoints.
pub fn combine(op: &CombineOp, inputs: &[Majorant]) -> Result<Majorant, MajorantError> {
    if inputs.is_empty() {
        return Err(MajorantError::InvalidMajorant(
            "combine needs at least one input".into(),
        ));
    }
    match op {
        CombineOp::Compose => {
            let mut iter = inputs.iter().rev();
            let mut acc = iter.next().expect("nonempty").node.clone();
            for outer in iter {
                acc = match (&outer.node, &acc) {
                    (Node::Power { q: a }, Node::Power { q: b }) => Node::Power { q: a * b },
                    _ => Node::Compose {
                        outer: Box::new(outer.node.clone()),
                        inner: Box::new(acc),
                    },
                };
            }
            acc.try_into()
        }
        CombineOp::Max => {
            if inputs.len() == 1 {
                return Ok(inputs[0].clone());
            }
            let samples: Vec<(f64, f64)> = Majorant::sample_abscissae(inputs)
                .into_iter()
                .map(|t| (t, inputs.iter().map(|m| m.eval(t)).fold(0.0, f64::max)))
                .collect();
            concave_envelope(&samples)
        }
        CombineOp::Cap { k } => {
            if inputs.len() != 1 {
                return Err(MajorantError::InvalidMajorant(format!(
                    "cap takes one input, got {}",
                    inputs.len()
                )));
            }
            Node::Cap {
                k: *k,
                inner: Box::new(inputs[0].node.clone()),
            }
            .try_into()
        }
        CombineOp::Mix { weights } => Node::Mix {
            weights: weights.clone(),
            inputs: inputs.iter().map(|m| m.node.clone()).collect(),
        }
        .try_into(),
    }
}

/// Least concave function through `(1,1)` dominating the samples, as a
/// piecewise-linear gauge (upper hull by a monotone chain).
pub fn concave_envelope(samples: &[(f64, f64)]) -> Result<Majorant, MajorantError> {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(samples.len() + 1);
    for &(t, y) in samples {
        if !(t.is_finite() && y.is_finite() && (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&y))
        {
            return Err(MajorantError::BadSample(format!(
                "({t}, {y}) is not in [0,1]²"
            )));
        }
        if t == 0.0 && y > 0.0 {
            return Err(MajorantError::BadSample(format!(
                "value {y} at t = 0 must be 0"
            )));
        }
        pts.push((t, y));
    }
    if !pts.iter().any(|p| p.0 == 0.0) {
        return Err(MajorantError::BadSample(
            "samples must include t = 0".into(),
        ));
    }
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.dedup_by(|later, earlier| later.0 == earlier.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    Majorant::pwl(hull.into_iter().map(|(t, y)| [t, y]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VallePoussinReport {
    pub generator: VpGenerator,
    pub m: f64,
    pub k: f64,
    pub majorant: Majorant,
    /// Sup over the validation grid of `|envelope(ρ₁/K) − ρ₁/K|`; zero up to
    /// rounding because `ρ₁` is concave.
    pub grid_envelope_gap: f64,
}

/// `(ρ, K)` with `E[G(|f|)] ≤ M ⟹ ‖f‖_ρ ≤ K` on every probability space.
///
/// `ρ₁(v) = v·sup{s : G(s) ≤ M/v}` is the upper boundary of a slice of the
/// convex set `{(t, v) : v·G(t/v) ≤ M}`, hence concave, so `ρ = ρ₁/K` is kept
/// exactly rather than replaced by a grid hull.
pub fn vallee_poussin(generator: VpGenerator, m: f64) -> Result<(Majorant, f64), MajorantError> {
    let report = vallee_poussin_report(generator, m)?;
    Ok((report.majorant, report.k))
}

pub fn vallee_poussin_report(
    generator: VpGenerator,
    m: f64,
) -> Result<VallePoussinReport, MajorantError> {
    let majorant = Majorant::perspective(generator, m)?;
    let k = match majorant.node {
        Node::Perspective { scale, .. } => scale,
        _ => unreachable!("perspective constructor"),
    };
    let samples: Vec<(f64, f64)> = (0..=GRID_INTERVALS)
        .map(|i| {
            let t = i as f64 / GRID_INTERVALS as f64;
            (t, majorant.eval(t))
        })
        .collect();
    let hull = concave_envelope(&samples)?;
    let grid_envelope_gap = samples
        .iter()
        .map(|&(t, y)| (hull.eval(t) - y).abs())
        .fold(0.0, f64::max);
    Ok(VallePoussinReport {
        generator,
        m,
        k,
        majorant,
        grid_envelope_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> impl Iterator<Item = f64> {
        (0..=200).map(|i| i as f64 / 200.0)
    }

    #[test]
    fn json_forms() {
        let p = Majorant::from_json_str(r#"{"kind":"power","q":2}"#).unwrap();
        assert_eq!(p, Majorant::power(2.0).unwrap());
        let w =
            Majorant::from_json_str(r#"{"kind":"pwl","points":[[0,0],[0.5,0.8],[1,1]]}"#).unwrap();
        assert_eq!(w.eval(0.25), 0.4);
        assert_eq!(w.eval(0.75), 0.9);
        let back = Majorant::from_json_str(&serde_json::to_string(&w).unwrap()).unwrap();
        assert_eq!(back, w);
        assert!(Majorant::from_json_str(r#"{"kind":"power","q":0.5}"#).is_err());
        assert!(
            Majorant::from_json_str(r#"{"kind":"pwl","points":[[0,0],[0.5,0.2],[1,1]]}"#).is_err()
        );
        assert!(Majorant::from_json_str(r#"{"kind":"pwl","points":[[0,0.1],[1,1]]}"#).is_err());
    }

    #[test]
    fn compose_of_powers_multiplies_exponents() {
        let p2 = Majorant::power(2.0).unwrap();
        let c = combine(&CombineOp::Compose, &[p2.clone(), p2]).unwrap();
        assert_eq!(c.power_exponent(), Some(4.0));
        for t in grid() {
            assert!((c.eval(t) - t.powf(0.25)).abs() < 1e-15);
        }
    }

    #[test]
    fn generic_compose_evaluates_outer_of_inner() {
        let p2 = Majorant::power(2.0).unwrap();
        let w = Majorant::pwl(vec![[0.0, 0.0], [0.5, 0.8], [1.0, 1.0]]).unwrap();
        let c = combine(&CombineOp::Compose, &[w.clone(), p2.clone()]).unwrap();
        for t in grid() {
            assert_eq!(c.eval(t), w.eval(p2.eval(t)));
        }
        assert!(c.check_invariants().passes);
    }

    #[test]
    fn cap_one_is_identity_transformation() {
        for m in [
            Majorant::power(3.0).unwrap(),
            Majorant::pwl(vec![[0.0, 0.0], [0.2, 0.6], [1.0, 1.0]]).unwrap(),
        ] {
            let c = combine(&CombineOp::Cap { k: 1.0 }, std::slice::from_ref(&m)).unwrap();
            for t in grid() {
                assert_eq!(c.eval(t), m.eval(t));
            }
        }
        assert!(matches!(
            combine(&CombineOp::Cap { k: 0.5 }, &[Majorant::identity()]),
            Err(MajorantError::InvalidMajorant(_))
        ));
    }

    #[test]
    fn mix_example() {
        let m = combine(
            &CombineOp::Mix {
                weights: vec![0.5, 0.5],
            },
            &[Majorant::power(1.0).unwrap(), Majorant::power(2.0).unwrap()],
        )
        .unwrap();
        assert!((m.eval(0.25) - 0.375).abs() < 1e-15);
        assert!(m.check_invariants().passes);
        for weights in [
            vec![0.5, 0.6],
            vec![1.0],
            vec![-0.5, 1.5],
            vec![f64::NAN, 1.0],
        ] {
            assert!(matches!(
                combine(
                    &CombineOp::Mix { weights },
                    &[Majorant::identity(), Majorant::identity()]
                ),
                Err(MajorantError::InvalidWeight(_))
            ));
        }
    }

    #[test]
    fn max_dominates_and_is_concave() {
        let a = combine(&CombineOp::Cap { k: 10.0 }, &[Majorant::identity()]).unwrap();
        let b = Majorant::power(4.0).unwrap();
        let naive = |t: f64| a.eval(t).max(b.eval(t));
        let crossing_kink = (0..GRID_INTERVALS)
            .map(|i| {
                let t = i as f64 / GRID_INTERVALS as f64;
                let h = 1.0 / GRID_INTERVALS as f64;
                if t < h {
                    0.0
                } else {
                    naive(t - h) + naive(t + h) - 2.0 * naive(t)
                }
            })
            .fold(0.0, f64::max);
        assert!(
            crossing_kink > 1e-3,
            "the naive maximum should fail concavity"
        );
        let m = combine(&CombineOp::Max, &[a.clone(), b.clone()]).unwrap();
        assert!(m.check_invariants().passes);
        for i in 0..=GRID_INTERVALS {
            let t = i as f64 / GRID_INTERVALS as f64;
            assert!(m.eval(t) >= naive(t) - 1e-15);
        }
    }

    #[test]
    fn max_of_pwl_inputs_is_exact_hull() {
        let a = Majorant::pwl(vec![[0.0, 0.0], [0.1, 0.5], [1.0, 1.0]]).unwrap();
        let b = Majorant::pwl(vec![[0.0, 0.0], [0.6, 0.95], [1.0, 1.0]]).unwrap();
        let m = combine(&CombineOp::Max, &[a, b]).unwrap();
        let hull = Majorant::pwl(vec![[0.0, 0.0], [0.1, 0.5], [0.6, 0.95], [1.0, 1.0]]).unwrap();
        for i in 0..=GRID_INTERVALS {
            let t = i as f64 / GRID_INTERVALS as f64;
            assert!((m.eval(t) - hull.eval(t)).abs() < 1e-15, "t={t}");
        }
    }

    #[test]
    fn envelope_of_concave_samples_is_idempotent() {
        let samples: Vec<(f64, f64)> = (0..=100)
            .map(|i| i as f64 / 100.0)
            .map(|t| (t, t.sqrt()))
            .collect();
        let e = concave_envelope(&samples).unwrap();
        for &(t, y) in &samples {
            assert!((e.eval(t) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_three_point_example() {
        let e = concave_envelope(&[(0.0, 0.0), (0.5, 0.1), (1.0, 1.0)]).unwrap();
        assert_eq!(e.eval(0.5), 0.5);
        assert_eq!(e.breakpoints().unwrap(), &[[0.0, 0.0], [1.0, 1.0]]);
    }

    #[test]
    fn envelope_rejects_bad_samples() {
        assert!(matches!(
            concave_envelope(&[(0.0, 0.2), (1.0, 1.0)]),
            Err(MajorantError::BadSample(_))
        ));
        assert!(matches!(
            concave_envelope(&[(0.5, 0.2), (1.0, 1.0)]),
            Err(MajorantError::BadSample(_))
        ));
        assert!(matches!(
            concave_envelope(&[(0.0, 0.0), (1.5, 1.0)]),
            Err(MajorantError::BadSample(_))
        ));
    }

    #[test]
    fn vallee_poussin_square() {
        let (rho, k) = vallee_poussin(VpGenerator::Power { p: 2.0 }, 1.0).unwrap();
        assert!((k - 1.0).abs() < 1e-14);
        for i in 0..=GRID_INTERVALS {
            let t = i as f64 / GRID_INTERVALS as f64;
            assert!((rho.eval(t) - t.sqrt()).abs() < 1e-10, "t={t}");
        }
        let (rho4, k4) = vallee_poussin(VpGenerator::Power { p: 2.0 }, 4.0).unwrap();
        assert!((k4 - 2.0).abs() < 1e-14);
        for t in grid() {
            assert!((rho4.eval(t) - rho.eval(t)).abs() < 1e-10);
        }
        let report = vallee_poussin_report(VpGenerator::Power { p: 3.0 }, 2.0).unwrap();
        assert!(report.grid_envelope_gap < 1e-12);
        assert!(report.majorant.check_invariants().passes);
    }

    #[test]
    fn vallee_poussin_xlogx_is_a_majorant() {
        let report = vallee_poussin_report(VpGenerator::XLogX, 1.0).unwrap();
        assert!(report.majorant.check_invariants().passes);
        assert!(report.grid_envelope_gap < 1e-12);
        let json = serde_json::to_string(&report.majorant).unwrap();
        assert_eq!(Majorant::from_json_str(&json).unwrap(), report.majorant);
    }

    #[test]
    fn vallee_poussin_rejects_linear_growth() {
        assert!(matches!(
            vallee_poussin(VpGenerator::Power { p: 1.0 }, 1.0),
            Err(MajorantError::NotSuperlinear(_))
        ));
        assert!("power:0.5".parse::<VpGenerator>().is_err());
        assert!(vallee_poussin(VpGenerator::XLogX, 0.0).is_err());
    }

    #[test]
    fn all_constructors_pass_the_grid_suite() {
        let p = Majorant::power(2.5).unwrap();
        let w = Majorant::pwl(vec![[0.0, 0.0], [0.05, 0.4], [0.5, 0.9], [1.0, 1.0]]).unwrap();
        let ops = [
            combine(&CombineOp::Compose, &[w.clone(), p.clone()]).unwrap(),
            combine(&CombineOp::Max, &[w.clone(), p.clone()]).unwrap(),
            combine(&CombineOp::Cap { k: 3.0 }, std::slice::from_ref(&p)).unwrap(),
            combine(
                &CombineOp::Mix {
                    weights: vec![0.3, 0.7],
                },
                &[w.clone(), p.clone()],
            )
            .unwrap(),
            Majorant::identity(),
        ];
        for m in ops {
            let r = m.check_invariants();
            assert!(r.passes, "{}: {r:?}", m.kind());
        }
    }
}
