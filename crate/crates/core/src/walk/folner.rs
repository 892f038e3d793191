use serde::{Deserialize, Serialize};

use super::{Integers, MeasureMatrix, Repetition, StochasticSequence, WalkError};
use crate::divergence::{
    divergence_of_masses, weight_times, ConvexGenerator, FiniteMeasure, ZERO_MASS,
};
use crate::sum::CompensatedSum;

/// Ratio of the two-sided geometric measure `σ^{(0)}(k) ∝ ρ^{|k|}`.
pub const SIGMA0_RATIO: f64 = 0.5;
/// Mass of `σ^{(0)}` dropped by truncation before renormalizing.
pub const SIGMA0_DEFECT: f64 = 1e-16;

/// Intervals `F_n` of the Følner sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FolnerFamily {
    /// `F_n = [-n, n]`.
    #[default]
    #[serde(rename = "linear")]
    Linear,
    /// `F_n = [-2^n, 2^n]`.
    #[serde(rename = "dyadic")]
    Dyadic,
}

impl FolnerFamily {
    /// Half-width of `F_n`, `n ≥ 1`.
    pub fn half_width(&self, n: usize) -> Result<usize, WalkError> {
        match self {
            FolnerFamily::Linear => Ok(n),
            FolnerFamily::Dyadic => {
                if n >= 60 {
                    return Err(WalkError::BudgetExceeded {
                        level: n as i64,
                        size: usize::MAX,
                    });
                }
                Ok(1usize << n)
            }
        }
    }
}

/// A finitely supported measure on `ℤ` stored densely from `offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMeasure {
    pub offset: i64,
    pub masses: Vec<f64>,
}

impl DenseMeasure {
    pub fn from_measure(m: &FiniteMeasure<i64>) -> Self {
        let lo = *m.atoms().keys().next().unwrap_or(&0);
        let hi = *m.atoms().keys().next_back().unwrap_or(&0);
        let mut masses = vec![0.0; (hi - lo + 1) as usize];
        for (k, v) in m.atoms() {
            masses[(k - lo) as usize] = *v;
        }
        Self { offset: lo, masses }
    }

    pub fn mass(&self, k: i64) -> f64 {
        let i = k - self.offset;
        if i < 0 || i as usize >= self.masses.len() {
            0.0
        } else {
            self.masses[i as usize]
        }
    }

    pub fn lo(&self) -> i64 {
        self.offset
    }

    pub fn hi(&self) -> i64 {
        self.offset + self.masses.len() as i64 - 1
    }

    pub fn total(&self) -> f64 {
        self.masses
            .iter()
            .copied()
            .collect::<CompensatedSum>()
            .value()
    }

    /// Convolution with the uniform measure on `[-w, w]`.
    ///
    /// Window sums are taken from prefix sums on the left half and from
    /// suffix sums on the right half, so small tail masses are not lost to
    /// cancellation against the bulk.
    pub fn box_convolve(&self, w: usize) -> Self {
        let mut out = Self {
            offset: 0,
            masses: Vec::new(),
        };
        self.box_convolve_into(w, &mut BoxScratch::default(), &mut out);
        out
    }

    /// [`Self::box_convolve`] writing into `out`, reusing `scratch`.
    pub fn box_convolve_into(&self, w: usize, scratch: &mut BoxScratch, out: &mut Self) {
        let len = self.masses.len();
        let prefix = &mut scratch.prefix;
        prefix.clear();
        prefix.reserve(len + 1);
        prefix.push(0.0);
        let mut running = 0.0;
        for &m in &self.masses {
            running += m;
            prefix.push(running);
        }
        let suffix = &mut scratch.suffix;
        suffix.clear();
        suffix.resize(len + 1, 0.0);
        for i in (0..len).rev() {
            suffix[i] = suffix[i + 1] + self.masses[i];
        }
        let scale = 1.0 / (2 * w + 1) as f64;
        let out_len = len + 2 * w;
        let half = len / 2;
        out.offset = self.offset - w as i64;
        out.masses.clear();
        out.masses.extend((0..out_len).map(|y| {
            // input indices y - 2w ..= y
            let lo = y.saturating_sub(2 * w);
            let hi = y.min(len - 1);
            let centre = lo + (hi - lo) / 2;
            let sum = if centre < half {
                prefix[hi + 1] - prefix[lo]
            } else {
                suffix[lo] - suffix[hi + 1]
            };
            sum.max(0.0) * scale
        }));
    }
}

/// Reusable buffers for [`DenseMeasure::box_convolve_into`].
#[derive(Debug, Default)]
pub struct BoxScratch {
    prefix: Vec<f64>,
    suffix: Vec<f64>,
}

/// Truncated, renormalized `σ^{(0)}(k) ∝ ρ^{|k|}` with the dropped mass.
pub fn geometric_envelope() -> (DenseMeasure, f64) {
    let rho = SIGMA0_RATIO;
    let c = (1.0 - rho) / (1.0 + rho);
    // mass outside [-R, R] is 2c ρ^{R+1}/(1-ρ)
    let mut radius = 0usize;
    while 2.0 * c * rho.powi(radius as i32 + 1) / (1.0 - rho) >= SIGMA0_DEFECT {
        radius += 1;
    }
    let defect = 2.0 * c * rho.powi(radius as i32 + 1) / (1.0 - rho);
    let raw: Vec<f64> = (-(radius as i64)..=radius as i64)
        .map(|k| c * rho.powi(k.unsigned_abs() as i32))
        .collect();
    let total: f64 = raw.iter().copied().collect::<CompensatedSum>().value();
    let masses = raw.iter().map(|m| m / total).collect();
    (
        DenseMeasure {
            offset: -(radius as i64),
            masses,
        },
        defect,
    )
}

/// The Følner sequence on `ℤ` with `ℓ ≡ 1`: `σ^{(0)}` the geometric
/// envelope and `σ^{(n)}` uniform on `F_n` for `n = 1..=levels`, holding the
/// last interval beyond.
pub fn folner_sequence(
    family: FolnerFamily,
    levels: usize,
) -> Result<StochasticSequence<Integers>, WalkError> {
    let (sigma0, _) = geometric_envelope();
    let cell0 = (0..sigma0.masses.len())
        .map(|i| (sigma0.offset + i as i64, sigma0.masses[i]))
        .collect();
    let mut matrices = vec![MeasureMatrix::new(vec![vec![cell0]])?];
    for n in 1..=levels {
        let w = family.half_width(n)? as i64;
        let mass = 1.0 / (2 * w + 1) as f64;
        matrices.push(MeasureMatrix::new(vec![vec![(-w..=w)
            .map(|k| (k, mass))
            .collect()]])?);
    }
    StochasticSequence::new(Integers, matrices, Repetition::HoldLast)
}

/// Entropy of a measure on `ℤ` under a finitely supported `λ`, with
/// translates realized as exact shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShiftMode {
    /// `D_f(δ_x ∗ ν ‖ ν)` over the union of supports.
    #[serde(rename = "exact")]
    Exact,
    /// Both measures restricted to the atoms where both are positive and
    /// renormalized; the discarded mass is reported as a defect.
    #[serde(rename = "window")]
    Window,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftEntropy {
    pub h: f64,
    /// Largest mass discarded by the window over all translates.
    pub window_defect: f64,
}

pub fn shift_entropy(
    nu: &DenseMeasure,
    lambda: &FiniteMeasure<i64>,
    f: &ConvexGenerator,
    mode: ShiftMode,
) -> ShiftEntropy {
    let mut total = CompensatedSum::new();
    let mut infinite = false;
    let mut window_defect: f64 = 0.0;
    for (&x, &weight) in lambda.atoms() {
        if weight == 0.0 {
            continue;
        }
        // translate p(y) = ν(y - x) against q(y) = ν(y) on [lo, hi + x] ∪ …
        let lo = nu.lo().min(nu.lo() + x);
        let hi = nu.hi().max(nu.hi() + x);
        let (mut p, mut q) = (Vec::new(), Vec::new());
        let (mut p_out, mut q_out) = (CompensatedSum::new(), CompensatedSum::new());
        for y in lo..=hi {
            let (py, qy) = (nu.mass(y - x), nu.mass(y));
            match mode {
                ShiftMode::Exact => {
                    p.push(py);
                    q.push(qy);
                }
                ShiftMode::Window => {
                    if py > 0.0 && qy > 0.0 {
                        p.push(py);
                        q.push(qy);
                    } else {
                        p_out.add(py);
                        q_out.add(qy);
                    }
                }
            }
        }
        let d = match mode {
            ShiftMode::Exact => divergence_of_masses(&p, &q, f, ZERO_MASS),
            ShiftMode::Window => {
                window_defect = window_defect.max(p_out.value()).max(q_out.value());
                let sp: f64 = p.iter().copied().collect::<CompensatedSum>().value();
                let sq: f64 = q.iter().copied().collect::<CompensatedSum>().value();
                let pn: Vec<f64> = p.iter().map(|v| v / sp).collect();
                let qn: Vec<f64> = q.iter().map(|v| v / sq).collect();
                divergence_of_masses(&pn, &qn, f, 0.0)
            }
        };
        let term = weight_times(weight, d);
        if term.is_infinite() {
            infinite = true;
        } else {
            total.add(term);
        }
    }
    ShiftEntropy {
        h: if infinite {
            f64::INFINITY
        } else {
            total.value()
        },
        window_defect,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FolnerPoint {
    pub a: f64,
    pub h: f64,
    /// Last level `N` kept.
    pub truncation: usize,
    /// `a^{N+1}`, the level mass beyond the truncation.
    pub tail_mass: f64,
    pub support_lo: i64,
    pub support_hi: i64,
    pub window_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FolnerReport {
    pub family: FolnerFamily,
    pub eps: f64,
    pub sigma0_defect: f64,
    pub points: Vec<FolnerPoint>,
    /// `h` is non-increasing along the grid sorted by `a`.
    pub non_increasing: bool,
}

/// `λ_a = Σ_{n ≤ N} (1-a) a^n (σ^{(0)} ∗ … ∗ σ^{(n)})`, the `ℤ`-projection of
/// `ν^{(-1)}_{0,a;0}` truncated at the smallest `N` with `a^{N+1} < eps`.
pub fn abel_projection(
    family: FolnerFamily,
    a: f64,
    eps: f64,
    budget: usize,
) -> Result<(DenseMeasure, usize, f64), WalkError> {
    if !(a > 0.0 && a < 1.0) {
        return Err(WalkError::InvalidParameter(format!(
            "a must lie in (0,1), got {a}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(WalkError::InvalidParameter(format!(
            "eps must lie in (0,1), got {eps}"
        )));
    }
    let mut truncation = 0usize;
    while a.powi(truncation as i32 + 1) >= eps {
        truncation += 1;
    }
    let (sigma0, _) = geometric_envelope();
    let mut width = sigma0.masses.len();
    for n in 1..=truncation {
        width += 2 * family.half_width(n)?;
        if width > budget {
            return Err(WalkError::BudgetExceeded {
                level: n as i64,
                size: width,
            });
        }
    }
    let final_offset = sigma0.offset - (width - sigma0.masses.len()) as i64 / 2;
    let mut acc = vec![CompensatedSum::new(); width];
    let mut current = sigma0;
    let mut next = DenseMeasure {
        offset: 0,
        masses: Vec::with_capacity(width),
    };
    current.masses.reserve(width);
    let mut scratch = BoxScratch::default();
    let mut weight = 1.0 - a;
    for n in 0..=truncation {
        if n > 0 {
            current.box_convolve_into(family.half_width(n)?, &mut scratch, &mut next);
            std::mem::swap(&mut current, &mut next);
            weight *= a;
        }
        let shift = (current.offset - final_offset) as usize;
        for (i, m) in current.masses.iter().enumerate() {
            acc[shift + i].add(weight * m);
        }
    }
    let masses = acc.iter().map(|s| s.value()).collect();
    Ok((
        DenseMeasure {
            offset: final_offset,
            masses,
        },
        truncation,
        a.powi(truncation as i32 + 1),
    ))
}

/// `h_{λ,f}(λ_a)` on `ℤ` for each `a`, with translates as exact shifts and
/// the divergence taken on the common positive window.
pub fn folner_entropy_curve(
    lambda: &FiniteMeasure<i64>,
    f: &ConvexGenerator,
    a_values: &[f64],
    eps: f64,
    family: FolnerFamily,
    budget: usize,
) -> Result<FolnerReport, WalkError> {
    if !lambda.is_probability() {
        return Err(WalkError::InvalidParameter(
            "λ must be a probability measure".into(),
        ));
    }
    let mut points = Vec::with_capacity(a_values.len());
    for &a in a_values {
        let (measure, truncation, tail_mass) = abel_projection(family, a, eps, budget)?;
        let entropy = shift_entropy(&measure, lambda, f, ShiftMode::Window);
        points.push(FolnerPoint {
            a,
            h: entropy.h,
            truncation,
            tail_mass,
            support_lo: measure.lo(),
            support_hi: measure.hi(),
            window_defect: entropy.window_defect,
        });
    }
    let mut sorted: Vec<&FolnerPoint> = points.iter().collect();
    sorted.sort_by(|x, y| x.a.total_cmp(&y.a));
    let non_increasing = sorted.windows(2).all(|w| w[1].h <= w[0].h);
    Ok(FolnerReport {
        family,
        eps,
        sigma0_defect: geometric_envelope().1,
        points,
        non_increasing,
    })
}
