use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::Serialize;

use super::{
    harmonic_measure, solve_q_tight, t_inverse, BoundaryError, CylinderMeasure, EntropyEvaluator,
    GeneratorMeasure, TailRule,
};
use crate::divergence::ConvexGenerator;

/// Allowed shortfall of a scanned entropy below the reference before the
/// minimality check is reported as violated.
pub const MINIMALITY_SLACK: f64 = 1e-9;

/// Parameters of [`minimality_scan`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanConfig {
    pub depth: usize,
    pub samples: usize,
    pub seed: u64,
    /// Use `ν_μ` itself as sample 0.
    pub include_anchor: bool,
    /// Share of draws concentrated around `ν_μ`.
    pub local_fraction: f64,
    /// Share of draws with some cylinders set to zero mass.
    pub zero_fraction: f64,
    /// Share of draws extended by the uniform tail rule.
    pub uniform_tail_fraction: f64,
    /// Tolerance handed to [`t_inverse`].
    pub tinv_tol: f64,
}

impl ScanConfig {
    pub fn new(depth: usize, samples: usize, seed: u64) -> Self {
        Self {
            depth,
            samples,
            seed,
            include_anchor: true,
            local_fraction: 0.25,
            zero_fraction: 0.1,
            uniform_tail_fraction: 0.15,
            tinv_tol: 1e-12,
        }
    }

    fn validate(&self) -> Result<(), BoundaryError> {
        if self.depth < 1 {
            return Err(BoundaryError::InvalidParameter(
                "depth must be at least 1".into(),
            ));
        }
        if self.samples < 1 {
            return Err(BoundaryError::InvalidParameter(
                "samples must be at least 1".into(),
            ));
        }
        let fractions = [
            self.local_fraction,
            self.zero_fraction,
            self.uniform_tail_fraction,
        ];
        if fractions.iter().any(|x| !(0.0..=1.0).contains(x)) || fractions.iter().sum::<f64>() > 1.0
        {
            return Err(BoundaryError::InvalidParameter(
                "sample-kind fractions must lie in [0,1] and sum to at most 1".into(),
            ));
        }
        Ok(())
    }
}

/// One scanned measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSample {
    pub index: usize,
    pub kind: &'static str,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub mu: GeneratorMeasure,
    pub reference_entropy: f64,
    pub min_entropy: f64,
    pub argmin_index: usize,
    pub argmin_kind: &'static str,
    pub argmin_tail: &'static str,
    pub argmin_masses: Vec<f64>,
    pub samples: usize,
    pub infinite_count: usize,
    pub theorem_a_violated: bool,
}

fn dirichlet(rng: &mut ChaCha8Rng, alphas: &[f64]) -> Vec<f64> {
    let mut draws: Vec<f64> = alphas
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
        .collect();
    let total: f64 = draws.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        let n = draws.len() as f64;
        return vec![1.0 / n; draws.len()];
    }
    for x in &mut draws {
        *x /= total;
    }
    normalize_exactly(&mut draws);
    draws
}

/// Moves the rounding residue of a normalized vector onto its largest entry.
fn normalize_exactly(masses: &mut [f64]) {
    let total: f64 = masses.iter().sum();
    let (imax, _) =
        masses.iter().enumerate().fold(
            (0, f64::MIN),
            |best, (i, &m)| if m > best.1 { (i, m) } else { best },
        );
    masses[imax] += 1.0 - total;
}

struct Sampler<'a> {
    config: &'a ScanConfig,
    anchor: &'a CylinderMeasure,
    harmonic_tail: TailRule,
}

impl Sampler<'_> {
    fn draw(&self, index: usize) -> Result<(&'static str, CylinderMeasure), BoundaryError> {
        if index == 0 && self.config.include_anchor {
            return Ok(("anchor", self.anchor.clone()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(index as u64);
        let anchor = self.anchor.masses();
        let n = anchor.len();
        let u: f64 = rng.random();
        let c = self.config;
        let symmetric = |rng: &mut ChaCha8Rng| {
            let alpha = 10f64.powf(rng.random_range(-1.0..1.0));
            dirichlet(rng, &vec![alpha; n])
        };
        let (kind, masses, tail) = if u < c.local_fraction {
            let scale = 10f64.powf(rng.random_range(1.0..4.0));
            let alphas: Vec<f64> = anchor.iter().map(|m| m * scale).collect();
            (
                "local",
                dirichlet(&mut rng, &alphas),
                self.harmonic_tail.clone(),
            )
        } else if u < c.local_fraction + c.zero_fraction {
            let mut masses = symmetric(&mut rng);
            let zeros = rng.random_range(1..=(n / 4).max(1));
            for _ in 0..zeros {
                let k = rng.random_range(0..n);
                masses[k] = 0.0;
            }
            let total: f64 = masses.iter().sum();
            if total > 0.0 {
                for m in &mut masses {
                    *m /= total;
                }
                normalize_exactly(&mut masses);
            } else {
                masses[0] = 1.0;
            }
            ("zeroed", masses, self.harmonic_tail.clone())
        } else if u < c.local_fraction + c.zero_fraction + c.uniform_tail_fraction {
            ("uniform-tail", symmetric(&mut rng), TailRule::Uniform)
        } else {
            ("dirichlet", symmetric(&mut rng), self.harmonic_tail.clone())
        };
        let nu = CylinderMeasure::new(self.anchor.rank(), self.anchor.depth(), masses, Some(tail))?;
        Ok((kind, nu))
    }
}

/// Scans random tail-extended depth-`n` measures for (λ,f)-entropy below
/// that of `ν_μ`, `μ = T⁻¹(λ)`.
///
/// Sample `i` draws its randomness from the stream `i` of a ChaCha generator
/// seeded with `seed`, so the report does not depend on the thread count.
pub fn minimality_scan(
    lambda: &GeneratorMeasure,
    f: &ConvexGenerator,
    config: &ScanConfig,
) -> Result<ScanReport, BoundaryError> {
    config.validate()?;
    let mu = t_inverse(lambda, f, config.tinv_tol)?;
    let q = solve_q_tight(&mu)?;
    let anchor = harmonic_measure(&mu, config.depth)?;
    let evaluator = EntropyEvaluator::new(lambda, config.depth, *f)?;
    let reference_entropy = evaluator.evaluate(&anchor)?;
    let sampler = Sampler {
        config,
        anchor: &anchor,
        harmonic_tail: TailRule::Harmonic(q),
    };
    let results: Vec<Result<ScanSample, BoundaryError>> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let (kind, nu) = sampler.draw(i)?;
            Ok(ScanSample {
                index: i,
                kind,
                entropy: evaluator.evaluate(&nu)?,
            })
        })
        .collect();
    let mut best: Option<ScanSample> = None;
    let mut infinite_count = 0;
    for r in results {
        let s = r?;
        if s.entropy.is_infinite() {
            infinite_count += 1;
        }
        if best.as_ref().is_none_or(|b| s.entropy < b.entropy) {
            best = Some(s);
        }
    }
    let best = best.expect("at least one sample");
    let (_, argmin) = sampler.draw(best.index)?;
    Ok(ScanReport {
        mu,
        reference_entropy,
        min_entropy: best.entropy,
        argmin_index: best.index,
        argmin_kind: best.kind,
        argmin_tail: argmin.tail().map(TailRule::name).unwrap_or("none"),
        argmin_masses: argmin.masses().to_vec(),
        samples: config.samples,
        infinite_count,
        theorem_a_violated: best.entropy < reference_entropy - MINIMALITY_SLACK,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientReport {
    pub entropy: f64,
    /// Cylinder whose mass is decreased in every direction.
    pub anchor_index: usize,
    pub h_step: f64,
    /// `(h(ν + h e_k - h e_anchor) - h(ν - h e_k + h e_anchor)) / 2h` per cylinder.
    pub components: Vec<f64>,
    pub max_abs: f64,
}

/// Central finite-difference gradient of `cylinder_entropy` along the
/// simplex-tangent directions `e_k - e_anchor`, where the anchor is the
/// heaviest cylinder (first in lexicographic order on ties).
pub fn entropy_gradient(
    lambda: &GeneratorMeasure,
    nu: &CylinderMeasure,
    f: &ConvexGenerator,
    h_step: f64,
) -> Result<GradientReport, BoundaryError> {
    let masses = nu.masses();
    let min_mass = masses.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(h_step > 0.0) {
        return Err(BoundaryError::InvalidParameter(format!(
            "h_step must be positive, got {h_step}"
        )));
    }
    if h_step >= min_mass / 10.0 {
        return Err(BoundaryError::StepTooLarge {
            step: h_step,
            min_mass,
        });
    }
    let evaluator = EntropyEvaluator::new(lambda, nu.depth(), *f)?;
    let entropy = evaluator.evaluate(nu)?;
    let anchor_index = masses
        .iter()
        .enumerate()
        .fold(
            (0, f64::MIN),
            |best, (i, &m)| if m > best.1 { (i, m) } else { best },
        )
        .0;
    let shifted = |k: usize, sign: f64| -> Result<f64, BoundaryError> {
        let mut m = masses.to_vec();
        m[k] += sign * h_step;
        m[anchor_index] -= sign * h_step;
        evaluator.evaluate(&nu.with_masses(m)?)
    };
    let components = (0..masses.len())
        .into_par_iter()
        .map(|k| {
            if k == anchor_index {
                return Ok(0.0);
            }
            Ok((shifted(k, 1.0)? - shifted(k, -1.0)?) / (2.0 * h_step))
        })
        .collect::<Result<Vec<f64>, BoundaryError>>()?;
    let max_abs = components.iter().fold(0.0, |m: f64, c| m.max(c.abs()));
    Ok(GradientReport {
        entropy,
        anchor_index,
        h_step,
        components,
        max_abs,
    })
}

/// [`entropy_gradient`] at `ν_μ`, `μ = T⁻¹(λ)`.
pub fn entropy_gradient_at_harmonic(
    lambda: &GeneratorMeasure,
    f: &ConvexGenerator,
    depth: usize,
    h_step: f64,
) -> Result<GradientReport, BoundaryError> {
    let mu = t_inverse(lambda, f, 1e-12)?;
    let nu = harmonic_measure(&mu, depth)?;
    entropy_gradient(lambda, &nu, f, h_step)
}
