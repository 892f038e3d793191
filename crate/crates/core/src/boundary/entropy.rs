use super::{BoundaryError, CylinderMeasure, GeneratorMeasure, PushforwardPlan, QVector};
use crate::divergence::{divergence_of_masses, weight_times, ConvexGenerator, ZERO_MASS};
use crate::free_group::{Letter, ReducedWord};
use crate::sum::CompensatedSum;

/// `d(a_j ν_μ)/dν_μ` on the cylinder `C_w`: `1/q_j` if `w` starts with `a_j`,
/// `q_j` otherwise.
pub fn rn_generator(q: &QVector, j: Letter, w: &ReducedWord) -> Result<f64, BoundaryError> {
    if j == 0 || j.unsigned_abs() > q.rank() {
        return Err(BoundaryError::InvalidParameter(format!(
            "generator {j} outside rank {}",
            q.rank()
        )));
    }
    match w.first() {
        None => Err(BoundaryError::InvalidParameter(
            "cylinder word must be non-empty".into(),
        )),
        Some(first) if first == j => Ok(1.0 / q.q(j)),
        Some(_) => Ok(q.q(j)),
    }
}

/// `Σ_j λ_j (v_j f(1/q_j) + (1 - v_j) f(q_j))`, the (λ,f)-entropy of `ν_μ`.
pub fn harmonic_entropy_closed_form(
    q: &QVector,
    lambda: &GeneratorMeasure,
    f: &ConvexGenerator,
) -> f64 {
    let mut acc = CompensatedSum::new();
    for j in lambda.letters() {
        let (qj, vj) = (q.q(j), q.v(j));
        acc.add(lambda.weight(j) * (vj * f.eval(1.0 / qj) + (1.0 - vj) * f.eval(qj)));
    }
    acc.value()
}

/// Reusable evaluator of `h_{λ,f}` for tail-extended measures of a fixed
/// rank and depth.
///
/// For a measure defined at depth `n` with a Markov tail, `d(a_jν)/dν` is
/// constant on depth-`(n+1)` cylinders, so the divergence of the depth-`n+1`
/// tables is the exact divergence of the boundary measures.
#[derive(Debug, Clone)]
pub struct EntropyEvaluator {
    rank: u32,
    depth: usize,
    f: ConvexGenerator,
    terms: Vec<(f64, PushforwardPlan)>,
}

impl EntropyEvaluator {
    pub fn new(
        lambda: &GeneratorMeasure,
        depth: usize,
        f: ConvexGenerator,
    ) -> Result<Self, BoundaryError> {
        let rank = lambda.rank();
        let mut terms = Vec::new();
        for j in lambda.letters() {
            let w = lambda.weight(j);
            if w > 0.0 {
                let g = ReducedWord::generator(rank, j)?;
                terms.push((w, PushforwardPlan::new(&g, depth + 2)?));
            }
        }
        Ok(Self {
            rank,
            depth,
            f,
            terms,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Per-generator divergences `D_f(a_jν‖ν)` in letter order together with
    /// the λ-weighted total.
    pub fn evaluate_terms(&self, nu: &CylinderMeasure) -> Result<(Vec<f64>, f64), BoundaryError> {
        if nu.rank() != self.rank {
            return Err(BoundaryError::RankMismatch(self.rank, nu.rank()));
        }
        if nu.depth() != self.depth {
            return Err(BoundaryError::DepthMismatch {
                expected: self.depth,
                found: nu.depth(),
            });
        }
        let reference = nu.refine(self.depth + 1)?;
        let source = nu.refine(self.depth + 2)?;
        let mut divergences = Vec::with_capacity(self.terms.len());
        let mut total = CompensatedSum::new();
        let mut infinite = false;
        for (weight, plan) in &self.terms {
            let translated = plan.apply_masses(source.masses());
            let d = divergence_of_masses(&translated, reference.masses(), &self.f, ZERO_MASS);
            divergences.push(d);
            let term = weight_times(*weight, d);
            if term.is_infinite() {
                infinite = true;
            } else {
                total.add(term);
            }
        }
        Ok((
            divergences,
            if infinite {
                f64::INFINITY
            } else {
                total.value()
            },
        ))
    }

    pub fn evaluate(&self, nu: &CylinderMeasure) -> Result<f64, BoundaryError> {
        Ok(self.evaluate_terms(nu)?.1)
    }
}

/// `h_{λ,f}(∂F_d, ν) = Σ_j λ_j D_f(a_jν‖ν)` for a tail-extended cylinder measure.
pub fn cylinder_entropy(
    lambda: &GeneratorMeasure,
    nu: &CylinderMeasure,
    f: &ConvexGenerator,
) -> Result<f64, BoundaryError> {
    if lambda.rank() != nu.rank() {
        return Err(BoundaryError::RankMismatch(lambda.rank(), nu.rank()));
    }
    EntropyEvaluator::new(lambda, nu.depth(), *f)?.evaluate(nu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{harmonic_measure, pushforward, solve_q, TailRule};
    use crate::free_group::{reduce, WordIndexer};

    #[test]
    fn uniform_f2_kl_entropy_is_half_log_three() {
        let mu = GeneratorMeasure::uniform(2);
        let nu = harmonic_measure(&mu, 2).unwrap();
        let h = cylinder_entropy(&mu, &nu, &ConvexGenerator::Kl).unwrap();
        assert!((h - 0.5 * 3f64.ln()).abs() < 1e-12, "{h}");
        assert!((h - 0.549306).abs() < 1e-6);
    }

    #[test]
    fn asymmetric_entropy_matches_closed_form() {
        let mu = GeneratorMeasure::symmetric(&[0.4, 0.1]).unwrap();
        let lambda = GeneratorMeasure::symmetric(&[0.2, 0.3]).unwrap();
        let q = solve_q(&mu, 1e-15).unwrap();
        let nu = harmonic_measure(&mu, 2).unwrap();
        for f in [
            ConvexGenerator::Kl,
            ConvexGenerator::ChiSquared,
            ConvexGenerator::power(0.5).unwrap(),
        ] {
            let h = cylinder_entropy(&lambda, &nu, &f).unwrap();
            let closed = harmonic_entropy_closed_form(&q, &lambda, &f);
            assert!((h - closed).abs() < 1e-10, "{f}: {h} vs {closed}");
        }
    }

    #[test]
    fn entropy_is_invariant_under_refinement() {
        let mu = GeneratorMeasure::symmetric(&[0.3, 0.2]).unwrap();
        let lambda = GeneratorMeasure::uniform(2);
        let base = CylinderMeasure::new(
            2,
            2,
            vec![
                0.1, 0.05, 0.05, 0.1, 0.05, 0.1, 0.05, 0.1, 0.05, 0.1, 0.15, 0.1,
            ],
            Some(TailRule::Harmonic(solve_q(&mu, 1e-15).unwrap())),
        )
        .unwrap();
        let h2 = cylinder_entropy(&lambda, &base, &ConvexGenerator::Kl).unwrap();
        for depth in 3..=5 {
            let h = cylinder_entropy(&lambda, &base.refine(depth).unwrap(), &ConvexGenerator::Kl)
                .unwrap();
            assert!((h - h2).abs() < 1e-10, "depth {depth}: {h} vs {h2}");
        }
    }

    #[test]
    fn zero_cylinder_gives_infinite_kl_entropy() {
        let lambda = GeneratorMeasure::uniform(2);
        let nu =
            CylinderMeasure::new(2, 1, vec![0.0, 0.4, 0.3, 0.3], Some(TailRule::Uniform)).unwrap();
        assert_eq!(
            cylinder_entropy(&lambda, &nu, &ConvexGenerator::Kl).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn rn_examples_and_total_mass() {
        let q = solve_q(&GeneratorMeasure::uniform(2), 1e-15).unwrap();
        let a1 = reduce(&[1], 2).unwrap();
        let a2 = reduce(&[2], 2).unwrap();
        assert!((rn_generator(&q, 1, &a1).unwrap() - 3.0).abs() < 1e-13);
        assert!((rn_generator(&q, 1, &a2).unwrap() - 1.0 / 3.0).abs() < 1e-13);
        assert!(rn_generator(&q, 1, &ReducedWord::identity(2)).is_err());
        let mu = GeneratorMeasure::symmetric(&[0.1, 0.4]).unwrap();
        let q = solve_q(&mu, 1e-15).unwrap();
        for j in [-2, -1, 1, 2] {
            let total = q.v(j) / q.q(j) + (1.0 - q.v(j)) * q.q(j);
            assert!((total - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn rn_agrees_with_pushforward_ratios() {
        let mu = GeneratorMeasure::symmetric(&[0.25, 0.15, 0.1]).unwrap();
        let q = solve_q(&mu, 1e-15).unwrap();
        for depth in 1..=3 {
            let nu = harmonic_measure(&mu, depth + 1).unwrap();
            let base = nu.marginal(depth).unwrap();
            for j in mu.letters() {
                let g = ReducedWord::generator(3, j).unwrap();
                let pushed = pushforward(&g, &nu).unwrap();
                for (i, w) in WordIndexer::new(3, depth).words().enumerate() {
                    let ratio = pushed.masses()[i] / base.masses()[i];
                    assert!((ratio - rn_generator(&q, j, &w).unwrap()).abs() < 1e-12);
                }
            }
        }
    }
}
