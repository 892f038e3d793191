use super::{solve_q_tight, BoundaryError, GeneratorMeasure};
use crate::divergence::ConvexGenerator;

/// Newton iteration cap of [`t_inverse`].
pub const TINV_MAX_ITERATIONS: usize = 200;

const JACOBIAN_STEP: f64 = 1e-6;

/// `Ψ_f(q_j) - Ψ_f(1/q_j)` for `j = 1..d`.
pub fn t_map_denominators(
    mu: &GeneratorMeasure,
    f: &ConvexGenerator,
) -> Result<Vec<f64>, BoundaryError> {
    let q = solve_q_tight(mu)?;
    let mut out = Vec::with_capacity(mu.rank() as usize);
    for j in 1..=mu.rank() as i32 {
        let qj = q.q(j);
        let value = f.psi(qj) - f.psi(1.0 / qj);
        if !(value > 0.0) || !value.is_finite() {
            return Err(BoundaryError::NonPositiveDenominator {
                generator: j,
                value,
            });
        }
        out.push(value);
    }
    Ok(out)
}

/// `T(μ) = λ` with `λ_{±j} = c / (Ψ_f(q_j) - Ψ_f(1/q_j))`, `c` normalizing.
pub fn t_map(
    mu: &GeneratorMeasure,
    f: &ConvexGenerator,
) -> Result<GeneratorMeasure, BoundaryError> {
    let weights: Vec<f64> = t_map_denominators(mu, f)?.iter().map(|d| 1.0 / d).collect();
    GeneratorMeasure::symmetric(&weights)
}

fn measure_from_logs(y: &[f64]) -> Result<GeneratorMeasure, BoundaryError> {
    let top = y.iter().cloned().fold(0.0, f64::max);
    let mut half: Vec<f64> = y.iter().map(|v| (v - top).exp()).collect();
    half.push((-top).exp());
    GeneratorMeasure::symmetric(&half)
}

fn logs_of(mu: &GeneratorMeasure) -> Vec<f64> {
    let half = mu.half_weights();
    let last = half[half.len() - 1].ln();
    half[..half.len() - 1]
        .iter()
        .map(|p| p.ln() - last)
        .collect()
}

fn t_residual(y: &[f64], target: &[f64], f: &ConvexGenerator) -> Result<Vec<f64>, BoundaryError> {
    let mu = measure_from_logs(y)?;
    let lambda = t_map(&mu, f)?;
    Ok(lambda
        .half_weights()
        .iter()
        .zip(target)
        .map(|(a, b)| a - b)
        .collect())
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `T(μ) = λ` by damped Newton iteration in the log-coordinates
/// `y_j = ln(p_j / p_d)`, starting from `μ = λ`.
///
/// The `d`-th component of `T(μ) - λ` is fixed by the other ones through
/// normalization, so only the first `d - 1` are solved for. The Jacobian is
/// a forward finite difference.
pub fn t_inverse(
    lambda: &GeneratorMeasure,
    f: &ConvexGenerator,
    tol: f64,
) -> Result<GeneratorMeasure, BoundaryError> {
    if !(tol > 0.0) {
        return Err(BoundaryError::InvalidParameter(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let rank = lambda.rank();
    if rank < 2 {
        return Err(BoundaryError::RankTooSmall(rank));
    }
    let half = lambda.half_weights();
    let target = &half;
    let n = rank as usize - 1;
    let mut y = logs_of(lambda);
    let mut r = t_residual(&y, target, f)?;
    let mut norm = sup_norm(&r);
    let mut trace = vec![norm];
    for _ in 0..TINV_MAX_ITERATIONS {
        if norm < tol {
            return measure_from_logs(&y);
        }
        // Jacobian of the first n residual components with respect to y.
        let mut jac = vec![vec![0.0; n]; n];
        for k in 0..n {
            let mut shifted = y.clone();
            shifted[k] += JACOBIAN_STEP;
            let rk = t_residual(&shifted, target, f)?;
            for i in 0..n {
                jac[i][k] = (rk[i] - r[i]) / JACOBIAN_STEP;
            }
        }
        let rhs: Vec<f64> = r[..n].iter().map(|v| -v).collect();
        let step = solve_linear(jac, rhs).ok_or_else(|| BoundaryError::NoConvergence {
            iterations: trace.len() - 1,
            residual: norm,
            trace: trace.clone(),
        })?;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate: Vec<f64> = y.iter().zip(&step).map(|(a, s)| a + scale * s).collect();
            if let Ok(rc) = t_residual(&candidate, target, f) {
                let nc = sup_norm(&rc);
                if nc < norm {
                    y = candidate;
                    r = rc;
                    norm = nc;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        trace.push(norm);
        if !accepted {
            break;
        }
    }
    if norm < tol {
        return measure_from_logs(&y);
    }
    Err(BoundaryError::NoConvergence {
        iterations: trace.len() - 1,
        residual: norm,
        trace,
    })
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (target, source) in lower[0][col..n].iter_mut().zip(&upper[col][col..n]) {
                *target -= factor * source;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::solve_q;

    #[test]
    fn uniform_maps_to_uniform() {
        for d in 2..=4 {
            let mu = GeneratorMeasure::uniform(d);
            for f in [ConvexGenerator::Kl, ConvexGenerator::ChiSquared] {
                let lambda = t_map(&mu, &f).unwrap();
                assert!(lambda.distance(&mu) < 1e-15, "d={d} {f}");
                let back = t_inverse(&lambda, &f, 1e-12).unwrap();
                assert!(back.distance(&mu) < 1e-12);
            }
        }
    }

    #[test]
    fn kl_denominator_simplifies() {
        let mu = GeneratorMeasure::symmetric(&[0.4, 0.1]).unwrap();
        let q = solve_q(&mu, 1e-15).unwrap();
        let generic = t_map_denominators(&mu, &ConvexGenerator::Kl).unwrap();
        for (j, g) in (1..=2).zip(&generic) {
            let qj = q.q(j);
            let closed = 1.0 / qj - qj - 2.0 * qj.ln();
            assert!((g - closed).abs() < 1e-12);
        }
        let lambda = t_map(&mu, &ConvexGenerator::Kl).unwrap();
        let c1 = 1.0 / q.q(1) - q.q(1) - 2.0 * q.q(1).ln();
        let c2 = 1.0 / q.q(2) - q.q(2) - 2.0 * q.q(2).ln();
        assert_eq!(lambda.weight(1) < lambda.weight(2), c1 > c2);
        assert!(lambda.weight(1) > lambda.weight(2));
    }

    #[test]
    fn round_trip_of_asymmetric_example() {
        let mu = GeneratorMeasure::symmetric(&[0.4, 0.1]).unwrap();
        for f in [
            ConvexGenerator::Kl,
            ConvexGenerator::ChiSquared,
            ConvexGenerator::power(0.5).unwrap(),
        ] {
            let lambda = t_map(&mu, &f).unwrap();
            let back = t_inverse(&lambda, &f, 1e-12).unwrap();
            assert!(back.distance(&mu) < 1e-8, "{f}: {:?}", back.half_weights());
            assert!(t_map(&back, &f).unwrap().distance(&lambda) < 1e-12);
        }
    }

    #[test]
    fn perturbation_sign_pattern() {
        let f = ConvexGenerator::Kl;
        for (a, b) in [(0.251, 0.249), (0.249, 0.251)] {
            let lambda = GeneratorMeasure::symmetric(&[a, b]).unwrap();
            let mu = t_inverse(&lambda, &f, 1e-12).unwrap();
            assert_eq!(
                (mu.weight(1) - 0.25).signum(),
                (lambda.weight(1) - 0.25).signum()
            );
            assert_eq!(
                (mu.weight(2) - 0.25).signum(),
                (lambda.weight(2) - 0.25).signum()
            );
        }
        let lambda = GeneratorMeasure::symmetric(&[0.2, 0.18, 0.12]).unwrap();
        let mu = t_inverse(&lambda, &f, 1e-12).unwrap();
        for j in 1..=3 {
            let uniform = 1.0 / 6.0;
            assert_eq!(
                (mu.weight(j) - uniform).signum(),
                (lambda.weight(j) - uniform).signum()
            );
        }
    }

    #[test]
    fn rejects_bad_tolerance() {
        let lambda = GeneratorMeasure::uniform(2);
        assert!(t_inverse(&lambda, &ConvexGenerator::Kl, 0.0).is_err());
    }
}
