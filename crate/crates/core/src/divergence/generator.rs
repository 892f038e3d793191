use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DivergenceError;

/// Convex function `f` with `f(1) = 0`, the kernel of an f-divergence.
///
/// Only closed-form kinds are supported so that `f(0⁺)` and
/// `f′(∞) = lim f(t)/t` are exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ConvexGenerator {
    /// `t ln t`
    Kl,
    /// `(t - 1)²`
    ChiSquared,
    /// `(t^α - 1) / (α(α - 1))`, `α ∉ {0, 1}`
    Power { alpha: f64 },
}

impl ConvexGenerator {
    pub fn power(alpha: f64) -> Result<Self, DivergenceError> {
        if !alpha.is_finite() || alpha == 0.0 || alpha == 1.0 {
            return Err(DivergenceError::BadGenerator(format!(
                "power exponent must be finite and not 0 or 1, got {alpha}"
            )));
        }
        Ok(ConvexGenerator::Power { alpha })
    }

    /// `f(t)` for `t > 0`. At `t = 0` this returns [`Self::at_zero`].
    pub fn eval(&self, t: f64) -> f64 {
        if t == 0.0 {
            return self.at_zero();
        }
        match *self {
            ConvexGenerator::Kl => {
                if t == 1.0 {
                    0.0
                } else {
                    t * t.ln()
                }
            }
            ConvexGenerator::ChiSquared => (t - 1.0) * (t - 1.0),
            ConvexGenerator::Power { alpha } => {
                if t == 1.0 {
                    0.0
                } else {
                    (t.powf(alpha) - 1.0) / (alpha * (alpha - 1.0))
                }
            }
        }
    }

    /// `f′(t)` for `t > 0`.
    pub fn deriv(&self, t: f64) -> f64 {
        match *self {
            ConvexGenerator::Kl => t.ln() + 1.0,
            ConvexGenerator::ChiSquared => 2.0 * (t - 1.0),
            ConvexGenerator::Power { alpha } => t.powf(alpha - 1.0) / (alpha - 1.0),
        }
    }

    /// `f(0⁺)`, possibly `+∞`.
    pub fn at_zero(&self) -> f64 {
        match *self {
            ConvexGenerator::Kl => 0.0,
            ConvexGenerator::ChiSquared => 1.0,
            ConvexGenerator::Power { alpha } => {
                if alpha > 0.0 {
                    -1.0 / (alpha * (alpha - 1.0))
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `f′(∞) = lim_{t→∞} f(t)/t`, possibly `+∞`.
    pub fn at_infinity_slope(&self) -> f64 {
        match *self {
            ConvexGenerator::Kl | ConvexGenerator::ChiSquared => f64::INFINITY,
            ConvexGenerator::Power { alpha } => {
                if alpha > 1.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
        }
    }

    /// `f(t) - f′(1)(t - 1)`, the generator shifted by its supporting line at 1.
    /// It is non-negative and yields the same divergence between probability
    /// measures.
    pub fn normalized_eval(&self, t: f64) -> f64 {
        self.eval(t) - self.deriv(1.0) * (t - 1.0)
    }

    /// `Ψ_f(z) = f(z) - z f′(z) + f′(1/z)`.
    pub fn psi(&self, z: f64) -> f64 {
        self.eval(z) - z * self.deriv(z) + self.deriv(1.0 / z)
    }

    /// Canonical spec string: `kl`, `chi2` or `power:<alpha>`.
    pub fn spec_string(&self) -> String {
        match *self {
            ConvexGenerator::Kl => "kl".to_string(),
            ConvexGenerator::ChiSquared => "chi2".to_string(),
            ConvexGenerator::Power { alpha } => format!("power:{alpha}"),
        }
    }
}

impl fmt::Display for ConvexGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec_string())
    }
}

impl FromStr for ConvexGenerator {
    type Err = DivergenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "kl" => Ok(ConvexGenerator::Kl),
            "chi2" => Ok(ConvexGenerator::ChiSquared),
            other => {
                let Some(alpha) = other.strip_prefix("power:") else {
                    return Err(DivergenceError::BadGenerator(format!(
                        "unknown generator '{other}' (expected kl, chi2 or power:<alpha>)"
                    )));
                };
                let alpha: f64 = alpha.parse().map_err(|_| {
                    DivergenceError::BadGenerator(format!("bad power exponent '{alpha}'"))
                })?;
                ConvexGenerator::power(alpha)
            }
        }
    }
}

impl TryFrom<String> for ConvexGenerator {
    type Error = DivergenceError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<ConvexGenerator> for String {
    fn from(value: ConvexGenerator) -> Self {
        value.spec_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds() -> Vec<ConvexGenerator> {
        vec![
            ConvexGenerator::Kl,
            ConvexGenerator::ChiSquared,
            ConvexGenerator::power(0.5).unwrap(),
            ConvexGenerator::power(2.0).unwrap(),
            ConvexGenerator::power(-1.0).unwrap(),
            ConvexGenerator::power(3.5).unwrap(),
        ]
    }

    #[test]
    fn vanishes_at_one() {
        for f in kinds() {
            assert_eq!(f.eval(1.0), 0.0, "{f}");
        }
    }

    #[test]
    fn derivative_matches_central_differences() {
        for f in kinds() {
            let mut t: f64 = 0.01;
            while t <= 100.0 {
                let h = 1e-6 * t;
                let fd = (f.eval(t + h) - f.eval(t - h)) / (2.0 * h);
                let d = f.deriv(t);
                let rel = (fd - d).abs() / d.abs().max(1e-3);
                assert!(rel < 1e-6, "{f} at t={t}: fd={fd} d={d}");
                t *= 1.37;
            }
        }
    }

    #[test]
    fn convex_on_sampled_triples() {
        let xs = [0.001, 0.01, 0.3, 0.9, 1.0, 1.7, 5.0, 40.0, 300.0];
        for f in kinds() {
            for &x in &xs {
                for &y in &xs {
                    for k in 1..10 {
                        let t = k as f64 / 10.0;
                        let lhs = f.eval((1.0 - t) * x + t * y);
                        let rhs = (1.0 - t) * f.eval(x) + t * f.eval(y);
                        assert!(lhs <= rhs + 1e-12 * rhs.abs().max(1.0), "{f} {x} {y} {t}");
                    }
                }
            }
        }
    }

    #[test]
    fn boundary_values() {
        assert_eq!(ConvexGenerator::Kl.at_zero(), 0.0);
        assert_eq!(ConvexGenerator::Kl.at_infinity_slope(), f64::INFINITY);
        assert_eq!(ConvexGenerator::ChiSquared.at_zero(), 1.0);
        assert_eq!(
            ConvexGenerator::ChiSquared.at_infinity_slope(),
            f64::INFINITY
        );
        let half = ConvexGenerator::power(0.5).unwrap();
        assert_eq!(half.at_zero(), 4.0);
        assert_eq!(half.at_infinity_slope(), 0.0);
        let neg = ConvexGenerator::power(-1.0).unwrap();
        assert_eq!(neg.at_zero(), f64::INFINITY);
        // f(t)/t at large t approaches the stated slope
        for f in kinds() {
            let slope = f.at_infinity_slope();
            let ratio = f.eval(1e12) / 1e12;
            if slope.is_infinite() {
                assert!(ratio > 10.0);
            } else {
                assert!((ratio - slope).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn parses_generator_strings() {
        assert_eq!(
            "kl".parse::<ConvexGenerator>().unwrap(),
            ConvexGenerator::Kl
        );
        assert_eq!(
            "chi2".parse::<ConvexGenerator>().unwrap(),
            ConvexGenerator::ChiSquared
        );
        assert_eq!(
            "power:0.5".parse::<ConvexGenerator>().unwrap(),
            ConvexGenerator::Power { alpha: 0.5 }
        );
        assert!("power:1".parse::<ConvexGenerator>().is_err());
        assert!("power:0".parse::<ConvexGenerator>().is_err());
        assert!("hellinger".parse::<ConvexGenerator>().is_err());
        let f: ConvexGenerator = serde_json::from_str("\"power:2\"").unwrap();
        assert_eq!(serde_json::to_string(&f).unwrap(), "\"power:2\"");
    }

    #[test]
    fn kl_psi_difference_simplifies() {
        let f = ConvexGenerator::Kl;
        for &q in &[0.05, 0.2, 1.0 / 3.0, 0.5, 0.9] {
            let generic = f.psi(q) - f.psi(1.0 / q);
            let closed = 1.0 / q - q - 2.0 * q.ln();
            assert!((generic - closed).abs() < 1e-12 * closed.abs().max(1.0));
        }
    }
}
