//! Chinchilla-style loss model `L(N, D) = E + A / N^alpha + B / D^beta`, used
//! to express a loss difference as extra training tokens or parameters.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Multiplicative loss adjustment for a different tokenizer vocabulary.
pub const VOCAB_FACTOR: f64 = 0.959;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaw {
    pub e: f64,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Multiplies the whole loss; 1 unless a vocabulary correction is wanted.
    #[serde(default = "one")]
    pub loss_factor: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ScalingLaw {
    fn default() -> Self {
        Self {
            e: 1.8172,
            a: 482.01,
            b: 2085.43,
            alpha: 0.3478,
            beta: 0.3658,
            loss_factor: 1.0,
        }
    }
}

impl ScalingLaw {
    /// `A` and `B` may be zero; the other constants must be positive.
    pub fn new(e: f64, a: f64, b: f64, alpha: f64, beta: f64) -> Result<Self> {
        let law = Self {
            e,
            a,
            b,
            alpha,
            beta,
            loss_factor: 1.0,
        };
        law.validate()?;
        Ok(law)
    }

    pub fn with_vocab_adjustment(mut self) -> Self {
        self.loss_factor = VOCAB_FACTOR;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("E", self.e)?;
        ensure_positive("alpha", self.alpha)?;
        ensure_positive("beta", self.beta)?;
        ensure_positive("loss_factor", self.loss_factor)?;
        for (name, v) in [("A", self.a), ("B", self.b)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn loss(&self, n: f64, d: f64) -> Result<f64> {
        ensure_positive("N", n)?;
        ensure_positive("D", d)?;
        Ok(self.loss_factor * (self.e + self.a / n.powf(self.alpha) + self.b / d.powf(self.beta)))
    }

    /// Token count `D2` with `loss(N, D1) - loss(N, D2) = delta`.
    pub fn tokens_for_delta(&self, n: f64, d1: f64, delta: f64) -> Result<f64> {
        ensure_positive("N", n)?;
        ensure_positive("D1", d1)?;
        solve_term(self.b * self.loss_factor, self.beta, d1, delta, "tokens")
    }

    /// Parameter count `N2` with `loss(N1, D) - loss(N2, D) = delta`.
    pub fn params_for_delta(&self, n1: f64, d: f64, delta: f64) -> Result<f64> {
        ensure_positive("N1", n1)?;
        ensure_positive("D", d)?;
        solve_term(self.a * self.loss_factor, self.alpha, n1, delta, "parameters")
    }
}

/// `x2 = (1/x1^p - delta/c)^(-1/p)`.
fn solve_term(c: f64, p: f64, x1: f64, delta: f64, what: &str) -> Result<f64> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be non-negative, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(x1);
    }
    let base = x1.powf(-p);
    let remaining = if c > 0.0 { base - delta / c } else { f64::NEG_INFINITY };
    if remaining <= 0.0 {
        return Err(Error::Unreachable(format!(
            "a loss reduction of {delta} cannot be reached by adding {what}"
        )));
    }
    Ok(remaining.powf(-1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_limits() {
        let law = ScalingLaw::default();
        assert!((law.loss(1e60, 1e60).unwrap() - 1.8172).abs() < 1e-8);
        let flat = ScalingLaw::new(2.0, 0.0, 0.0, 0.3, 0.3).unwrap();
        assert_eq!(flat.loss(10.0, 5.0).unwrap(), 2.0);
        assert!(law.loss(0.0, 1.0).is_err());
        assert!(ScalingLaw::new(1.0, -1.0, 1.0, 0.3, 0.3).is_err());
        assert!(ScalingLaw::new(1.0, 1.0, 1.0, 0.0, 0.3).is_err());
    }

    #[test]
    fn monotone_in_both_arguments() {
        let law = ScalingLaw::default();
        assert!(law.loss(2e8, 1e10).unwrap() < law.loss(1e8, 1e10).unwrap());
        assert!(law.loss(1e8, 2e10).unwrap() < law.loss(1e8, 1e10).unwrap());
    }

    #[test]
    fn zero_delta_is_identity() {
        let law = ScalingLaw::default();
        assert_eq!(law.tokens_for_delta(1e8, 1e10, 0.0).unwrap(), 1e10);
        assert_eq!(law.params_for_delta(1e8, 1e10, 0.0).unwrap(), 1e8);
    }

    #[test]
    fn unreachable_targets() {
        let law = ScalingLaw::default();
        assert!(matches!(law.tokens_for_delta(1e8, 1e10, 10.0), Err(Error::Unreachable(_))));
        assert!(matches!(law.params_for_delta(1e8, 1e10, 10.0), Err(Error::Unreachable(_))));
        assert!(law.tokens_for_delta(1e8, 1e10, -0.1).is_err());
    }

    #[test]
    fn vocab_adjustment_round_trip() {
        let law = ScalingLaw::default().with_vocab_adjustment();
        let d2 = law.tokens_for_delta(124e6, 10.24e9, 0.01).unwrap();
        let diff = law.loss(124e6, 10.24e9).unwrap() - law.loss(124e6, d2).unwrap();
        assert!((diff - 0.01).abs() < 1e-9 * 0.01);
    }
}
