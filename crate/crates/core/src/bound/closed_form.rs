//! Closed-form bounds for constant `G`.

use serde::Serialize;

use crate::error::{ensure_positive, Error, Result};
use crate::summation::NeumaierSum;

/// Harmonic number `H_t = sum_{k=1}^t 1/k`, with `H_0 = 0`.
///
/// Accumulated from the smallest term upwards.
pub fn harmonic(t: usize) -> f64 {
    let mut acc = NeumaierSum::new();
    for k in (1..=t).rev() {
        acc.add(1.0 / k as f64);
    }
    acc.value()
}

fn check_scale(d: f64, g: f64) -> Result<()> {
    ensure_positive("D", d)?;
    ensure_positive("G", g)?;
    Ok(())
}

/// Constant schedule at the optimal base learning-rate: `D G sqrt((1 + H_{T-1}) / T)`.
pub fn bound_constant_closed_form(horizon: usize, d: f64, g: f64) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::InvalidHorizon(0));
    }
    check_scale(d, g)?;
    let t = horizon as f64;
    Ok(d * g * ((1.0 + harmonic(horizon - 1)) / t).sqrt())
}

/// The four terms of the wsd closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WsdLambdas {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
}

impl WsdLambdas {
    /// `Lambda1 + Lambda2 - Lambda3 + Lambda4`.
    pub fn combined(&self) -> f64 {
        self.lambda1 + self.lambda2 - self.lambda3 + self.lambda4
    }
}

/// Lambda terms for a linear cooldown starting at `cooldown_start`.
///
/// Requires `1 <= T0` and `T - T0 >= 2` (the `1/(T-T0)^2` and
/// `H_{T-T0-1}` terms are undefined or degenerate otherwise).
pub fn wsd_lambdas(horizon: usize, cooldown_start: usize) -> Result<WsdLambdas> {
    if cooldown_start == 0 || cooldown_start + 2 > horizon {
        return Err(Error::InvalidCooldown {
            horizon,
            cooldown_start,
        });
    }
    let (t, t0) = (horizon as f64, cooldown_start as f64);
    let gap = horizon - cooldown_start;
    Ok(WsdLambdas {
        lambda1: 2.0 / 3.0 + (t + 2.0 * t0) / (3.0 * (t + t0)),
        lambda2: harmonic(horizon + cooldown_start - 2) - harmonic(gap + 1),
        lambda3: (t - t0) * (t0 - 1.0) / (3.0 * (t - t0 + 2.0) * (t + t0)),
        lambda4: 1.0 / (gap as f64).powi(2) + harmonic(gap - 1) / (gap as f64 + 1.0),
    })
}

/// Closed-form wsd bound `D G sqrt(4 / (T + T0) * (L1 + L2 - L3 + L4))`.
///
/// Note: at `T0 = 1` this value falls slightly below the numeric
/// `2 sqrt(T1 T2)` of the same schedule; it is an upper bound for `T0 >= 2`.
pub fn bound_wsd_closed_form(horizon: usize, cooldown_start: usize, d: f64, g: f64) -> Result<f64> {
    check_scale(d, g)?;
    let lambdas = wsd_lambdas(horizon, cooldown_start)?;
    let denom = (horizon + cooldown_start) as f64;
    Ok(d * g * (4.0 / denom * lambdas.combined()).sqrt())
}

/// Large-horizon approximation of the wsd bound with `T0 = beta * T`
/// (`beta = 1 - c`), dropping `Lambda4`.
pub fn wsd_large_horizon_approx(horizon: usize, fraction: f64, d: f64, g: f64) -> Result<f64> {
    check_scale(d, g)?;
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidFraction(fraction));
    }
    let beta = 1.0 - fraction;
    let t = horizon as f64;
    let upper = ((1.0 + beta) * t).round() as usize;
    let lower = ((1.0 - beta) * t).round() as usize;
    if upper < 2 {
        return Err(Error::InvalidHorizon(horizon));
    }
    let log_gap = harmonic(upper - 2) - harmonic(lower + 1);
    let inner = 2.0 / 3.0 + (1.0 + 2.0 * beta) / (3.0 * (1.0 + beta)) - beta / (3.0 * (1.0 + beta))
        + log_gap;
    Ok(d * g / t.sqrt() * (4.0 / (1.0 + beta) * inner).sqrt())
}

/// `2 + (H_{T-1} - 2/3) / (T + 1)`.
pub fn linear_decay_leading_factor(horizon: usize) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::InvalidHorizon(0));
    }
    Ok(2.0 + (harmonic(horizon - 1) - 2.0 / 3.0) / (horizon as f64 + 1.0))
}

/// Linear-decay bound `(2 + (H_{T-1} - 2/3) / (T + 1)) D G / sqrt(T)`.
pub fn bound_linear_decay_closed_form(horizon: usize, d: f64, g: f64) -> Result<f64> {
    check_scale(d, g)?;
    Ok(linear_decay_leading_factor(horizon)? * d * g / (horizon as f64).sqrt())
}

/// Integral approximation `D G (alpha + 1) / sqrt(alpha T)` for the schedule
/// `(T + 1 - t)^alpha`.
pub fn bound_polynomial_approx(horizon: usize, alpha: f64, d: f64, g: f64) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::InvalidHorizon(0));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidExponent(alpha));
    }
    check_scale(d, g)?;
    Ok(d * g * (alpha + 1.0) / (alpha * horizon as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::{optimal_bound, GradNormModel};
    use crate::schedule::{make_constant, make_polynomial_decay, make_wsd, make_wsd_with_start, CooldownShape};

    #[test]
    fn harmonic_small_values() {
        assert_eq!(harmonic(0), 0.0);
        assert_eq!(harmonic(1), 1.0);
        assert!((harmonic(3) - 11.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_sandwich() {
        for t in [1usize, 2, 3, 10, 1000, 123_457] {
            let h = harmonic(t);
            let ln = (t as f64).ln();
            assert!(((t + 1) as f64).ln() <= h && h <= 1.0 + ln, "t={t}");
        }
    }

    #[test]
    fn constant_closed_form() {
        assert_eq!(bound_constant_closed_form(1, 1.0, 1.0).unwrap(), 1.0);
        let v = bound_constant_closed_form(4, 1.0, 1.0).unwrap();
        assert!((v - (17.0f64 / 6.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!((v - 0.84163).abs() < 1e-5);
        let g = GradNormModel::constant(1.0).unwrap();
        let numeric = optimal_bound(&make_constant(4).unwrap(), &g, 1.0).unwrap();
        assert!((v - numeric).abs() <= 1e-12 * numeric);
    }

    #[test]
    fn wsd_lambda3_vanishes_at_first_step() {
        assert_eq!(wsd_lambdas(100, 1).unwrap().lambda3, 0.0);
    }

    #[test]
    fn wsd_closed_form_domain() {
        assert!(matches!(bound_wsd_closed_form(10, 9, 1.0, 1.0), Err(Error::InvalidCooldown { .. })));
        assert!(matches!(bound_wsd_closed_form(10, 10, 1.0, 1.0), Err(Error::InvalidCooldown { .. })));
        assert!(bound_wsd_closed_form(10, 0, 1.0, 1.0).is_err());
        assert!(bound_wsd_closed_form(10, 8, 1.0, 1.0).is_ok());
    }

    #[test]
    fn wsd_closed_form_upper_bounds_numeric() {
        let g = GradNormModel::constant(1.0).unwrap();
        let s = make_wsd(100, 0.2, CooldownShape::Linear).unwrap();
        let numeric = optimal_bound(&s, &g, 1.0).unwrap();
        let closed = bound_wsd_closed_form(100, 80, 1.0, 1.0).unwrap();
        assert!(closed >= numeric, "{closed} < {numeric}");
    }

    #[test]
    fn wsd_closed_form_slightly_below_numeric_at_first_step() {
        // the closed form's harmonic-difference estimate is negative at T0 = 1
        let g = GradNormModel::constant(1.0).unwrap();
        for t in [4usize, 50, 300] {
            let s = make_wsd_with_start(t, 1, CooldownShape::Linear).unwrap();
            let numeric = optimal_bound(&s, &g, 1.0).unwrap();
            let closed = bound_wsd_closed_form(t, 1, 1.0, 1.0).unwrap();
            assert!(closed < numeric && closed > 0.98 * numeric, "T={t}");
        }
    }

    #[test]
    fn linear_decay_closed_form() {
        let v = bound_linear_decay_closed_form(1, 1.0, 1.0).unwrap();
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
        for t in [1usize, 10, 1000] {
            let v = bound_linear_decay_closed_form(t, 2.0, 3.0).unwrap();
            assert!(v >= 6.0 / (t as f64).sqrt());
        }
    }

    #[test]
    fn polynomial_approximation() {
        assert!((bound_polynomial_approx(400, 1.0, 1.0, 1.0).unwrap() - 0.1).abs() < 1e-15);
        let at_one = bound_polynomial_approx(100, 1.0, 1.0, 1.0).unwrap();
        for alpha in [0.25, 0.5, 0.9, 1.1, 2.0, 4.0] {
            assert!(bound_polynomial_approx(100, alpha, 1.0, 1.0).unwrap() > at_one);
        }
        assert!(matches!(bound_polynomial_approx(100, 0.0, 1.0, 1.0), Err(Error::InvalidExponent(_))));

        let g = GradNormModel::constant(1.0).unwrap();
        let s = make_polynomial_decay(2_000, 1.0).unwrap();
        let numeric = optimal_bound(&s, &g, 1.0).unwrap();
        let approx = bound_polynomial_approx(2_000, 1.0, 1.0, 1.0).unwrap();
        assert!(((approx - numeric) / numeric).abs() < 0.1);
    }

    #[test]
    fn large_horizon_approx_is_log_free() {
        // the bracket stays bounded as T grows
        let a = wsd_large_horizon_approx(10_000, 0.2, 1.0, 1.0).unwrap() * 100.0;
        let b = wsd_large_horizon_approx(100_000, 0.2, 1.0, 1.0).unwrap() * 100_000f64.sqrt();
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
}
