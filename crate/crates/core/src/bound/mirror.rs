//! Last-iterate bound for stochastic mirror descent.
//!
//! With a `mu`-strongly convex mirror map the Euclidean bound generalizes to
//!
//! ```text
//! B / S + Q / (2 mu S) + 1/(2 mu) * sum_{k<t} eta_k / S(k+1..t) * Q(k..t) / S(k..t)
//! ```
//!
//! with `B = E[B_psi(x_*, x_1)]` and `Q` built from dual-norm gradient bounds.
//! The step sizes are the schedule values themselves; fold a base
//! learning-rate into the schedule with [`Schedule::scaled`].

use serde::{Deserialize, Serialize};

use crate::bound::{check_range, suffix_kernel, weighted_gradients, GradNormModel};
use crate::error::{ensure_positive, Error, Result};
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorSpec {
    /// Expected Bregman divergence between the reference point and the start.
    pub bregman_init: f64,
    /// Strong-convexity modulus of the mirror map.
    pub mu: f64,
    /// Bounds on the dual norms of the stochastic subgradients.
    pub dual_grad_norms: GradNormModel,
}

impl MirrorSpec {
    pub fn new(bregman_init: f64, mu: f64, dual_grad_norms: GradNormModel) -> Result<Self> {
        if !(bregman_init.is_finite() && bregman_init >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Bregman divergence {bregman_init} must be non-negative"
            )));
        }
        ensure_positive("mu", mu)?;
        Ok(Self {
            bregman_init,
            mu,
            dual_grad_norms,
        })
    }

    /// Euclidean mirror map `psi = ||x||^2 / 2` at initial distance `d`.
    pub fn euclidean(d: f64, grad_norms: GradNormModel) -> Result<Self> {
        ensure_positive("D", d)?;
        Self::new(0.5 * d * d, 1.0, grad_norms)
    }
}

pub fn bound_mirror(spec: &MirrorSpec, schedule: &Schedule, t: usize) -> Result<f64> {
    check_range(schedule, t)?;
    let q = weighted_gradients(schedule, &spec.dual_grad_norms);
    let (s, q_total, k_sum) = suffix_kernel(&schedule.values()[..t], &q[..t]);
    Ok(spec.bregman_init / s + (q_total / s + k_sum) / (2.0 * spec.mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::{omega_at, BoundSpec};
    use crate::schedule::{make_constant, make_wsd, CooldownShape};

    #[test]
    fn euclidean_constant_schedule() {
        let g = GradNormModel::constant(1.0).unwrap();
        let spec = MirrorSpec::new(0.5, 1.0, g).unwrap();
        let v = bound_mirror(&spec, &make_constant(4).unwrap(), 4).unwrap();
        assert!((v - (0.125 + 17.0 / 12.0)).abs() < 1e-14);
        assert!((v - 1.54167).abs() < 1e-5);
    }

    #[test]
    fn euclidean_specialization_absorbs_gamma() {
        let g = GradNormModel::constant(0.7).unwrap();
        let s = make_wsd(60, 0.25, CooldownShape::Linear).unwrap();
        let gamma = 0.13;
        let spec = BoundSpec::new(s.clone(), g, 2.0, gamma).unwrap();
        let mirror = MirrorSpec::euclidean(2.0, g).unwrap();
        let v = bound_mirror(&mirror, &s.scaled(gamma).unwrap(), 60).unwrap();
        let omega = omega_at(&spec, 60).unwrap();
        assert!((v - omega).abs() <= 1e-12 * omega);
    }

    #[test]
    fn mu_scales_gradient_terms() {
        let g = GradNormModel::constant(1.0).unwrap();
        let s = make_wsd(30, 0.2, CooldownShape::Linear).unwrap();
        let one = bound_mirror(&MirrorSpec::new(0.0, 1.0, g).unwrap(), &s, 30).unwrap();
        let two = bound_mirror(&MirrorSpec::new(0.0, 2.0, g).unwrap(), &s, 30).unwrap();
        assert!((two - 0.5 * one).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = GradNormModel::constant(1.0).unwrap();
        assert!(MirrorSpec::new(-1.0, 1.0, g).is_err());
        assert!(MirrorSpec::new(1.0, 0.0, g).is_err());
    }
}
