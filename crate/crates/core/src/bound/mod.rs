//! Last-iterate suboptimality bound for (sub)gradient descent with step sizes
//! `gamma * eta_t`.
//!
//! For a horizon `t` the bound splits as `T1 / gamma + gamma * T2` with
//!
//! ```text
//! T1 = D^2 / (2 S)
//! T2 = Q / (2 S) + 1/2 * sum_{k<t} eta_k / S(k+1..t) * Q(k..t) / S(k..t)
//! ```
//!
//! where `S(a..b)` sums `eta_s` and `Q(a..b)` sums `eta_s^2 G_s^2` over the
//! range, and `S`, `Q` are the full sums over `1..t`. The optimal base
//! learning-rate is `sqrt(T1 / T2)` and the optimal value `2 sqrt(T1 T2)`.
//!
//! Every horizon is evaluated independently with one backward pass that
//! accumulates the suffix sums directly, so a single horizon costs `O(t)`
//! and a full curve `O(T^2 / stride)`.

mod ablation;
mod closed_form;
mod mirror;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use ablation::{ablation_curve, bound_min_ablation, gamma_star_min_ablation};
pub use closed_form::{
    bound_constant_closed_form, bound_linear_decay_closed_form, bound_polynomial_approx,
    bound_wsd_closed_form, harmonic, linear_decay_leading_factor, wsd_lambdas,
    wsd_large_horizon_approx, WsdLambdas,
};
pub use mirror::{bound_mirror, MirrorSpec};

use crate::error::{ensure_positive, Error, Result};
use crate::schedule::Schedule;
use crate::summation::NeumaierSum;
use crate::table::Table;

/// Bounds `G_t` on the expected gradient norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GradNormModel {
    /// `G_t = g` for every step.
    Constant { g: f64 },
    /// `G_t = scale * t^alpha`, `alpha <= 0`.
    PowerLaw { scale: f64, alpha: f64 },
}

impl GradNormModel {
    pub fn constant(g: f64) -> Result<Self> {
        ensure_positive("G", g)?;
        Ok(GradNormModel::Constant { g })
    }

    /// `G_t = t^alpha`.
    pub fn power_law(alpha: f64) -> Result<Self> {
        Self::scaled_power_law(1.0, alpha)
    }

    pub fn scaled_power_law(scale: f64, alpha: f64) -> Result<Self> {
        ensure_positive("G", scale)?;
        if !(alpha.is_finite() && alpha <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gradient-norm exponent {alpha} must be finite and <= 0"
            )));
        }
        Ok(GradNormModel::PowerLaw { scale, alpha })
    }

    #[inline]
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            GradNormModel::Constant { g } => g,
            GradNormModel::PowerLaw { scale, alpha } => scale * (t as f64).powf(alpha),
        }
    }

    /// Multiply every `G_t` by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            GradNormModel::Constant { g } => GradNormModel::Constant { g: g * factor },
            GradNormModel::PowerLaw { scale, alpha } => GradNormModel::PowerLaw {
                scale: scale * factor,
                alpha,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            GradNormModel::Constant { g } => ensure_positive("G", g).map(|_| ()),
            GradNormModel::PowerLaw { scale, alpha } => {
                Self::scaled_power_law(scale, alpha).map(|_| ())
            }
        }
    }
}

/// Everything one evaluation of the bound consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    pub schedule: Schedule,
    pub grad_norms: GradNormModel,
    /// Initial distance `||x_1 - x_*||`.
    pub d: f64,
    /// Base learning-rate.
    pub gamma: f64,
}

impl BoundSpec {
    pub fn new(schedule: Schedule, grad_norms: GradNormModel, d: f64, gamma: f64) -> Result<Self> {
        grad_norms.validate()?;
        ensure_positive("D", d)?;
        ensure_positive("gamma", gamma)?;
        Ok(Self {
            schedule,
            grad_norms,
            d,
            gamma,
        })
    }

    /// Spec whose `gamma` is the optimal one at the final horizon.
    pub fn with_optimal_gamma(schedule: Schedule, grad_norms: GradNormModel, d: f64) -> Result<Self> {
        let gamma = gamma_star(&schedule, &grad_norms, d, schedule.horizon())?;
        Self::new(schedule, grad_norms, d, gamma)
    }
}

/// The two halves of the bound at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Terms {
    pub t1: f64,
    pub t2: f64,
}

impl Terms {
    /// `T1 / gamma + gamma * T2`.
    pub fn omega(&self, gamma: f64) -> f64 {
        self.t1 / gamma + gamma * self.t2
    }

    pub fn gamma_star(&self) -> f64 {
        (self.t1 / self.t2).sqrt()
    }

    /// `2 sqrt(T1 T2)`, the bound at the optimal base learning-rate.
    pub fn optimal_bound(&self) -> f64 {
        2.0 * (self.t1 * self.t2).sqrt()
    }
}

fn check_range(schedule: &Schedule, t: usize) -> Result<()> {
    if t == 0 || t > schedule.horizon() {
        Err(Error::HorizonOutOfRange {
            t,
            horizon: schedule.horizon(),
        })
    } else {
        Ok(())
    }
}

/// Weighted sums at horizon `t` for weights `eta_s` and values `q_s`:
/// returns `(S, Q, K)` with `K = sum_{k<t} eta_k / S(k+1..t) * Q(k..t) / S(k..t)`.
pub(crate) fn suffix_kernel(eta: &[f64], q: &[f64]) -> (f64, f64, f64) {
    debug_assert_eq!(eta.len(), q.len());
    let t = eta.len();
    let mut s_suffix = NeumaierSum::new();
    let mut q_suffix = NeumaierSum::new();
    let mut k_sum = NeumaierSum::new();
    for k in (0..t).rev() {
        let after = s_suffix.value();
        s_suffix.add(eta[k]);
        q_suffix.add(q[k]);
        if k + 1 < t {
            k_sum.add(eta[k] / after * (q_suffix.value() / s_suffix.value()));
        }
    }
    (s_suffix.value(), q_suffix.value(), k_sum.value())
}

fn weighted_gradients(schedule: &Schedule, grad_norms: &GradNormModel) -> Vec<f64> {
    schedule
        .values()
        .iter()
        .enumerate()
        .map(|(i, &eta)| {
            let g = grad_norms.at(i + 1);
            eta * eta * g * g
        })
        .collect()
}

fn terms_from_parts(eta: &[f64], q: &[f64], d: f64) -> Terms {
    let (s, q_total, k_sum) = suffix_kernel(eta, q);
    Terms {
        t1: d * d / (2.0 * s),
        t2: q_total / (2.0 * s) + 0.5 * k_sum,
    }
}

/// `(T1, T2)` for the first `t` steps of `schedule`.
pub fn terms(schedule: &Schedule, grad_norms: &GradNormModel, d: f64, t: usize) -> Result<Terms> {
    check_range(schedule, t)?;
    grad_norms.validate()?;
    ensure_positive("D", d)?;
    let q = weighted_gradients(schedule, grad_norms);
    Ok(terms_from_parts(&schedule.values()[..t], &q[..t], d))
}

/// Optimal base learning-rate `sqrt(T1 / T2)` at horizon `t`.
pub fn gamma_star(schedule: &Schedule, grad_norms: &GradNormModel, d: f64, t: usize) -> Result<f64> {
    Ok(terms(schedule, grad_norms, d, t)?.gamma_star())
}

/// `2 sqrt(T1 T2)` at the final horizon.
pub fn optimal_bound(schedule: &Schedule, grad_norms: &GradNormModel, d: f64) -> Result<f64> {
    Ok(terms(schedule, grad_norms, d, schedule.horizon())?.optimal_bound())
}

/// Bound value at horizon `t`.
pub fn omega_at(spec: &BoundSpec, t: usize) -> Result<f64> {
    Ok(terms(&spec.schedule, &spec.grad_norms, spec.d, t)?.omega(spec.gamma))
}

/// `max(1, T / 2000)`: curves get at most ~2000 points.
pub fn default_stride(horizon: usize) -> usize {
    (horizon / 2000).max(1)
}

/// Horizons `1, 1 + stride, ...`, always ending at `horizon`.
pub fn evaluation_horizons(horizon: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut ts: Vec<usize> = (1..=horizon).step_by(stride).collect();
    if ts.last() != Some(&horizon) {
        ts.push(horizon);
    }
    ts
}

/// Bound evaluated over a set of horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub t_values: Vec<usize>,
    pub omega: Vec<f64>,
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    /// Base learning-rate the curve was evaluated with.
    pub gamma: f64,
    pub t1_final: f64,
    pub t2_final: f64,
    /// `sqrt(T1_final / T2_final)`.
    pub gamma_star: f64,
}

impl BoundCurve {
    fn from_terms(t_values: Vec<usize>, terms: Vec<Terms>, gamma: f64) -> Self {
        let last = *terms.last().expect("at least one horizon");
        Self {
            omega: terms.iter().map(|tm| tm.omega(gamma)).collect(),
            t1: terms.iter().map(|tm| tm.t1).collect(),
            t2: terms.iter().map(|tm| tm.t2).collect(),
            t_values,
            gamma,
            t1_final: last.t1,
            t2_final: last.t2,
            gamma_star: last.gamma_star(),
        }
    }

    /// Bound value at horizon `t`, if it was evaluated.
    pub fn omega_at(&self, t: usize) -> Option<f64> {
        self.t_values
            .binary_search(&t)
            .ok()
            .map(|i| self.omega[i])
    }

    pub fn final_omega(&self) -> f64 {
        *self.omega.last().expect("non-empty curve")
    }

    /// `(t, omega, T1, T2)` table.
    pub fn to_table(&self) -> Table {
        let mut table = Table::new(["t", "omega", "T1", "T2"]);
        for i in 0..self.t_values.len() {
            table.push(vec![
                self.t_values[i].into(),
                self.omega[i].into(),
                self.t1[i].into(),
                self.t2[i].into(),
            ]);
        }
        table
    }
}

/// Evaluate the bound at horizons `1, 1 + stride, ..., T`.
///
/// Horizons are evaluated in parallel; each one is internally sequential, so
/// the output does not depend on the number of threads.
pub fn omega_curve(spec: &BoundSpec, stride: usize) -> Result<BoundCurve> {
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }
    let horizon = spec.schedule.horizon();
    let t_values = evaluation_horizons(horizon, stride);
    let eta = spec.schedule.values();
    let q = weighted_gradients(&spec.schedule, &spec.grad_norms);
    let d = spec.d;
    let terms: Vec<Terms> = t_values
        .par_iter()
        .map(|&t| terms_from_parts(&eta[..t], &q[..t], d))
        .collect();
    Ok(BoundCurve::from_terms(t_values, terms, spec.gamma))
}

/// `Omega_start / Omega_end` over the window `[start, end]` of a stride-1 curve.
pub fn drop_ratio(curve: &BoundCurve, start: usize, end: usize) -> Option<f64> {
    Some(curve.omega_at(start)? / curve.omega_at(end)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{make_constant, make_wsd, CooldownShape};

    fn unit() -> GradNormModel {
        GradNormModel::constant(1.0).unwrap()
    }

    /// Literal double sum, no suffix accumulation.
    fn t2_direct(eta: &[f64], g: &[f64]) -> f64 {
        let t = eta.len();
        let s: f64 = eta.iter().sum();
        let q: f64 = (0..t).map(|i| eta[i] * eta[i] * g[i] * g[i]).sum();
        let mut acc = q / (2.0 * s);
        for k in 0..t.saturating_sub(1) {
            let after: f64 = eta[k + 1..].iter().sum();
            let from: f64 = eta[k..].iter().sum();
            let qk: f64 = (k..t).map(|i| eta[i] * eta[i] * g[i] * g[i]).sum();
            acc += 0.5 * eta[k] / after * qk / from;
        }
        acc
    }

    #[test]
    fn constant_schedule_terms() {
        let s = make_constant(10).unwrap();
        let tm = terms(&s, &unit(), 1.0, 10).unwrap();
        assert!((tm.t1 - 0.05).abs() < 1e-15);

        let s = make_constant(4).unwrap();
        let tm = terms(&s, &unit(), 1.0, 4).unwrap();
        assert!((tm.t2 - 17.0 / 12.0).abs() < 1e-14);
        let h3 = 1.0 + 0.5 + 1.0 / 3.0;
        assert!((tm.t2 - 0.5 * (1.0 + h3)).abs() < 1e-14);
    }

    #[test]
    fn single_step() {
        let s = make_constant(1).unwrap();
        let tm = terms(&s, &unit(), 1.0, 1).unwrap();
        assert_eq!(tm.t2, 0.5);
        assert_eq!(tm.t1, 0.5);
        let spec = BoundSpec::new(s, unit(), 1.0, 1.0).unwrap();
        assert_eq!(omega_at(&spec, 1).unwrap(), 1.0);
    }

    #[test]
    fn out_of_range() {
        let s = make_constant(4).unwrap();
        assert!(matches!(
            terms(&s, &unit(), 1.0, 5),
            Err(Error::HorizonOutOfRange { t: 5, horizon: 4 })
        ));
        assert!(terms(&s, &unit(), 1.0, 0).is_err());
    }

    #[test]
    fn matches_literal_double_sum() {
        let s = make_wsd(50, 0.3, CooldownShape::OneMinusSqrt).unwrap();
        let g = GradNormModel::power_law(-0.5).unwrap();
        let gs: Vec<f64> = (1..=50).map(|t| g.at(t)).collect();
        for t in [1, 2, 17, 35, 50] {
            let tm = terms(&s, &g, 1.0, t).unwrap();
            let direct = t2_direct(&s.values()[..t], &gs[..t]);
            assert!((tm.t2 - direct).abs() <= 1e-13 * direct, "t={t}");
        }
    }

    #[test]
    fn constant_gamma_star() {
        let t = 20usize;
        let s = make_constant(t).unwrap();
        let h: f64 = (1..t).map(|k| 1.0 / k as f64).sum();
        let expected = 1.0 / (t as f64 * (1.0 + h)).sqrt();
        let got = gamma_star(&s, &unit(), 1.0, t).unwrap();
        assert!((got - expected).abs() < 1e-14);
        let doubled = gamma_star(&s, &unit(), 2.0, t).unwrap();
        assert!((doubled - 2.0 * got).abs() < 1e-14);
    }

    #[test]
    fn curve_includes_final_horizon() {
        let s = make_wsd(401, 0.2, CooldownShape::Linear).unwrap();
        let spec = BoundSpec::with_optimal_gamma(s, unit(), 1.0).unwrap();
        let curve = omega_curve(&spec, 50).unwrap();
        assert_eq!(curve.t_values.first(), Some(&1));
        assert_eq!(curve.t_values.last(), Some(&401));
        assert!((curve.final_omega() - 2.0 * (curve.t1_final * curve.t2_final).sqrt()).abs() < 1e-14);
        assert!((curve.gamma_star - spec.gamma).abs() < 1e-15);
        assert!(omega_curve(&spec, 0).is_err());
    }

    #[test]
    fn omega_at_least_optimal_value() {
        let s = make_wsd(100, 0.2, CooldownShape::Linear).unwrap();
        let tm = terms(&s, &unit(), 1.0, 100).unwrap();
        for gamma in [0.01, 0.05, tm.gamma_star(), 0.2, 1.0] {
            assert!(tm.omega(gamma) >= tm.optimal_bound() * (1.0 - 1e-15));
        }
        assert!((tm.omega(tm.gamma_star()) - tm.optimal_bound()).abs() < 1e-15);
    }

    #[test]
    fn sudden_drop_during_cooldown() {
        let s = make_wsd(400, 0.2, CooldownShape::Linear).unwrap();
        let spec = BoundSpec::with_optimal_gamma(s, unit(), 1.0).unwrap();
        let curve = omega_curve(&spec, 1).unwrap();
        let cooldown = drop_ratio(&curve, 320, 400).unwrap();
        let before = drop_ratio(&curve, 240, 320).unwrap();
        assert!(cooldown > before, "{cooldown} vs {before}");
        for w in curve.omega[319..].windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn default_stride_caps_points() {
        assert_eq!(default_stride(400), 1);
        assert_eq!(default_stride(12_800), 6);
        assert!(evaluation_horizons(12_800, default_stride(12_800)).len() <= 2_200);
    }
}
