//! Min-suboptimality bound, used as an ablation of the last-iterate bound.
//!
//! `min_{s<=t} E[f(x_s) - f(x_*)] <= (D^2 + gamma^2 Q) / (2 gamma S)`, with
//! `S = sum eta_s` and `Q = sum eta_s^2 G_s^2` over `1..t`. In the same
//! `T1 / gamma + gamma * T2` form, `T2 = Q / (2 S)`.

use crate::bound::{check_range, evaluation_horizons, weighted_gradients, BoundCurve, BoundSpec, GradNormModel, Terms};
use crate::error::{ensure_positive, Error, Result};
use crate::schedule::Schedule;
use crate::summation::NeumaierSum;

fn ablation_terms(schedule: &Schedule, grad_norms: &GradNormModel, d: f64, t: usize) -> Result<Terms> {
    check_range(schedule, t)?;
    ensure_positive("D", d)?;
    let q = weighted_gradients(schedule, grad_norms);
    let s: NeumaierSum = schedule.values()[..t].iter().copied().collect();
    let q: NeumaierSum = q[..t].iter().copied().collect();
    Ok(Terms {
        t1: d * d / (2.0 * s.value()),
        t2: q.value() / (2.0 * s.value()),
    })
}

pub fn bound_min_ablation(spec: &BoundSpec, t: usize) -> Result<f64> {
    Ok(ablation_terms(&spec.schedule, &spec.grad_norms, spec.d, t)?.omega(spec.gamma))
}

/// `D / sqrt(sum_{s<=t} G_s^2 eta_s^2)`.
pub fn gamma_star_min_ablation(schedule: &Schedule, grad_norms: &GradNormModel, d: f64, t: usize) -> Result<f64> {
    Ok(ablation_terms(schedule, grad_norms, d, t)?.gamma_star())
}

/// Ablation bound over horizons `1, 1 + stride, ..., T`; `O(T)` via running sums.
pub fn ablation_curve(spec: &BoundSpec, stride: usize) -> Result<BoundCurve> {
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }
    let horizon = spec.schedule.horizon();
    let q = weighted_gradients(&spec.schedule, &spec.grad_norms);
    let t_values = evaluation_horizons(horizon, stride);
    let mut s_acc = NeumaierSum::new();
    let mut q_acc = NeumaierSum::new();
    let mut terms = Vec::with_capacity(t_values.len());
    let mut next = t_values.iter().peekable();
    for (i, &eta) in spec.schedule.values().iter().enumerate() {
        s_acc.add(eta);
        q_acc.add(q[i]);
        if next.peek() == Some(&&(i + 1)) {
            next.next();
            terms.push(Terms {
                t1: spec.d * spec.d / (2.0 * s_acc.value()),
                t2: q_acc.value() / (2.0 * s_acc.value()),
            });
        }
    }
    Ok(BoundCurve::from_terms(t_values, terms, spec.gamma))
}
