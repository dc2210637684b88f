//! Direct, quadratic-time oracles shared by the integration tests.
#![allow(dead_code)]

use schedbound_core::simulate::SplitMix64;

/// Bound at horizon `eta.len()` summed term by term from its definition.
pub fn direct_bound(eta: &[f64], g: &[f64], d: f64, gamma: f64) -> f64 {
    let (t1, t2) = direct_terms(eta, g, d);
    t1 / gamma + gamma * t2
}

/// `(T1, T2)` by plain double loops.
pub fn direct_terms(eta: &[f64], g: &[f64], d: f64) -> (f64, f64) {
    let n = eta.len();
    let s: f64 = eta.iter().sum();
    let q: f64 = (0..n).map(|t| eta[t] * eta[t] * g[t] * g[t]).sum();
    let mut inner = 0.0;
    for k in 0..n.saturating_sub(1) {
        let after: f64 = eta[k + 1..].iter().sum();
        let from: f64 = eta[k..].iter().sum();
        let qk: f64 = (k..n).map(|t| eta[t] * eta[t] * g[t] * g[t]).sum();
        inner += eta[k] / after * qk / from;
    }
    (d * d / (2.0 * s), q / (2.0 * s) + 0.5 * inner)
}

/// Right-hand side of the last-iterate identity
/// `q_T = (sum w q)/(sum w) + sum_{k<T} w_k / W(k+1..T) * (sum_{t>=k} w_t (q_t - q_k)) / W(k..T)`.
pub fn last_iterate_identity(q: &[f64], w: &[f64]) -> f64 {
    let n = q.len();
    let total: f64 = w.iter().sum();
    let mut rhs = w.iter().zip(q).map(|(w, q)| w * q).sum::<f64>() / total;
    for k in 0..n - 1 {
        let after: f64 = w[k + 1..].iter().sum();
        let from: f64 = w[k..].iter().sum();
        let diff: f64 = (k..n).map(|t| w[t] * (q[t] - q[k])).sum();
        rhs += w[k] / after * diff / from;
    }
    rhs
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Uniform integer in `[lo, hi]`.
pub fn uniform_int(rng: &mut SplitMix64, lo: usize, hi: usize) -> usize {
    lo + (rng.next_u64() % (hi - lo + 1) as u64) as usize
}
