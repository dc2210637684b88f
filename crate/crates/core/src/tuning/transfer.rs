//! Schedule construction for continued training.
//!
//! A short wsd run of `T1` steps has been tuned. To continue to `T2 > T1`
//! without retuning `gamma`, either step the constant phase down by `rho`
//! after the short run's cooldown start, or enlarge the cooldown fraction of
//! the long run. Both searches pick the parameter whose optimal base
//! learning-rate matches the short run's: grid first, then bisection on the
//! signed difference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{linear_grid, SweepResult};
use crate::bound::{gamma_star, GradNormModel};
use crate::error::{Error, Result};
use crate::schedule::{compose_with_cooldown, make_extended, make_inv_sqrt, make_wsd, CooldownShape, Schedule, ShortRun};

/// Relative bracket width at which bisection stops.
const REFINE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    /// The chosen `rho` or long-run cooldown fraction.
    pub value: f64,
    /// Optimal base learning-rate of the short run.
    pub target_gamma: f64,
    /// Optimal base learning-rate of the constructed long run at `value`.
    pub achieved_gamma: f64,
    /// The grid contained a sign change of `gamma*(value) - target`.
    pub bracketed: bool,
    /// Bisection ran to tolerance; false when it fell back to the grid argmin.
    pub refined: bool,
    /// `|gamma*(x) - target|` over the grid.
    pub diagnostics: SweepResult,
}

/// 100 evenly spaced points on `[0.01, 1]`.
pub fn default_transfer_grid() -> Vec<f64> {
    linear_grid(0.01, 1.0, 100).expect("static grid")
}

/// Base schedule whose cooldown fraction is adapted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransferBase {
    /// Constant phase, i.e. wsd.
    Constant,
    /// `1/sqrt(t)` followed by a linear cooldown.
    InvSqrt,
}

impl TransferBase {
    fn build(self, horizon: usize, fraction: f64) -> Result<Schedule> {
        match self {
            TransferBase::Constant => make_wsd(horizon, fraction, CooldownShape::Linear),
            TransferBase::InvSqrt => {
                compose_with_cooldown(&make_inv_sqrt(horizon)?, fraction, CooldownShape::Linear)
            }
        }
    }
}

fn identity(value: f64, target: f64) -> Result<TransferResult> {
    Ok(TransferResult {
        value,
        target_gamma: target,
        achieved_gamma: target,
        bracketed: true,
        refined: true,
        diagnostics: SweepResult::from_grid(vec![value], vec![0.0])?,
    })
}

fn match_target<F>(grid: &[f64], target: f64, gamma_of: F) -> Result<TransferResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let diffs = grid
        .par_iter()
        .map(|&x| Ok(gamma_of(x)? - target))
        .collect::<Result<Vec<f64>>>()?;
    let diagnostics = SweepResult::from_grid(grid.clone(), diffs.iter().map(|d| d.abs()).collect())?;
    let best = diagnostics.argmin_index();

    let fallback = |bracketed: bool| -> Result<TransferResult> {
        let value = grid[best];
        Ok(TransferResult {
            value,
            target_gamma: target,
            achieved_gamma: target + diffs[best],
            bracketed,
            refined: false,
            diagnostics: diagnostics.clone(),
        })
    };

    if diffs[best] == 0.0 {
        let mut r = fallback(true)?;
        r.refined = true;
        return Ok(r);
    }
    let straddles = |i: usize| diffs[i].signum() != diffs[i + 1].signum();
    let bracket = [best.checked_sub(1), Some(best)]
        .into_iter()
        .flatten()
        .find(|&i| i + 1 < grid.len() && straddles(i));
    let Some(i) = bracket else {
        return fallback(false);
    };

    let (mut lo, mut hi) = (grid[i], grid[i + 1]);
    let (mut f_lo, mut f_hi) = (diffs[i], diffs[i + 1]);
    while hi - lo > REFINE_TOLERANCE * hi.abs().max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (lo + hi);
        let f_mid = gamma_of(mid)? - target;
        // gamma* must be monotone on the bracket
        if f_mid < f_lo.min(f_hi) || f_mid > f_lo.max(f_hi) {
            return fallback(true);
        }
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    let value = 0.5 * (lo + hi);
    Ok(TransferResult {
        value,
        target_gamma: target,
        achieved_gamma: gamma_of(value)?,
        bracketed: true,
        refined: true,
        diagnostics,
    })
}

/// Step-down factor `rho` for the constant phase between the short and long
/// cooldown starts, keeping the cooldown fraction `fraction` for both runs.
pub fn transfer_horizon_rho(
    short_horizon: usize,
    long_horizon: usize,
    fraction: f64,
    grad_norms: &GradNormModel,
    d: f64,
    rho_grid: &[f64],
) -> Result<TransferResult> {
    let short = ShortRun {
        horizon: short_horizon,
        fraction,
        shape: CooldownShape::Linear,
    };
    let target = gamma_star(
        &make_wsd(short_horizon, fraction, CooldownShape::Linear)?,
        grad_norms,
        d,
        short_horizon,
    )?;
    if long_horizon == short_horizon {
        return identity(1.0, target);
    }
    if let Some(&bad) = rho_grid.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
        return Err(Error::InvalidParameter(format!("rho grid value {bad} outside (0, 1]")));
    }
    match_target(rho_grid, target, |rho| {
        let s = make_extended(short, long_horizon, rho, fraction)?;
        gamma_star(&s, grad_norms, d, long_horizon)
    })
}

/// Cooldown fraction for the long run whose optimal base learning-rate equals
/// the short run's.
pub fn transfer_horizon_cooldown(
    short_horizon: usize,
    long_horizon: usize,
    short_fraction: f64,
    grad_norms: &GradNormModel,
    d: f64,
    fraction_grid: &[f64],
    base: TransferBase,
) -> Result<TransferResult> {
    if long_horizon < short_horizon {
        return Err(Error::InvalidParameter(format!(
            "long horizon {long_horizon} shorter than short horizon {short_horizon}"
        )));
    }
    let target = gamma_star(
        &base.build(short_horizon, short_fraction)?,
        grad_norms,
        d,
        short_horizon,
    )?;
    if long_horizon == short_horizon {
        return identity(short_fraction, target);
    }
    match_target(fraction_grid, target, |c| {
        gamma_star(&base.build(long_horizon, c)?, grad_norms, d, long_horizon)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> GradNormModel {
        GradNormModel::constant(1.0).unwrap()
    }

    #[test]
    fn rho_identity_for_equal_horizons() {
        let r = transfer_horizon_rho(400, 400, 0.2, &unit(), 1.0, &default_transfer_grid()).unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn rho_small_horizon() {
        let r = transfer_horizon_rho(400, 800, 0.2, &unit(), 1.0, &default_transfer_grid()).unwrap();
        assert!(r.bracketed && r.refined);
        assert!((r.achieved_gamma - r.target_gamma).abs() < 1e-3 * r.target_gamma);
        assert!(r.value > 0.4 && r.value < 0.65, "{}", r.value);
    }

    #[test]
    fn rho_grid_validation() {
        assert!(transfer_horizon_rho(400, 800, 0.2, &unit(), 1.0, &[0.5, 1.5]).is_err());
        assert!(matches!(transfer_horizon_rho(400, 800, 0.2, &unit(), 1.0, &[]), Err(Error::EmptyGrid)));
    }

    #[test]
    fn cooldown_identity_for_equal_horizons() {
        let r = transfer_horizon_cooldown(400, 400, 0.2, &unit(), 1.0, &default_transfer_grid(), TransferBase::Constant).unwrap();
        assert_eq!(r.value, 0.2);
    }

    #[test]
    fn cooldown_unreachable_is_flagged() {
        // a grid of tiny fractions cannot raise gamma* enough
        let r = transfer_horizon_cooldown(400, 1600, 0.2, &unit(), 1.0, &[0.01, 0.02, 0.05], TransferBase::Constant).unwrap();
        assert!(!r.bracketed);
        assert_eq!(r.value, 0.05);
    }

    #[test]
    fn single_point_grid_falls_back() {
        let r = transfer_horizon_rho(400, 800, 0.2, &unit(), 1.0, &[0.5]).unwrap();
        assert!(!r.refined);
        assert_eq!(r.value, 0.5);
    }
}
