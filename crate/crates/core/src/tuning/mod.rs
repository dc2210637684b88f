//! Sweeps and transfer procedures built on the bound.

mod fit;
mod transfer;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use fit::{
    evaluate, fit_inv_gamma_linear, fit_inv_sqrt, fit_polynomial, minimizer, FitModel, FitResult,
    InvSqrtFit, PowerFit,
};
pub use transfer::{
    default_transfer_grid, transfer_horizon_cooldown, transfer_horizon_rho, TransferBase,
    TransferResult,
};

use crate::bound::{gamma_star, terms, GradNormModel};
use crate::error::{Error, Result};
use crate::schedule::{make_wsd, CooldownShape, Schedule};
use crate::table::Table;

/// Objective values over a parameter grid, with its minimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub grid: Vec<f64>,
    pub objective: Vec<f64>,
    pub argmin_value: f64,
    pub argmin_objective: f64,
}

impl SweepResult {
    /// Ties break toward the smaller parameter; NaN objectives never win.
    pub fn from_grid(grid: Vec<f64>, objective: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        assert_eq!(grid.len(), objective.len());
        let mut best = 0;
        for i in 1..grid.len() {
            let (o, b) = (objective[i], objective[best]);
            let better = match (o.is_nan(), b.is_nan()) {
                (true, _) => false,
                (false, true) => true,
                _ => o < b || (o == b && grid[i] < grid[best]),
            };
            if better {
                best = i;
            }
        }
        Ok(Self {
            argmin_value: grid[best],
            argmin_objective: objective[best],
            grid,
            objective,
        })
    }

    pub fn argmin_index(&self) -> usize {
        self.grid
            .iter()
            .position(|&v| v == self.argmin_value)
            .expect("argmin is a grid value")
    }

    pub fn to_table(&self, parameter: &str, objective: &str) -> Table {
        let mut table = Table::new([parameter, objective]);
        for (x, y) in self.grid.iter().zip(&self.objective) {
            table.push(vec![(*x).into(), (*y).into()]);
        }
        table
    }
}

/// `n` points log-spaced on `[lo, hi]`, endpoints exact.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("bad log grid [{lo}, {hi}]")));
    }
    match n {
        0 => Err(Error::EmptyGrid),
        1 => Ok(vec![lo]),
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let mut grid: Vec<f64> = (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect();
            grid[0] = lo;
            grid[n - 1] = hi;
            Ok(grid)
        }
    }
}

/// `n` points evenly spaced on `[lo, hi]`, endpoints exact.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    match n {
        0 => Err(Error::EmptyGrid),
        1 => Ok(vec![lo]),
        _ => {
            let mut grid: Vec<f64> = (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect();
            grid[n - 1] = hi;
            Ok(grid)
        }
    }
}

/// 61 log-spaced points spanning three decades centred on `gamma_star`.
pub fn default_gamma_grid(gamma_star: f64) -> Result<Vec<f64>> {
    let half = 10f64.powf(1.5);
    log_grid(gamma_star / half, gamma_star * half, 61)
}

/// 50 log-spaced cooldown fractions on `[0.02, 1]`.
pub fn default_fraction_grid() -> Vec<f64> {
    log_grid(0.02, 1.0, 50).expect("static grid")
}

/// Final bound `Omega_T` for every base learning-rate in `gamma_grid`.
pub fn sweep_gamma(
    schedule: &Schedule,
    grad_norms: &GradNormModel,
    d: f64,
    gamma_grid: &[f64],
) -> Result<SweepResult> {
    if gamma_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(&bad) = gamma_grid.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::NonPositive { name: "gamma", value: bad });
    }
    let tm = terms(schedule, grad_norms, d, schedule.horizon())?;
    let objective = gamma_grid.iter().map(|&g| tm.omega(g)).collect();
    SweepResult::from_grid(gamma_grid.to_vec(), objective)
}

/// How the base learning-rate is chosen for each cooldown fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaChoice {
    Fixed(f64),
    /// Optimal `gamma` per fraction, i.e. the objective is `2 sqrt(T1 T2)`.
    Optimal,
}

/// Final bound of `wsd(T, c)` for every fraction in `fraction_grid`.
pub fn sweep_cooldown(
    horizon: usize,
    fraction_grid: &[f64],
    shape: CooldownShape,
    grad_norms: &GradNormModel,
    d: f64,
    gamma: GammaChoice,
) -> Result<SweepResult> {
    if fraction_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let GammaChoice::Fixed(g) = gamma {
        crate::error::ensure_positive("gamma", g)?;
    }
    let objective = fraction_grid
        .par_iter()
        .map(|&c| {
            let s = make_wsd(horizon, c, shape)?;
            let tm = terms(&s, grad_norms, d, horizon)?;
            Ok(match gamma {
                GammaChoice::Fixed(g) => tm.omega(g),
                GammaChoice::Optimal => tm.optimal_bound(),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    SweepResult::from_grid(fraction_grid.to_vec(), objective)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrTransferPoint {
    pub fraction: f64,
    /// `ln(gamma*(1) / gamma*(c))`.
    pub log_ratio: f64,
}

/// `ln(gamma*(1) / gamma*(c))` for every `c`, both at horizon `T` with the same
/// cooldown shape.
pub fn lr_transfer_curve(
    horizon: usize,
    fraction_grid: &[f64],
    shape: CooldownShape,
    grad_norms: &GradNormModel,
    d: f64,
) -> Result<Vec<LrTransferPoint>> {
    if fraction_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let full = gamma_star(&make_wsd(horizon, 1.0, shape)?, grad_norms, d, horizon)?;
    fraction_grid
        .par_iter()
        .map(|&c| {
            let g = gamma_star(&make_wsd(horizon, c, shape)?, grad_norms, d, horizon)?;
            Ok(LrTransferPoint {
                fraction: c,
                log_ratio: (full / g).ln(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::make_constant;

    fn unit() -> GradNormModel {
        GradNormModel::constant(1.0).unwrap()
    }

    #[test]
    fn sweep_ties_prefer_smaller_parameter() {
        let r = SweepResult::from_grid(vec![3.0, 1.0, 2.0], vec![0.5, 0.5, 0.7]).unwrap();
        assert_eq!(r.argmin_value, 1.0);
        let r = SweepResult::from_grid(vec![1.0, 2.0], vec![f64::NAN, 3.0]).unwrap();
        assert_eq!(r.argmin_value, 2.0);
        assert!(matches!(SweepResult::from_grid(vec![], vec![]), Err(Error::EmptyGrid)));
    }

    #[test]
    fn grids() {
        let g = log_grid(0.02, 1.0, 50).unwrap();
        assert_eq!(g.len(), 50);
        assert_eq!(g[0], 0.02);
        assert_eq!(g[49], 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(default_gamma_grid(0.1).unwrap().len(), 61);
        assert_eq!(linear_grid(0.0, 1.0, 11).unwrap()[10], 1.0);
    }

    #[test]
    fn gamma_sweep_finds_optimum() {
        let s = make_constant(100).unwrap();
        let tm = terms(&s, &unit(), 1.0, 100).unwrap();
        let grid = default_gamma_grid(tm.gamma_star() * 1.03).unwrap();
        let r = sweep_gamma(&s, &unit(), 1.0, &grid).unwrap();
        assert!((r.argmin_objective - tm.optimal_bound()).abs() <= 0.01 * tm.optimal_bound());

        let r = sweep_gamma(&s, &unit(), 1.0, &[0.3]).unwrap();
        assert_eq!(r.argmin_value, 0.3);
        assert!(sweep_gamma(&s, &unit(), 1.0, &[]).is_err());
        assert!(sweep_gamma(&s, &unit(), 1.0, &[0.1, -1.0]).is_err());
    }

    #[test]
    fn cooldown_sweep_modes() {
        let grid = default_fraction_grid();
        let r = sweep_cooldown(400, &grid, CooldownShape::Linear, &unit(), 1.0, GammaChoice::Optimal).unwrap();
        assert_eq!(r.argmin_value, 1.0);

        let g1 = gamma_star(&make_wsd(400, 1.0, CooldownShape::Linear).unwrap(), &unit(), 1.0, 400).unwrap();
        let r = sweep_cooldown(400, &grid, CooldownShape::Linear, &unit(), 1.0, GammaChoice::Fixed(0.5 * g1)).unwrap();
        assert!(r.argmin_value < 1.0 && r.argmin_value > 0.02);
        assert!(r.argmin_objective < r.objective[0] && r.argmin_objective < *r.objective.last().unwrap());

        let r = sweep_cooldown(400, &[1.0], CooldownShape::Linear, &unit(), 1.0, GammaChoice::Optimal).unwrap();
        assert_eq!(r.argmin_value, 1.0);
    }

    #[test]
    fn lr_transfer_identity_and_scale_invariance() {
        let grid = [0.2, 0.5, 1.0];
        let base = lr_transfer_curve(1000, &grid, CooldownShape::Linear, &unit(), 1.0).unwrap();
        assert_eq!(base[2].log_ratio, 0.0);
        assert!((base[0].log_ratio - 0.7).abs() < 0.05);
        let scaled = lr_transfer_curve(1000, &grid, CooldownShape::Linear, &unit().scaled(2.0), 2.0).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            assert!((a.log_ratio - b.log_ratio).abs() < 1e-12);
        }
    }
}
