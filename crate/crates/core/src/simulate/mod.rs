//! Subgradient descent on `min_x ||A x - b||_inf`.
//!
//! The problem is non-smooth and convex, its subgradients do not vanish near
//! the optimum, and it shows the same loss drop during a wsd cooldown as the
//! bound does.

mod rng;

use serde::{Deserialize, Serialize};

pub use rng::SplitMix64;

use crate::error::{ensure_positive, Error, Result};
use crate::schedule::{make_constant, make_cosine, make_wsd, CooldownShape, Schedule};
use crate::table::Table;

/// `min ||A x - b||_inf` with `b = A x_oracle`, so the optimal value is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyProblem {
    /// Rows of `A`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub x_oracle: Vec<f64>,
    pub x_start: Vec<f64>,
    pub seed: u64,
}

impl ToyProblem {
    pub fn rows(&self) -> usize {
        self.a.len()
    }

    pub fn dim(&self) -> usize {
        self.x_oracle.len()
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, bi)| row.iter().zip(x).map(|(r, xi)| r * xi).sum::<f64>() - bi)
            .collect()
    }

    /// `||A x - b||_inf`.
    pub fn loss(&self, x: &[f64]) -> f64 {
        self.residual(x).iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Draw `A` (row-major, `m * d` values) and then `x_oracle` (`d` values)
/// uniformly from `[-1, 1)` with [`SplitMix64`]; `x_start = 0`.
pub fn generate_problem(m: usize, d: usize, seed: u64) -> Result<ToyProblem> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "problem dimensions must be positive, got {m}x{d}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let a: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect())
        .collect();
    let x_oracle: Vec<f64> = (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let b = a
        .iter()
        .map(|row| row.iter().zip(&x_oracle).map(|(r, x)| r * x).sum())
        .collect();
    Ok(ToyProblem {
        a,
        b,
        x_start: vec![0.0; d],
        x_oracle,
        seed,
    })
}

/// `sign(r_i) * A_i` for the smallest index `i` maximizing `|r_i|`, `r = A x - b`;
/// zero when the residual vanishes.
pub fn linf_subgradient(problem: &ToyProblem, x: &[f64]) -> Vec<f64> {
    let r = problem.residual(x);
    let mut best = 0;
    for i in 1..r.len() {
        if r[i].abs() > r[best].abs() {
            best = i;
        }
    }
    if r[best] == 0.0 {
        return vec![0.0; problem.dim()];
    }
    let sign = r[best].signum();
    problem.a[best].iter().map(|v| sign * v).collect()
}

/// One subgradient-descent trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// `f(x_t)` for `t = 1..=T`, recorded before the step.
    pub losses: Vec<f64>,
    /// `x_t` for `t = 1..=T`.
    pub iterates: Vec<Vec<f64>>,
    /// `||g_t||` of the subgradient used at step `t`.
    pub grad_norms: Vec<f64>,
    pub schedule_used: Schedule,
    pub gamma: f64,
    pub seed: u64,
}

impl RunRecord {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("non-empty run")
    }

    /// `loss[start] / loss[end]` (1-based steps).
    pub fn loss_ratio(&self, start: usize, end: usize) -> f64 {
        self.losses[start - 1] / self.losses[end - 1]
    }

    /// `(t, eta, loss)` table.
    pub fn to_table(&self) -> Table {
        let mut table = Table::new(["t", "eta", "loss"]);
        for (i, loss) in self.losses.iter().enumerate() {
            table.push(vec![(i + 1).into(), self.schedule_used.eta(i + 1).into(), (*loss).into()]);
        }
        table
    }

    /// `(t, x1, ..., xd)` table.
    pub fn iterates_table(&self) -> Table {
        let d = self.iterates.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|j| format!("x{j}")));
        let mut table = Table::new(header);
        for (i, x) in self.iterates.iter().enumerate() {
            let mut row = vec![(i + 1).into()];
            row.extend(x.iter().map(|&v| v.into()));
            table.push(row);
        }
        table
    }
}

/// `x_{t+1} = x_t - gamma * eta_t * g_t` for `t = 1..=T`.
pub fn run_sgd(problem: &ToyProblem, schedule: &Schedule, gamma: f64, x_start: &[f64]) -> Result<RunRecord> {
    ensure_positive("gamma", gamma)?;
    if x_start.len() != problem.dim() {
        return Err(Error::InvalidParameter(format!(
            "start point has dimension {}, problem has {}",
            x_start.len(),
            problem.dim()
        )));
    }
    let horizon = schedule.horizon();
    let mut x = x_start.to_vec();
    let mut losses = Vec::with_capacity(horizon);
    let mut iterates = Vec::with_capacity(horizon);
    let mut grad_norms = Vec::with_capacity(horizon);
    for (i, &eta) in schedule.values().iter().enumerate() {
        losses.push(problem.loss(&x));
        iterates.push(x.clone());
        let g = linf_subgradient(problem, &x);
        grad_norms.push(g.iter().map(|v| v * v).sum::<f64>().sqrt());
        let step = gamma * eta;
        for (xj, gj) in x.iter_mut().zip(&g) {
            *xj -= step * gj;
        }
        debug_assert_eq!(losses.len(), i + 1);
    }
    Ok(RunRecord {
        losses,
        iterates,
        grad_norms,
        schedule_used: schedule.clone(),
        gamma,
        seed: problem.seed,
    })
}

/// Seed, rows of `A`, dimension, and horizon of the reference toy experiment.
pub const TOY_SEED: u64 = 0;
pub const TOY_ROWS: usize = 20;
pub const TOY_DIM: usize = 2;
pub const TOY_HORIZON: usize = 400;

/// A named run of the reference comparison.
#[derive(Debug, Clone)]
pub struct ToyRun {
    pub name: &'static str,
    pub record: RunRecord,
    /// Cooldown start, for the wsd run.
    pub cooldown_start: Option<usize>,
}

/// wsd (20% cooldown, gamma = 0.02, start 0), constant (gamma = 0.02, start
/// (1e-3, 1e-3)) and cosine (gamma = 0.04, start 0), 400 steps on a 20x2 problem.
pub fn toy_comparison(seed: u64) -> Result<Vec<ToyRun>> {
    let problem = generate_problem(TOY_ROWS, TOY_DIM, seed)?;
    let zero = vec![0.0; TOY_DIM];
    let offset = vec![1e-3; TOY_DIM];
    let wsd = make_wsd(TOY_HORIZON, 0.2, CooldownShape::Linear)?;
    let start = crate::schedule::cooldown_start(TOY_HORIZON, 0.2)?;
    Ok(vec![
        ToyRun {
            name: "wsd",
            record: run_sgd(&problem, &wsd, 0.02, &zero)?,
            cooldown_start: Some(start),
        },
        ToyRun {
            name: "constant",
            record: run_sgd(&problem, &make_constant(TOY_HORIZON)?, 0.02, &offset)?,
            cooldown_start: None,
        },
        ToyRun {
            name: "cosine",
            record: run_sgd(&problem, &make_cosine(TOY_HORIZON, 0.0, 1.0)?, 0.04, &zero)?,
            cooldown_start: None,
        },
    ])
}

/// `(t, <name>_eta, <name>_loss, ...)` for runs of equal length.
pub fn comparison_table(runs: &[ToyRun]) -> Table {
    let mut header = vec!["t".to_string()];
    for run in runs {
        header.push(format!("{}_eta", run.name));
        header.push(format!("{}_loss", run.name));
    }
    let mut table = Table::new(header);
    let horizon = runs.first().map_or(0, |r| r.record.losses.len());
    for i in 0..horizon {
        let mut row = vec![(i + 1).into()];
        for run in runs {
            row.push(run.record.schedule_used.eta(i + 1).into());
            row.push(run.record.losses[i].into());
        }
        table.push(row);
    }
    table
}
