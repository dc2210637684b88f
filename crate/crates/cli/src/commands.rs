use std::path::Path;

use schedbound_core::bound::{
    ablation_curve, default_stride, drop_ratio, omega_curve, terms, BoundSpec, GradNormModel,
};
use schedbound_core::scaling::ScalingLaw;
use schedbound_core::schedule::{
    compose_with_cooldown, make_extended, make_inv_sqrt, make_wsd, CooldownShape, Schedule,
    ShortRun,
};
use schedbound_core::simulate::{generate_problem, run_sgd, toy_comparison};
use schedbound_core::table::Table;
use schedbound_core::tuning::{
    default_fraction_grid, default_gamma_grid, default_transfer_grid, evaluate,
    fit_inv_gamma_linear, fit_inv_sqrt, fit_polynomial, linear_grid, log_grid, lr_transfer_curve,
    minimizer, sweep_cooldown, sweep_gamma, transfer_horizon_cooldown, transfer_horizon_rho,
    FitResult, GammaChoice, TransferBase, TransferResult,
};
use serde_json::json;

use crate::args::*;
use crate::error::{invalid, CliError, CliResult};
use crate::output::Artifacts;

pub fn grad_model(p: &ProblemArgs) -> CliResult<GradNormModel> {
    Ok(match p.grad_alpha {
        Some(alpha) => GradNormModel::scaled_power_law(p.g, alpha)?,
        None => GradNormModel::constant(p.g)?,
    })
}

fn custom_grid(grid: &GridArgs, log: bool) -> CliResult<Option<Vec<f64>>> {
    match (grid.grid_min, grid.grid_max, grid.grid_points) {
        (Some(lo), Some(hi), Some(n)) => {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(invalid(format!("grid bounds [{lo}, {hi}] are not ordered")));
            }
            let g = if log { log_grid(lo, hi, n)? } else { linear_grid(lo, hi, n)? };
            Ok(Some(g))
        }
        _ => Ok(None),
    }
}

pub fn schedule(args: &ScheduleArgs) -> CliResult<Artifacts> {
    let s = args.schedule.build()?;
    Ok(Artifacts::default()
        .table("schedule", s.to_table())
        .with("spec", args.schedule.to_string())
        .with("horizon", s.horizon())
        .with("cooldown_start", args.schedule.cooldown_start())
        .with("eta", s.values()))
}

pub fn bound(args: &BoundArgs) -> CliResult<Artifacts> {
    let s = args.schedule.build()?;
    let grads = grad_model(&args.problem)?;
    let horizon = s.horizon();
    let tm = terms(&s, &grads, args.problem.d, horizon)?;
    let gamma = match args.gamma {
        GammaArg::Value(v) => v,
        GammaArg::Star => tm.gamma_star(),
    };
    let stride = args.stride.unwrap_or_else(|| default_stride(horizon));
    if stride == 0 {
        return Err(invalid("stride must be at least 1"));
    }
    let spec = BoundSpec::new(s, grads, args.problem.d, gamma)?;
    let curve = omega_curve(&spec, stride)?;
    let start = args.schedule.cooldown_start();
    let mut out = Artifacts::default()
        .table("bound", curve.to_table())
        .with("horizon", horizon)
        .with("gamma", gamma)
        .with("gamma_star", tm.gamma_star())
        .with("T1", tm.t1)
        .with("T2", tm.t2)
        .with("final_omega", curve.final_omega())
        .with("optimal_bound", tm.optimal_bound())
        .with("cooldown_start", start)
        .with("cooldown_drop_ratio", start.and_then(|t0| drop_ratio(&curve, t0, horizon)));
    if args.ablation {
        let ab = ablation_curve(&spec, stride)?;
        out.set("ablation_final_omega", ab.final_omega());
        out.set("ablation_drop_ratio", start.and_then(|t0| drop_ratio(&ab, t0, horizon)));
        out = out.table("ablation", ab.to_table());
    }
    Ok(out)
}

pub fn sweep_gamma_cmd(args: &SweepGammaArgs) -> CliResult<Artifacts> {
    let s = args.schedule.build()?;
    let grads = grad_model(&args.problem)?;
    let tm = terms(&s, &grads, args.problem.d, s.horizon())?;
    let grid = match custom_grid(&args.grid, true)? {
        Some(g) => g,
        None => default_gamma_grid(tm.gamma_star())?,
    };
    let r = sweep_gamma(&s, &grads, args.problem.d, &grid)?;
    Ok(Artifacts::default()
        .table("sweep_gamma", r.to_table("gamma", "omega"))
        .with("argmin_gamma", r.argmin_value)
        .with("argmin_omega", r.argmin_objective)
        .with("gamma_star", tm.gamma_star())
        .with("optimal_bound", tm.optimal_bound()))
}

pub fn sweep_cooldown_cmd(args: &SweepCooldownArgs) -> CliResult<Artifacts> {
    let grads = grad_model(&args.problem)?;
    let grid = custom_grid(&args.grid, true)?.unwrap_or_else(default_fraction_grid);
    let choice = match args.gamma {
        GammaArg::Value(v) => GammaChoice::Fixed(v),
        GammaArg::Star => GammaChoice::Optimal,
    };
    let r = sweep_cooldown(args.horizon, &grid, args.shape, &grads, args.problem.d, choice)?;
    Ok(Artifacts::default()
        .table("sweep_cooldown", r.to_table("c", "omega"))
        .with("argmin_c", r.argmin_value)
        .with("argmin_omega", r.argmin_objective))
}

fn transfer_summary(out: &mut Artifacts, key: &str, r: &TransferResult) {
    out.set(key, r.value);
    out.set("target_gamma", r.target_gamma);
    out.set("achieved_gamma", r.achieved_gamma);
    out.set("bracketed", r.bracketed);
    out.set("refined", r.refined);
}

fn cooldown_base(base: BaseArg) -> TransferBase {
    match base {
        BaseArg::Constant => TransferBase::Constant,
        BaseArg::Invsqrt => TransferBase::InvSqrt,
    }
}

pub fn long_schedule(base: TransferBase, horizon: usize, c: f64) -> CliResult<Schedule> {
    Ok(match base {
        TransferBase::Constant => make_wsd(horizon, c, CooldownShape::Linear)?,
        TransferBase::InvSqrt => compose_with_cooldown(&make_inv_sqrt(horizon)?, c, CooldownShape::Linear)?,
    })
}

pub fn transfer_horizon(args: &TransferHorizonArgs) -> CliResult<Artifacts> {
    let grads = grad_model(&args.problem)?;
    let grid = custom_grid(&args.grid, false)?.unwrap_or_else(default_transfer_grid);
    let d = args.problem.d;
    let (key, r, schedule) = match args.mode {
        TransferMode::Rho => {
            if args.base != BaseArg::Constant {
                return Err(invalid("--mode rho only supports --base constant"));
            }
            let r = transfer_horizon_rho(args.short_horizon, args.long_horizon, args.c, &grads, d, &grid)?;
            let short = ShortRun {
                horizon: args.short_horizon,
                fraction: args.c,
                shape: CooldownShape::Linear,
            };
            let s = make_extended(short, args.long_horizon, r.value, args.c)?;
            ("rho", r, s)
        }
        TransferMode::Cooldown => {
            let base = cooldown_base(args.base);
            let r = transfer_horizon_cooldown(args.short_horizon, args.long_horizon, args.c, &grads, d, &grid, base)?;
            let s = long_schedule(base, args.long_horizon, r.value)?;
            ("c_long", r, s)
        }
    };
    let mut out = Artifacts::default()
        .table("transfer_search", r.diagnostics.to_table(key, "abs_gamma_diff"))
        .table("long_schedule", schedule.to_table());
    transfer_summary(&mut out, key, &r);
    Ok(out)
}

pub fn transfer_lr(args: &TransferLrArgs) -> CliResult<Artifacts> {
    let grads = grad_model(&args.problem)?;
    let grid = custom_grid(&args.grid, true)?.unwrap_or_else(default_fraction_grid);
    let curve = lr_transfer_curve(args.horizon, &grid, args.shape, &grads, args.problem.d)?;
    let mut table = Table::new(["c", "log_ratio"]);
    for p in &curve {
        table.push(vec![p.fraction.into(), p.log_ratio.into()]);
    }
    let at = lr_transfer_curve(args.horizon, &[0.2], args.shape, &grads, args.problem.d)?[0].log_ratio;
    let pts: Vec<(f64, f64)> = curve.iter().map(|p| (p.fraction, p.log_ratio)).collect();
    let fit = fit_polynomial(&pts, 6).ok();
    Ok(Artifacts::default()
        .table("lr_transfer", table)
        .with("log_ratio_at_c_0_2", at)
        .with("poly6_coefficients", fit.map(|f| f.coefficients)))
}

pub fn toy_run(args: &ToyRunArgs) -> CliResult<Artifacts> {
    let problem = generate_problem(args.rows, args.dim, args.seed)?;
    let start = args.start.clone().unwrap_or_else(|| problem.x_start.clone());
    let s = args.schedule.build()?;
    let run = run_sgd(&problem, &s, args.gamma, &start)?;
    let cooldown = args.schedule.cooldown_start();
    let horizon = s.horizon();
    let mut out = Artifacts::default()
        .table("toy_run", run.to_table())
        .with("seed", args.seed)
        .with("final_loss", run.final_loss())
        .with("min_loss", run.losses.iter().cloned().fold(f64::INFINITY, f64::min))
        .with("cooldown_start", cooldown)
        .with("cooldown_loss_ratio", cooldown.map(|t0| run.loss_ratio(t0, horizon)));
    if args.iterates {
        out = out.table("toy_iterates", run.iterates_table());
    }
    Ok(out)
}

pub fn toy_compare(seed: u64) -> CliResult<Artifacts> {
    let runs = toy_comparison(seed)?;
    let mut out = Artifacts::default();
    let mut summary = serde_json::Map::new();
    for run in &runs {
        let r = &run.record;
        let mut entry = json!({
            "gamma": r.gamma,
            "final_loss": r.final_loss(),
            "start": r.iterates[0],
        });
        if let Some(t0) = run.cooldown_start {
            let t = r.losses.len();
            entry["cooldown_start"] = json!(t0);
            entry["cooldown_loss_ratio"] = json!(r.loss_ratio(t0, t));
            entry["pre_cooldown_loss_ratio"] = json!(r.loss_ratio((2 * t0).saturating_sub(t).max(1), t0));
        }
        summary.insert(run.name.to_string(), entry);
        out = out.table(format!("toy_{}", run.name), r.to_table());
    }
    out.set("seed", seed);
    out.set("runs", summary);
    Ok(out)
}

pub fn scaling_law(args: &ScalingLawArgs) -> CliResult<Artifacts> {
    let defaults = ScalingLaw::default();
    let mut law = ScalingLaw::new(
        args.e.unwrap_or(defaults.e),
        args.a.unwrap_or(defaults.a),
        args.b.unwrap_or(defaults.b),
        args.alpha.unwrap_or(defaults.alpha),
        args.beta.unwrap_or(defaults.beta),
    )?;
    if args.vocab_adjust {
        law = law.with_vocab_adjustment();
    }
    let before = law.loss(args.n, args.d)?;
    let (solution, after) = match args.solve {
        SolveFor::Tokens => {
            let d2 = law.tokens_for_delta(args.n, args.d, args.delta)?;
            (d2, law.loss(args.n, d2)?)
        }
        SolveFor::Params => {
            let n2 = law.params_for_delta(args.n, args.d, args.delta)?;
            (n2, law.loss(n2, args.d)?)
        }
    };
    let key = match args.solve {
        SolveFor::Tokens => "D2",
        SolveFor::Params => "N2",
    };
    let mut table = Table::new(["N", "D", "delta", key]);
    table.push(vec![args.n.into(), args.d.into(), args.delta.into(), solution.into()]);
    Ok(Artifacts::default()
        .table("scaling_law", table)
        .with(key, solution)
        .with("law", law)
        .with("loss_before", before)
        .with("loss_after", after))
}

pub fn read_points(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let fail = |reason: String| CliError::Input {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| fail(e.to_string()))?;
    let headers = reader.headers().map_err(|e| fail(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "y" {
        return Err(fail(format!("expected header `x,y`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| fail(e.to_string()))?;
        let parse = |j: usize| {
            record[j]
                .trim()
                .parse::<f64>()
                .map_err(|_| fail(format!("row {}: `{}` is not a number", i + 2, &record[j])))
        };
        points.push((parse(0)?, parse(1)?));
    }
    Ok(points)
}

fn fitted_table(points: &[(f64, f64)], fit: &FitResult) -> Table {
    let mut table = Table::new(["x", "y", "fitted"]);
    for &(x, y) in points {
        table.push(vec![x.into(), y.into(), evaluate(fit, x).into()]);
    }
    table
}

pub fn fit(args: &FitArgs) -> CliResult<Artifacts> {
    let points = read_points(&args.input)?;
    let out = match args.model {
        FitModelArg::Hgamma => {
            let fit = fit_inv_gamma_linear(&points)?;
            let mut out = Artifacts::default().table("fit", fitted_table(&points, &fit));
            match minimizer(&fit) {
                Ok(g) => out.set("minimizer", g),
                Err(e) => {
                    out.set("minimizer", serde_json::Value::Null);
                    out.set("minimizer_error", e.to_string());
                }
            }
            out.with("fit", &fit)
        }
        FitModelArg::Invsqrt => {
            let fit = fit_inv_sqrt(&points)?;
            Artifacts::default()
                .table("fit", fitted_table(&points, &fit.fit))
                .with("fit", &fit.fit)
                .with("power_law", fit.power)
        }
        FitModelArg::Poly6 => {
            let fit = fit_polynomial(&points, 6)?;
            Artifacts::default().table("fit", fitted_table(&points, &fit)).with("fit", &fit)
        }
    };
    Ok(out.with("points", points.len()))
}
