//! Named experiments with pinned settings. Each summary carries the settings
//! under `pinned`.

use schedbound_core::bound::{
    ablation_curve, bound_linear_decay_closed_form, bound_wsd_closed_form, drop_ratio, harmonic,
    linear_decay_leading_factor, omega_curve, optimal_bound, terms, wsd_large_horizon_approx,
    BoundCurve, BoundSpec, GradNormModel,
};
use schedbound_core::scaling::ScalingLaw;
use schedbound_core::schedule::{
    compose_with_cooldown, cooldown_start, make_constant, make_cosine, make_extended,
    make_inv_sqrt, make_linear_decay, make_one_minus_sqrt, make_wsd, make_wsd_with_start,
    CooldownShape, Schedule, ShortRun,
};
use schedbound_core::table::{Cell, Table};
use schedbound_core::tuning::{
    default_fraction_grid, default_transfer_grid, fit_inv_sqrt, fit_polynomial, lr_transfer_curve,
    sweep_cooldown, transfer_horizon_cooldown, transfer_horizon_rho, GammaChoice, TransferBase,
};
use serde_json::{json, Map, Value};

use crate::args::ReproId;
use crate::commands::{long_schedule, toy_compare};
use crate::error::CliResult;
use crate::output::Artifacts;

const LINEAR: CooldownShape = CooldownShape::Linear;

fn unit() -> GradNormModel {
    GradNormModel::constant(1.0).expect("positive")
}

pub fn run(id: ReproId) -> CliResult<Artifacts> {
    match id {
        ReproId::Fig4 => fig4(),
        ReproId::RhoTransfer => rho_transfer(),
        ReproId::CooldownTransfer => cooldown_transfer(),
        ReproId::LrTransfer => lr_transfer(),
        ReproId::CooldownLength => cooldown_length(),
        ReproId::GradNorm => grad_norm(),
        ReproId::MultiHorizon => multi_horizon(),
        ReproId::Toy => Ok(toy_compare(schedbound_core::simulate::TOY_SEED)?
            .with("pinned", json!({"rows": 20, "dim": 2, "T": 400}))),
        ReproId::ScheduleComparison => schedule_comparison(),
        ReproId::CosineCycle => cosine_cycle(),
        ReproId::Ablation => ablation(),
        ReproId::ScalingLaw => scaling_law(),
        ReproId::WsdNumerics => wsd_numerics(),
    }
}

/// Curves sharing the same horizons, side by side.
fn curves_table(names: &[String], curves: &[BoundCurve]) -> Table {
    let mut header = vec!["t".to_string()];
    header.extend(names.iter().cloned());
    let mut table = Table::new(header);
    for (i, &t) in curves[0].t_values.iter().enumerate() {
        let mut row: Vec<Cell> = vec![t.into()];
        row.extend(curves.iter().map(|c| Cell::from(c.omega[i])));
        table.push(row);
    }
    table
}

fn fig4() -> CliResult<Artifacts> {
    let horizons: Vec<usize> = (0..7).map(|k| 200 << k).collect();
    let mut table = Table::new(["T", "gamma_star_wsd", "gamma_star_cosine"]);
    let (mut wsd, mut cos) = (Vec::new(), Vec::new());
    for &t in &horizons {
        let gw = terms(&make_wsd(t, 0.2, LINEAR)?, &unit(), 1.0, t)?.gamma_star();
        let gc = terms(&make_cosine(t, 0.0, 1.0)?, &unit(), 1.0, t)?.gamma_star();
        table.push(vec![t.into(), gw.into(), gc.into()]);
        wsd.push((t as f64, gw));
        cos.push((t as f64, gc));
    }
    let (fw, fc) = (fit_inv_sqrt(&wsd)?, fit_inv_sqrt(&cos)?);
    Ok(Artifacts::default()
        .table("fig4_gamma_star", table)
        .with("a_wsd", fw.fit.coefficients[0])
        .with("a_cosine", fc.fit.coefficients[0])
        .with("ratio_cosine_wsd", fc.fit.coefficients[0] / fw.fit.coefficients[0])
        .with("exponent_wsd", fw.power.exponent)
        .with("exponent_cosine", fc.power.exponent)
        .with("pinned", json!({"T": horizons, "c": 0.2, "D": 1.0, "G": 1.0})))
}

fn rho_transfer() -> CliResult<Artifacts> {
    let grid = default_transfer_grid();
    let mut out = Artifacts::default();
    for factor in [2usize, 4] {
        let r = transfer_horizon_rho(4000, factor * 4000, 0.2, &unit(), 1.0, &grid)?;
        let key = format!("rho_{factor}x");
        out.set(&key, r.value);
        out.set(&format!("{key}_achieved_gamma"), r.achieved_gamma);
        out.set("target_gamma", r.target_gamma);
        let short = ShortRun {
            horizon: 4000,
            fraction: 0.2,
            shape: LINEAR,
        };
        let s = make_extended(short, factor * 4000, r.value, 0.2)?;
        out = out
            .table(format!("{key}_search"), r.diagnostics.to_table("rho", "abs_gamma_diff"))
            .table(format!("{key}_schedule"), s.to_table());
    }
    Ok(out.with("pinned", json!({"T1": 4000, "c": 0.2, "D": 1.0, "G": 1.0})))
}

fn cooldown_transfer() -> CliResult<Artifacts> {
    let grid = default_transfer_grid();
    let mut out = Artifacts::default();
    for (name, base) in [("constant", TransferBase::Constant), ("invsqrt", TransferBase::InvSqrt)] {
        let r = transfer_horizon_cooldown(4000, 8000, 0.2, &unit(), 1.0, &grid, base)?;
        out.set(&format!("c_long_{name}"), r.value);
        out.set(&format!("bracketed_{name}"), r.bracketed);
        out = out
            .table(format!("c_long_{name}_search"), r.diagnostics.to_table("c_long", "abs_gamma_diff"))
            .table(format!("c_long_{name}_schedule"), long_schedule(base, 8000, r.value)?.to_table());
    }
    Ok(out.with("pinned", json!({"T1": 4000, "T2": 8000, "c_short": 0.2, "D": 1.0, "G": 1.0})))
}

fn lr_transfer() -> CliResult<Artifacts> {
    let grid = default_fraction_grid();
    let mut header = vec!["c".to_string()];
    let mut columns = Vec::new();
    let mut out = Artifacts::default();
    for shape in [LINEAR, CooldownShape::OneMinusSqrt] {
        for t in [1000usize, 10_000] {
            let curve = lr_transfer_curve(t, &grid, shape, &unit(), 1.0)?;
            let name = format!("{}_T{t}", shape.name());
            let at = lr_transfer_curve(t, &[0.2], shape, &unit(), 1.0)?[0].log_ratio;
            out.set(&format!("log_ratio_c0.2_{name}"), at);
            let pts: Vec<(f64, f64)> = curve.iter().map(|p| (p.fraction, p.log_ratio)).collect();
            out.set(&format!("poly6_{name}"), fit_polynomial(&pts, 6)?.coefficients);
            header.push(name);
            columns.push(curve);
        }
    }
    let mut table = Table::new(header);
    for (i, &c) in grid.iter().enumerate() {
        let mut row: Vec<Cell> = vec![c.into()];
        row.extend(columns.iter().map(|col| Cell::from(col[i].log_ratio)));
        table.push(row);
    }
    Ok(out
        .table("lr_transfer", table)
        .with("pinned", json!({"T": [1000, 10000], "shapes": ["linear", "1-sqrt"], "D": 1.0, "G": 1.0})))
}

fn cooldown_length() -> CliResult<Artifacts> {
    let grid = default_fraction_grid();
    let mut header = vec!["c".to_string()];
    let mut columns = Vec::new();
    let mut out = Artifacts::default();
    for t in [400usize, 4000] {
        let g1 = terms(&make_wsd(t, 1.0, LINEAR)?, &unit(), 1.0, t)?.gamma_star();
        let opt = sweep_cooldown(t, &grid, LINEAR, &unit(), 1.0, GammaChoice::Optimal)?;
        let fixed = sweep_cooldown(t, &grid, LINEAR, &unit(), 1.0, GammaChoice::Fixed(0.5 * g1))?;
        out.set(&format!("argmin_c_tuned_T{t}"), opt.argmin_value);
        out.set(&format!("argmin_c_fixed_T{t}"), fixed.argmin_value);
        header.push(format!("omega_tuned_T{t}"));
        header.push(format!("omega_fixed_T{t}"));
        columns.push(opt.objective);
        columns.push(fixed.objective);
    }
    let mut table = Table::new(header);
    for (i, &c) in grid.iter().enumerate() {
        let mut row: Vec<Cell> = vec![c.into()];
        row.extend(columns.iter().map(|col| Cell::from(col[i])));
        table.push(row);
    }
    Ok(out
        .table("cooldown_length", table)
        .with("pinned", json!({"T": [400, 4000], "fixed_gamma": "0.5 * gamma*(c=1)", "D": 1.0, "G": 1.0})))
}

fn grad_norm() -> CliResult<Artifacts> {
    let t0 = cooldown_start(400, 0.2)?;
    let alphas = [0.0, -0.5, -1.0];
    let mut curves = Vec::new();
    let mut ratios = Map::new();
    for alpha in alphas {
        let spec = BoundSpec::with_optimal_gamma(make_wsd(400, 0.2, LINEAR)?, GradNormModel::power_law(alpha)?, 1.0)?;
        let curve = omega_curve(&spec, 1)?;
        ratios.insert(format!("alpha={alpha}"), json!(drop_ratio(&curve, t0, 400)));
        curves.push(curve);
    }
    let names: Vec<String> = alphas.iter().map(|a| format!("omega_alpha={a}")).collect();
    Ok(Artifacts::default()
        .table("grad_norm", curves_table(&names, &curves))
        .with("cooldown_drop_ratio", ratios)
        .with("pinned", json!({"T": 400, "c": 0.2, "alpha": alphas, "gamma": "star"})))
}

fn multi_horizon() -> CliResult<Artifacts> {
    let short = ShortRun {
        horizon: 4000,
        fraction: 0.2,
        shape: LINEAR,
    };
    let tuned = terms(&make_wsd(4000, 0.2, LINEAR)?, &unit(), 1.0, 4000)?.gamma_star();
    let grid = default_transfer_grid();
    let mut table = Table::new(["T2", "retuned", "same_gamma", "rho_extended", "cooldown_extended"]);
    let mut rows = Map::new();
    for t2 in [8000usize, 16_000] {
        let wsd = make_wsd(t2, 0.2, LINEAR)?;
        let tm = terms(&wsd, &unit(), 1.0, t2)?;
        let rho = transfer_horizon_rho(4000, t2, 0.2, &unit(), 1.0, &grid)?.value;
        let cool = transfer_horizon_cooldown(4000, t2, 0.2, &unit(), 1.0, &grid, TransferBase::Constant)?;
        let c_long = cool.value;
        let omega = |s: &Schedule| -> CliResult<f64> { Ok(terms(s, &unit(), 1.0, t2)?.omega(tuned)) };
        let values = [
            tm.optimal_bound(),
            tm.omega(tuned),
            omega(&make_extended(short, t2, rho, 0.2)?)?,
            omega(&make_wsd(t2, c_long, LINEAR)?)?,
        ];
        let mut row: Vec<Cell> = vec![t2.into()];
        row.extend(values.iter().map(|&v| Cell::from(v)));
        table.push(row);
        rows.insert(
            format!("T2={t2}"),
            json!({"retuned": values[0], "same_gamma": values[1], "rho_extended": values[2],
                   "cooldown_extended": values[3], "rho": rho, "c_long": c_long,
                   "c_long_bracketed": cool.bracketed}),
        );
    }
    Ok(Artifacts::default()
        .table("multi_horizon", table)
        .with("final_bounds", rows)
        .with("gamma_tuned_T1", tuned)
        .with("pinned", json!({"T1": 4000, "T2": [8000, 16000], "c": 0.2, "D": 1.0, "G": 1.0})))
}

fn schedule_comparison() -> CliResult<Artifacts> {
    let t = 400;
    let set: Vec<(&str, Schedule)> = vec![
        ("constant", make_constant(t)?),
        ("wsd_linear", make_wsd(t, 0.2, LINEAR)?),
        ("wsd_1-sqrt", make_wsd(t, 0.2, CooldownShape::OneMinusSqrt)?),
        ("cosine", make_cosine(t, 0.0, 1.0)?),
        ("linear_decay", make_linear_decay(t)?),
        ("inv_sqrt", make_inv_sqrt(t)?),
        ("inv_sqrt_cooldown", compose_with_cooldown(&make_inv_sqrt(t)?, 0.2, LINEAR)?),
        ("1-sqrt", make_one_minus_sqrt(t)?),
    ];
    let mut curves = Vec::new();
    let mut finals = Map::new();
    for (name, s) in &set {
        let spec = BoundSpec::with_optimal_gamma(s.clone(), unit(), 1.0)?;
        let curve = omega_curve(&spec, 1)?;
        finals.insert(name.to_string(), json!({"gamma_star": spec.gamma, "final_omega": curve.final_omega()}));
        curves.push(curve);
    }
    let names: Vec<String> = set.iter().map(|(n, _)| format!("omega_{n}")).collect();
    Ok(Artifacts::default()
        .table("schedule_comparison", curves_table(&names, &curves))
        .with("schedules", finals)
        .with("pinned", json!({"T": t, "c": 0.2, "gamma": "star", "D": 1.0, "G": 1.0})))
}

fn cosine_cycle() -> CliResult<Artifacts> {
    let t = 400;
    let cycles = [0.25, 0.5, 0.75, 1.0];
    let shared = terms(&make_cosine(t, 0.0, 1.0)?, &unit(), 1.0, t)?.gamma_star();
    let mut table = Table::new(["cycle", "omega_shared_gamma", "omega_own_gamma"]);
    let mut best = (f64::INFINITY, 0.0);
    for &l in &cycles {
        let tm = terms(&make_cosine(t, 0.0, l)?, &unit(), 1.0, t)?;
        let shared_omega = tm.omega(shared);
        if shared_omega < best.0 {
            best = (shared_omega, l);
        }
        table.push(vec![l.into(), shared_omega.into(), tm.optimal_bound().into()]);
    }
    Ok(Artifacts::default()
        .table("cosine_cycle", table)
        .with("best_cycle_shared_gamma", best.1)
        .with("shared_gamma", shared)
        .with("pinned", json!({"T": t, "cycles": cycles, "gamma": "gamma*(cycle=1)"})))
}

fn ablation() -> CliResult<Artifacts> {
    let t0 = cooldown_start(400, 0.2)?;
    let spec = BoundSpec::with_optimal_gamma(make_wsd(400, 0.2, LINEAR)?, unit(), 1.0)?;
    let full = omega_curve(&spec, 1)?;
    let ab = ablation_curve(&spec, 1)?;
    let names = ["omega".to_string(), "omega_ablation".to_string()];
    Ok(Artifacts::default()
        .with("drop_ratio", drop_ratio(&full, t0, 400))
        .with("drop_ratio_ablation", drop_ratio(&ab, t0, 400))
        .table("ablation", curves_table(&names, &[full, ab]))
        .with("pinned", json!({"T": 400, "c": 0.2, "gamma": "star"})))
}

fn scaling_law() -> CliResult<Artifacts> {
    let law = ScalingLaw::default();
    let mut table = Table::new(["case", "input", "solution"]);
    let mut out = Artifacts::default();
    let d = 10.24e9;
    for (key, input, value) in [
        ("D2_from_10.24B", 10.24e9, law.tokens_for_delta(124e6, 10.24e9, 0.01)?),
        ("D2_from_20.48B", 20.48e9, law.tokens_for_delta(124e6, 20.48e9, 0.01)?),
        ("N2_from_124M", 124e6, law.params_for_delta(124e6, d, 0.01)?),
        ("N2_from_210M", 210e6, law.params_for_delta(210e6, d, 0.01)?),
    ] {
        table.push(vec![key.into(), input.into(), value.into()]);
        out.set(key, value);
    }
    Ok(out
        .table("scaling_law", table)
        .with("law", law)
        .with("pinned", json!({"delta": 0.01, "N_for_tokens": 124e6, "D_for_params": d})))
}

fn wsd_numerics() -> CliResult<Artifacts> {
    let t = 100_000;
    let t0 = cooldown_start(t, 0.2)?;
    let closed = bound_wsd_closed_form(t, t0, 1.0, 1.0)?;
    let numeric = optimal_bound(&make_wsd_with_start(t, t0, LINEAR)?, &unit(), 1.0)?;
    let mut table = Table::new(["quantity", "value"]);
    let rows: Vec<(&str, f64)> = vec![
        ("H_99999", harmonic(99_999)),
        ("2.2*(H_179998-H_20001)", 2.2 * (harmonic(179_998) - harmonic(20_001))),
        ("H_179998-H_20001", harmonic(179_998) - harmonic(20_001)),
        ("linear_decay_leading_factor", linear_decay_leading_factor(t)?),
        ("linear_decay_closed_form", bound_linear_decay_closed_form(t, 1.0, 1.0)?),
        ("wsd_closed_form", closed),
        ("wsd_numeric", numeric),
        ("wsd_large_horizon_approx", wsd_large_horizon_approx(t, 0.2, 1.0, 1.0)?),
    ];
    let mut out = Artifacts::default();
    for (name, value) in &rows {
        table.push(vec![(*name).into(), (*value).into()]);
        out.set(name, value);
    }
    Ok(out
        .table("wsd_numerics", table)
        .with("pinned", json!({"T": t, "T0": t0, "c": 0.2, "D": 1.0, "G": 1.0}))
        .with("value_check", Value::from(closed >= numeric)))
}
