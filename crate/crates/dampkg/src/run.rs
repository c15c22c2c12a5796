//! One function per experiment; each writes its artifacts and returns the
//! report that went into `report.json`.

use std::time::{SystemTime, UNIX_EPOCH};

use dampkg_core::damping::DampingProfile;
use dampkg_core::decay::{fit_decay, fit_decay_samples, polynomial_rate_candidates, DecayModel, DecayReport};
use dampkg_core::evolution::{default_dt, simulate, smooth_data, EnergyTrace};
use dampkg_core::operator::{
    absorb_damping_estimate, refine_sweep, resolvent_sigma_min, symmetric_lambdas, ResolventSweep, SigmaPoint,
};
use dampkg_core::uncertainty::{quadform_min_eig, spectral_constant, QuadFormCurve, SpectralConstantCurve};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{
    Experiment, FitConfig, ResolventSweepConfig, RunConfig, SimulateConfig, SpectralConstantConfig,
    ThicknessConfig, UncertaintySweepConfig,
};
use crate::error::CliError;
use crate::io::{profile_rows, read_trace, Artifacts};
use crate::svg::{LineChart, Series};

pub const TRACE_CSV: &str = "trace.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const PROFILE_CSV: &str = "profile.csv";
pub const REPORT_JSON: &str = "report.json";
pub const CHART_SVG: &str = "chart.svg";

/// Runs the configured experiment, writing into `out`.
pub fn run(cfg: &RunConfig, out: &mut Artifacts) -> Result<Value, CliError> {
    let result = match &cfg.experiment {
        Experiment::Simulate(c) => run_simulate(cfg, c, out),
        Experiment::ResolventSweep(c) => run_resolvent_sweep(cfg, c, out),
        Experiment::SpectralConstant(c) => run_spectral_constant(cfg, c, out),
        Experiment::UncertaintySweep(c) => run_uncertainty_sweep(cfg, c, out),
        Experiment::Thickness(c) => run_thickness(cfg, c, out),
        Experiment::Fit(c) => run_fit(cfg, c, out),
    }?;
    let report = json!({
        "experiment": cfg.experiment.name(),
        "config_hash": cfg.hash(),
        "created_unix": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "config": cfg,
        "result": result,
    });
    out.json(REPORT_JSON, &report)?;
    Ok(report)
}

fn decay_curve(rep: &DecayReport, times: &[f64]) -> Vec<(f64, f64)> {
    let [t1, t2] = rep.fit_window;
    times
        .iter()
        .filter(|&&t| t >= t1 && t <= t2)
        .map(|&t| {
            let v = match rep.model {
                DecayModel::Exponential => rep.prefactor * (-rep.rate * t).exp(),
                DecayModel::Polynomial => rep.prefactor * t.powf(-rep.rate),
                DecayModel::Logarithmic => rep.prefactor * (std::f64::consts::E + t).ln().powf(-rep.rate),
                DecayModel::NoDecay => rep.prefactor,
            };
            (t, v)
        })
        .collect()
}

fn decay_json(rep: &DecayReport, s: f64) -> Value {
    let mut v = serde_json::to_value(rep).expect("serializable");
    if rep.model == DecayModel::Polynomial {
        if let Some([a, b]) = polynomial_rate_candidates(s) {
            v["polynomial_candidates"] = json!({ "s/(4-2s)": a, "2s/(4-2s)": b });
        }
    }
    v
}

fn energy_chart(title: &str, times: &[f64], energies: &[f64], rep: &DecayReport) -> String {
    let model = serde_json::to_value(rep.model).expect("serializable");
    LineChart {
        title: title.into(),
        x_label: "t".into(),
        y_label: "energy".into(),
        log_y: true,
        series: vec![
            Series::line("E(t)", times.iter().copied().zip(energies.iter().copied()).collect()),
            Series::dashed(&format!("fit: {}", model.as_str().unwrap_or("?")), decay_curve(rep, times)),
        ],
    }
    .render()
}

fn run_simulate(cfg: &RunConfig, c: &SimulateConfig, out: &mut Artifacts) -> Result<Value, CliError> {
    let grid = cfg.grid()?;
    let gamma = cfg.damping_profile(&grid)?;
    let spec = c.data.spec(cfg.seed);
    let mut u0 = spec.build(&grid, cfg.s).map_err(|e| CliError::from(e).at("experiment.simulate.data"))?;
    if c.smoothing > 0 {
        u0 = smooth_data(&u0, c.smoothing)?;
    }
    let dt = c.dt.unwrap_or_else(|| default_dt(&grid, cfg.s).min(c.dt_out));
    let mut trace: EnergyTrace = simulate(&u0, gamma.as_ref(), cfg.s, c.t_end, dt, c.dt_out)?;
    trace.meta.data = Some(spec);
    trace.meta.smoothing = c.smoothing;
    let rep = fit_decay(&trace, c.window).map_err(|e| CliError::from(e).at("experiment.simulate.window"))?;

    out.csv(TRACE_CSV, &["t", "energy"], trace.times.iter().zip(&trace.energies).map(|(&t, &e)| vec![t, e]))?;
    out.text(CHART_SVG, &energy_chart("Energy decay", &trace.times, &trace.energies, &rep))?;
    Ok(json!({
        "decay": decay_json(&rep, cfg.s),
        "meta": trace.meta,
        "samples": trace.len(),
        "initial_energy": trace.energies[0],
        "final_energy": trace.energies[trace.len() - 1],
    }))
}

fn run_fit(cfg: &RunConfig, c: &FitConfig, out: &mut Artifacts) -> Result<Value, CliError> {
    let (t, e) = read_trace(&cfg.resolve(&c.trace)).map_err(|e| e.at("experiment.fit.trace"))?;
    let t_end = *t.last().ok_or_else(|| CliError::Validation {
        path: Some("experiment.fit.trace".into()),
        message: "trace is empty".into(),
    })?;
    let window = c.window.unwrap_or([0.2 * t_end, t_end]);
    let rep = fit_decay_samples(&t, &e, window).map_err(|e| CliError::from(e).at("experiment.fit"))?;
    out.text(CHART_SVG, &energy_chart("Decay fit", &t, &e, &rep))?;
    Ok(json!({ "decay": decay_json(&rep, cfg.s), "samples": t.len() }))
}

fn envelope_json(env: &dampkg_core::Envelope) -> Value {
    serde_json::to_value(env).expect("serializable")
}

fn run_resolvent_sweep(cfg: &RunConfig, c: &ResolventSweepConfig, out: &mut Artifacts) -> Result<Value, CliError> {
    let grid = cfg.grid()?;
    let gamma = cfg.require_damping(&grid)?;
    let opts = c.solver.options(cfg.seed);
    let s = cfg.s;
    let lambdas = symmetric_lambdas(c.half_width, c.points);
    let points = refine_sweep(&lambdas, c.refine_levels, |ls| {
        ls.par_iter().map(|&l| resolvent_sigma_min(&grid, Some(&gamma), l, s, &opts)).collect()
    })?;
    let sweep = ResolventSweep::from_points(s, points)?;
    let predicted = |p: &SigmaPoint| sweep.envelope.at(p.lambda.abs()).sqrt();

    let absorb = match &c.absorb {
        None => None,
        Some(a) => {
            if s < 2.0 {
                return Err(CliError::Validation {
                    path: Some("experiment.resolvent-sweep.absorb".into()),
                    message: format!("absorption uses the order-s/2 annulus form and needs s >= 2, got {s}"),
                });
            }
            let cert = gamma.thickness(a.eps, a.cube_len).map_err(|e| CliError::from(e).at("experiment.resolvent-sweep.absorb"))?;
            let omega = gamma.level_set(a.eps);
            let lams: Vec<f64> = (0..a.points).map(|i| c.half_width * i as f64 / (a.points.max(2) - 1) as f64).collect();
            let qp = lams
                .par_iter()
                .map(|&l| quadform_min_eig(&grid, s / 2.0, &omega, l, &opts))
                .collect::<Result<Vec<_>, _>>()?;
            let curve = QuadFormCurve::from_points(s / 2.0, qp)?;
            let est = absorb_damping_estimate(&gamma, a.eps, Some(&cert), &curve.envelope)
                .map_err(|e| CliError::from(e).at("experiment.resolvent-sweep.absorb"))?;
            let check = est.cross_check(&sweep.points);
            Some((cert, curve, est, check))
        }
    };

    out.csv(
        SWEEP_CSV,
        &["lambda", "sigma_min", "residual", "predicted_envelope"],
        sweep.points.iter().map(|p| vec![p.lambda, p.sigma_min, p.residual, predicted(p)]),
    )?;

    let mut series = vec![
        Series::line("sigma_min", sweep.points.iter().map(|p| (p.lambda, p.sigma_min)).collect()),
        Series::dashed("fitted envelope", sweep.points.iter().map(|p| (p.lambda, predicted(p))).collect()),
    ];
    if let Some((_, _, est, _)) = &absorb {
        series.push(Series::dashed(
            "absorbed bound",
            sweep.points.iter().map(|p| (p.lambda, est.predict(p.lambda).sqrt())).collect(),
        ));
    }
    let chart = LineChart {
        title: "Resolvent lower bound along the imaginary axis".into(),
        x_label: "lambda".into(),
        y_label: "sigma_min".into(),
        log_y: true,
        series,
    };
    out.text(CHART_SVG, &chart.render())?;

    let min = sweep.points.iter().map(|p| p.sigma_min).fold(f64::INFINITY, f64::min);
    let max_res = sweep.points.iter().map(|p| p.residual).fold(0.0, f64::max);
    let mut result = json!({
        "envelope": envelope_json(&sweep.envelope),
        "envelope_target": "sigma_min^2 >= c exp(-C |lambda|)",
        "samples": sweep.points.len(),
        "min_sigma": min,
        "max_residual": max_res,
        "provenance": { "damping": cfg.damping, "grid": cfg.grid, "s": s },
    });
    if let Some((cert, curve, est, check)) = absorb {
        result["absorption"] = json!({
            "certificate": cert,
            "annulus_envelope": envelope_json(&curve.envelope),
            "estimate": est,
            "cross_check": check,
        });
    }
    Ok(result)
}

fn level_set_for(cfg: &RunConfig, grid: &dampkg_core::TorusGrid, eps: f64, at: &str) -> Result<(DampingProfile, Vec<bool>), CliError> {
    let gamma = cfg.require_damping(grid)?;
    if !(eps > 0.0) {
        return Err(CliError::Validation { path: Some(at.into()), message: format!("eps must be positive, got {eps}") });
    }
    let omega = gamma.level_set(eps);
    if !omega.iter().any(|&b| b) {
        return Err(CliError::Validation {
            path: Some(at.into()),
            message: format!("level set {{gamma >= {eps}}} is empty on this grid"),
        });
    }
    Ok((gamma, omega))
}

fn run_spectral_constant(cfg: &RunConfig, c: &SpectralConstantConfig, out: &mut Artifacts) -> Result<Value, CliError> {
    let grid = cfg.grid()?;
    let (_, omega) = level_set_for(cfg, &grid, c.eps, "experiment.spectral-constant.eps")?;
    let opts = c.solver.options(cfg.seed);
    let points = c
        .radii
        .par_iter()
        .map(|&r| spectral_constant(&grid, &omega, r, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let curve = SpectralConstantCurve::from_points(points);
    out.csv(
        SWEEP_CSV,
        &["R", "constant", "iterations"],
        curve.points.iter().map(|p| vec![p.radius, p.constant, p.iterations as f64]),
    )?;
    let fit: Vec<(f64, f64)> = curve
        .points
        .iter()
        .map(|p| (p.radius, (curve.log_intercept + curve.log_slope * p.radius).exp()))
        .collect();
    let chart = LineChart {
        title: "Spectral constant vs band radius".into(),
        x_label: "R".into(),
        y_label: "C(Omega, R)".into(),
        log_y: true,
        series: vec![
            Series::line("constant", curve.points.iter().map(|p| (p.radius, p.constant)).collect()),
            Series::dashed("exp fit", fit),
        ],
    };
    out.text(CHART_SVG, &chart.render())?;
    let range = curve.log_range();
    Ok(json!({
        "log_slope": curve.log_slope,
        "log_intercept": curve.log_intercept,
        "max_residual": curve.max_residual,
        "rms_residual": curve.rms_residual,
        "log_range": range,
        "relative_residual": curve.max_residual / range,
        "unresolved": curve.unresolved,
        "omega_fraction": omega.iter().filter(|&&b| b).count() as f64 / omega.len() as f64,
        "points": curve.points,
    }))
}

fn run_uncertainty_sweep(cfg: &RunConfig, c: &UncertaintySweepConfig, out: &mut Artifacts) -> Result<Value, CliError> {
    let grid = cfg.grid()?;
    let (_, omega) = level_set_for(cfg, &grid, c.eps, "experiment.uncertainty-sweep.eps")?;
    let opts = c.solver.options(cfg.seed);
    let order = c.order.unwrap_or(cfg.s);
    let lams: Vec<f64> = (0..c.points).map(|i| c.lambda_max * i as f64 / (c.points - 1) as f64).collect();
    let points = lams
        .par_iter()
        .map(|&l| quadform_min_eig(&grid, order, &omega, l, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let curve = QuadFormCurve::from_points(order, points)?;
    out.csv(
        SWEEP_CSV,
        &["lambda", "mu_min", "residual"],
        curve.points.iter().map(|p| vec![p.lambda, p.mu_min, p.residual]),
    )?;
    let chart = LineChart {
        title: "Resolvent quadratic form: smallest eigenvalue".into(),
        x_label: "lambda".into(),
        y_label: "mu_min".into(),
        log_y: true,
        series: vec![
            Series::line("mu_min", curve.points.iter().map(|p| (p.lambda, p.mu_min)).collect()),
            Series::dashed("envelope", curve.points.iter().map(|p| (p.lambda, curve.envelope.at(p.lambda))).collect()),
        ],
    };
    out.text(CHART_SVG, &chart.render())?;
    Ok(json!({
        "order": order,
        "envelope": envelope_json(&curve.envelope),
        "envelope_target": "mu_min >= c exp(-C lambda)",
        "samples": curve.points.len(),
    }))
}

fn run_thickness(cfg: &RunConfig, c: &ThicknessConfig, out: &mut Artifacts) -> Result<Value, CliError> {
    let grid = cfg.grid()?;
    let gamma = cfg.require_damping(&grid)?;
    let cert = gamma.thickness(c.eps, c.cube_len).map_err(|e| CliError::from(e).at("experiment.thickness"))?;
    let gcc = if grid.dim() == 1 { Some(gamma.gcc_1d(c.cube_len)?) } else { None };
    let (header, rows) = profile_rows(&gamma);
    out.csv(PROFILE_CSV, &header, rows)?;
    let n = grid.points_per_axis();
    let slice: Vec<(f64, f64)> = (0..n).map(|i| (grid.point(i)[0], gamma.gamma()[i])).collect();
    let level: Vec<(f64, f64)> = vec![(slice[0].0, c.eps), (slice[n - 1].0, c.eps)];
    let chart = LineChart {
        title: if grid.dim() == 1 { "Damping profile".into() } else { "Damping profile, first row".into() },
        x_label: "x".into(),
        y_label: "gamma".into(),
        log_y: false,
        series: vec![Series::line("gamma", slice), Series::dashed("eps", level)],
    };
    out.text(CHART_SVG, &chart.render())?;
    Ok(json!({
        "certificate": cert,
        "density": cert.density,
        "thick": cert.thick,
        "gcc_min_integral": gcc,
        "ess_inf": gamma.ess_inf(),
        "sup_norm": gamma.sup_norm(),
    }))
}
