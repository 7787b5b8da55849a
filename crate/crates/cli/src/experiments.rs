use serde_json::{json, Map, Value};

use delay_smoothing::control::{verify_fundamental_relation, Candidate, FeedbackPolicy, LoopConfig};
use delay_smoothing::delay_dynamics::{checked_steps, simulate_controlled, simulate_ou, BrownianPath, Control};
use delay_smoothing::functionals::{apply_reduction, Regime};
use delay_smoothing::kolmogorov::{linear_solve, picard_solve, GridSpec, SolverConfig};
use delay_smoothing::mc::{estimate, par_map};
use delay_smoothing::smoothing::{
    geometric_grid, gradient_rate_probe, lower_bound_certificate, perturbed_gradient, smoothing_rate_probe,
    strong_feller_failure_probe, GradientPath, McConfig, QuadConfig, ResponseTable,
};
use delay_smoothing::{DelaySystem, PastFunctional, Phibar};

use crate::catalog::Catalog;
use crate::config::{Experiment, RunConfig};
use crate::output::Table;
use crate::CliError;

/// Data files, summary fields and the acceptance verdict of one run.
pub struct Report {
    pub tables: Vec<Table>,
    pub summary: Map<String, Value>,
    pub pass: bool,
}

fn quad(cfg: &RunConfig) -> QuadConfig {
    QuadConfig {
        gh_order: Some(cfg.params.gh_order),
        dt: cfg.params.table_dt,
        ..QuadConfig::default()
    }
}

fn phibar(cfg: &RunConfig, cat: &Catalog, n: usize, default: &str) -> Result<Phibar, CliError> {
    let name = cfg.observable.as_deref().unwrap_or(default);
    cat.observable(name, n, cfg.observable_param)
        .ok_or_else(|| CliError::Validation(format!("unknown observable '{name}'")))
}

fn times_or(cfg: &RunConfig, a: f64, b: f64, count: usize) -> Vec<f64> {
    if cfg.params.times.is_empty() {
        geometric_grid(a, b, count)
    } else {
        cfg.params.times.clone()
    }
}

fn expected_rate(pf: &PastFunctional<f64>, a1: (f64, f64), a2: Option<(f64, f64)>) -> Option<(f64, f64)> {
    match pf.regime() {
        Regime::A1 => Some(a1),
        Regime::A2 { .. } => a2,
        Regime::Degenerate => None,
    }
}

fn range_value(r: Option<(f64, f64)>) -> Value {
    r.map(|(a, b)| json!([a, b])).unwrap_or(Value::Null)
}

pub fn run(cfg: &RunConfig, cat: &Catalog) -> Result<Report, CliError> {
    let (sys, pf) = cfg.system(cat)?;
    let mut summary = Map::new();
    summary.insert("regime".into(), json!(pf.regime().label()));
    let mut report = match cfg.experiment {
        Experiment::Simulate => simulate(cfg, cat, &sys, &pf)?,
        Experiment::Covariance => covariance(cfg, &sys, &pf)?,
        Experiment::SmoothingRate => smoothing_rate(cfg, &sys, &pf)?,
        Experiment::GradientRate => gradient_rate(cfg, cat, &sys, &pf)?,
        Experiment::FellerProbe => feller(cfg, &sys)?,
        Experiment::HjbSolve => hjb(cfg, cat, &sys, &pf)?,
        Experiment::LinearSolve => linear(cfg, cat, &sys, &pf)?,
        Experiment::Control => control(cfg, cat)?,
    };
    summary.append(&mut report.summary);
    report.summary = summary;
    Ok(report)
}

fn simulate(cfg: &RunConfig, cat: &Catalog, sys: &DelaySystem<f64>, pf: &PastFunctional<f64>) -> Result<Report, CliError> {
    let p = &cfg.params;
    let x = cfg.initial(sys)?;
    let n = sys.dim();
    let steps = checked_steps(p.horizon, p.dt)?;
    let drift = match &cfg.drift {
        Some(name) => Some(
            cat.drift(name, pf.clone(), &cfg.drift_param)
                .ok_or_else(|| CliError::Validation(format!("unknown drift '{name}'")))?,
        ),
        None => None,
    };
    let seed = cfg.seed();
    let paths = par_map(p.paths, |k| {
        let noise = BrownianPath::generate(n, steps, p.dt, seed, k as u64);
        match &drift {
            Some(d) => simulate_controlled(sys, &x, Some(d), &Control::Zero, p.horizon, p.dt, &noise),
            None => simulate_ou(sys, &x, p.horizon, p.dt, &noise),
        }
    });
    let mut header = vec!["path".to_string(), "t".to_string()];
    header.extend((0..n).map(|i| format!("head_{i}")));
    header.extend((0..n).map(|i| format!("reduced_{i}")));
    let mut table = Table::new("trajectories.csv", header);
    let mut terminal = Vec::with_capacity(p.paths);
    for (k, path) in paths.into_iter().enumerate() {
        let path = path?;
        for (i, seg) in path.iter().enumerate() {
            let y = apply_reduction(pf, seg);
            let mut row = vec![k as f64, i as f64 * p.dt];
            row.extend_from_slice(seg.head());
            row.extend_from_slice(&y);
            table.push(row);
            if i == steps {
                terminal.push(y[0]);
            }
        }
    }
    let e = estimate(&terminal);
    let summary = Map::from_iter([
        ("paths".into(), json!(p.paths)),
        ("steps".into(), json!(steps)),
        ("terminal_reduced_mean".into(), json!(e.mean)),
        ("terminal_reduced_se".into(), json!(e.se)),
    ]);
    Ok(Report { tables: vec![table], summary, pass: true })
}

fn covariance(cfg: &RunConfig, sys: &DelaySystem<f64>, pf: &PastFunctional<f64>) -> Result<Report, CliError> {
    let times = if cfg.params.times.is_empty() { vec![0.1, 0.5, 0.9] } else { cfg.params.times.clone() };
    let tmax = times.iter().copied().fold(0.0, f64::max);
    let table_dt = cfg.params.table_dt;
    let rt = ResponseTable::new(sys, pf, tmax, table_dt)?;
    let n = sys.dim();
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        for j in 0..n {
            header.push(format!("q_{i}_{j}"));
        }
    }
    header.extend(["lambda_min".to_string(), "lambda_max".to_string()]);
    let mut table = Table::new("covariance.csv", header);
    for &t in &times {
        let q = rt.covariance(0.0, t, 2)?;
        let mut row = vec![t];
        for i in 0..n {
            for j in 0..n {
                row.push(q.value.get(i, j));
            }
        }
        row.extend([q.lambda_min(), q.lambda_max()]);
        table.push(row);
    }
    let summary = Map::from_iter([("times".into(), json!(times)), ("table_dt".into(), json!(table_dt))]);
    Ok(Report { tables: vec![table], summary, pass: true })
}

fn smoothing_rate(cfg: &RunConfig, sys: &DelaySystem<f64>, pf: &PastFunctional<f64>) -> Result<Report, CliError> {
    let times = times_or(cfg, 1e-3, 1e-1, 12);
    let fit = smoothing_rate_probe(sys, pf, &times, cfg.params.table_dt)?;
    let mut table = Table::new("smoothing_rate.csv", vec!["t".into(), "lambda_min".into()]);
    for (t, l) in &fit.points {
        table.push(vec![*t, *l]);
    }
    let cert = lower_bound_certificate(sys, pf, &times, cfg.params.table_dt)?;
    let expected = expected_rate(pf, (0.9, 1.1), Some((2.8, 3.2)));
    let pass = expected.is_some_and(|(a, b)| fit.slope >= a && fit.slope <= b);
    let summary = Map::from_iter([
        ("slope".into(), json!(fit.slope)),
        ("intercept".into(), json!(fit.intercept)),
        ("r_squared".into(), json!(fit.r_squared)),
        ("expected_slope".into(), range_value(expected)),
        (
            "certificate".into(),
            json!({"pass": cert.pass, "c_hat": cert.c_hat, "t_bar": cert.t_bar, "regime": cert.regime}),
        ),
    ]);
    Ok(Report { tables: vec![table], summary, pass })
}

fn gradient_rate(cfg: &RunConfig, cat: &Catalog, sys: &DelaySystem<f64>, pf: &PastFunctional<f64>) -> Result<Report, CliError> {
    let times = times_or(cfg, 1e-3, 1e-1, 12);
    let phi = phibar(cfg, cat, sys.dim(), "indicator")?;
    let x = cfg.initial(sys)?;
    let h = cfg.direction(sys)?;
    let fit = gradient_rate_probe(sys, pf, &phi, &x, &h, &times, &quad(cfg))?;
    let mut table = Table::new("gradient_rate.csv", vec!["t".into(), "abs_gradient".into()]);
    for (t, g) in &fit.points {
        table.push(vec![*t, *g]);
    }
    let expected = expected_rate(pf, (-0.6, -0.4), None);
    let pass = expected.is_none_or(|(a, b)| fit.slope >= a && fit.slope <= b);
    let summary = Map::from_iter([
        ("observable".into(), json!(phi.name())),
        ("slope".into(), json!(fit.slope)),
        ("r_squared".into(), json!(fit.r_squared)),
        ("expected_slope".into(), range_value(expected)),
    ]);
    Ok(Report { tables: vec![table], summary, pass })
}

fn feller(cfg: &RunConfig, sys: &DelaySystem<f64>) -> Result<Report, CliError> {
    let p = &cfg.params;
    let x = cfg.initial(sys)?;
    let r = strong_feller_failure_probe(sys, p.t, p.theta_star, &x, &quad(cfg))?;
    let mut table = Table::new("feller.csv", vec!["delta".into(), "point_ratio".into(), "control_ratio".into()]);
    for row in &r.rows {
        table.push(vec![row.delta, row.point_ratio, row.control_ratio]);
    }
    let pass = if r.deterministic { r.growth >= 100.0 } else { r.point_bounded && r.control_bounded };
    let summary = Map::from_iter([
        ("t".into(), json!(r.t)),
        ("theta_star".into(), json!(r.theta_star)),
        ("point_evaluation_deterministic".into(), json!(r.deterministic)),
        ("growth".into(), json!(r.growth)),
        ("control_bound".into(), json!(r.control_bound)),
        ("point_bound".into(), json!(r.point_bound)),
        ("control_bounded".into(), json!(r.control_bounded)),
        ("point_bounded".into(), json!(r.point_bounded)),
    ]);
    Ok(Report { tables: vec![table], summary, pass })
}

fn solver_config(cfg: &RunConfig, horizon: f64) -> SolverConfig {
    let p = &cfg.params;
    SolverConfig {
        horizon,
        tol: p.tol,
        max_iter: p.max_iter,
        gh_order: Some(p.gh_order),
        s_order: p.s_order,
        time_nodes: p.time_nodes,
        grid: GridSpec {
            half_width: p.half_width,
            nodes: p.grid_nodes,
            ..GridSpec::default()
        },
        ..SolverConfig::default()
    }
}

fn hjb(cfg: &RunConfig, cat: &Catalog, sys: &DelaySystem<f64>, pf: &PastFunctional<f64>) -> Result<Report, CliError> {
    let n = sys.dim();
    let phi = phibar(cfg, cat, n, "tanh")?;
    let name = cfg.psi.as_deref().unwrap_or("zero");
    let psi = cat
        .psi(name, n, &cfg.psi_param)
        .ok_or_else(|| CliError::Validation(format!("unknown nonlinearity '{name}'")))?;
    let w = picard_solve(sys, pf, &phi, &psi, &solver_config(cfg, cfg.params.horizon))?;
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("y_{i}")));
    header.push("w".into());
    header.extend((0..n).map(|i| format!("scaled_grad_g_{i}")));
    let mut values = Table::new("value_grid.csv", header);
    let nodes = w.grid().nodes();
    for (t, v, g) in w.slices() {
        for (j, y) in nodes.iter().enumerate() {
            let mut row = vec![t];
            row.extend_from_slice(y);
            row.push(v[j]);
            row.extend(w.scale_gradient(t, &g[j * n..(j + 1) * n]));
            values.push(row);
        }
    }
    let mut iters = Table::new("iterations.csv", vec!["window".into(), "sweep".into(), "change".into(), "ratio".into()]);
    let mut max_ratio = 0.0f64;
    for (b, r) in w.reports().iter().enumerate() {
        for (k, c) in r.changes.iter().enumerate() {
            let ratio = if k == 0 { f64::NAN } else { r.ratios[k - 1] };
            iters.push(vec![b as f64, k as f64, *c, ratio]);
        }
        max_ratio = r.ratios.iter().copied().fold(max_ratio, f64::max);
    }
    let pass = max_ratio < 1.0;
    let bound = w.phibar_bound();
    let summary = Map::from_iter([
        ("observable".into(), json!(phi.name())),
        ("nonlinearity".into(), json!(psi.name())),
        ("t_bar".into(), json!(w.tbar())),
        ("window_length".into(), json!(w.window_length())),
        ("iterations".into(), json!(w.reports().iter().map(|r| r.iterations).collect::<Vec<_>>())),
        ("max_contraction_ratio".into(), json!(max_ratio)),
        ("scaled_gradient_sup".into(), json!(w.scaled_gradient_sup())),
        ("c_t".into(), json!(if bound > 0.0 { w.scaled_gradient_sup() / bound } else { 0.0 })),
    ]);
    Ok(Report { tables: vec![values, iters], summary, pass })
}

fn linear(cfg: &RunConfig, cat: &Catalog, sys: &DelaySystem<f64>, pf: &PastFunctional<f64>) -> Result<Report, CliError> {
    let p = &cfg.params;
    let phi = phibar(cfg, cat, sys.dim(), "tanh")?;
    let name = cfg.drift.as_deref().unwrap_or("zero");
    let drift = cat
        .drift(name, pf.clone(), &cfg.drift_param)
        .ok_or_else(|| CliError::Validation(format!("unknown drift '{name}'")))?;
    let x = cfg.initial(sys)?;
    let mc = McConfig { paths: p.paths, seed: cfg.seed(), dt: p.dt };
    let gradient = match p.gradient.as_deref() {
        None => None,
        Some("formula") => Some(GradientPath::Formula),
        Some("fd") => Some(GradientPath::FiniteDifference),
        Some("both") => Some(GradientPath::Both),
        Some(other) => return Err(CliError::Validation(format!("unknown gradient path '{other}'"))),
    };
    let grad = match gradient {
        Some(path) => {
            let h = cfg.direction(sys)?;
            Some(perturbed_gradient(sys, pf, &drift, &phi, p.horizon - p.t, &x, &h, &mc, path, p.fd_delta)?)
        }
        None => None,
    };
    let e = linear_solve(sys, pf, &drift, &phi, p.t, p.horizon, &x, &mc)?;
    let mut table = Table::new("estimates.csv", vec!["estimator".into(), "mean".into(), "se".into()]);
    table.push_labeled("direct", vec![e.direct.mean, e.direct.se]);
    table.push_labeled("girsanov", vec![e.girsanov.mean, e.girsanov.se]);
    table.push_labeled("weight", vec![e.weight_mean.mean, e.weight_mean.se]);
    if let Some(g) = &grad {
        if let Some(f) = g.formula {
            table.push_labeled("gradient_formula", vec![f.mean, f.se]);
        }
        if let Some(f) = g.fd {
            table.push_labeled("gradient_fd", vec![f.mean, f.se]);
        }
    }
    let weight_ok = (e.weight_mean.mean - 1.0).abs() <= 3.0 * e.weight_mean.se + 1e-12;
    let summary = Map::from_iter([
        ("observable".into(), json!(phi.name())),
        ("drift".into(), json!(drift.name())),
        ("flagged".into(), json!(e.flagged)),
        ("weight_mean_ok".into(), json!(weight_ok)),
    ]);
    Ok(Report { tables: vec![table], summary, pass: !e.flagged && weight_ok })
}

fn control(cfg: &RunConfig, cat: &Catalog) -> Result<Report, CliError> {
    let p = &cfg.params;
    let name = cfg.benchmark.as_deref().unwrap_or("s1-quadratic");
    let mut problem = cat
        .benchmark(name)
        .ok_or_else(|| CliError::Validation(format!("unknown benchmark '{name}'")))??;
    if cfg.observable.is_some() {
        problem.phibar = phibar(cfg, cat, problem.sys.dim(), "tanh")?;
    }
    let policy = FeedbackPolicy::solve(&problem, &solver_config(cfg, problem.remaining()))?;
    let n = problem.sys.dim();
    let candidates: Vec<Candidate> = p.candidates.iter().map(|u| Candidate::constant(vec![*u; n])).collect();
    let lc = LoopConfig { dt: p.dt, paths: p.paths, seed: cfg.seed(), ..LoopConfig::default() };
    let rep = verify_fundamental_relation(&problem, &policy, &candidates, &lc)?;
    let mut table = Table::new(
        "verification.csv",
        vec!["control".into(), "cost".into(), "se".into(), "gap".into(), "allowance".into()],
    );
    for r in &rep.rows {
        table.push_labeled(&r.name, vec![r.cost.mean, r.cost.se, r.gap, 3.0 * r.cost.se + rep.slack]);
    }
    let summary = Map::from_iter([
        ("benchmark".into(), json!(name)),
        ("value".into(), json!(rep.value)),
        ("slack".into(), json!(rep.slack)),
        ("verdict".into(), json!(if rep.pass { "PASS" } else { "FAIL" })),
    ]);
    Ok(Report { tables: vec![table], summary, pass: rep.pass })
}
