use crate::delay_dynamics::{DelaySystem, Segment};
use crate::error::{Error, Result};
use crate::functionals::{PastFunctional, Phibar, Regime};

use super::gaussian::QuadConfig;
use super::ou::OuContext;
use super::response::ResponseTable;

/// Least-squares fit of `log value = slope · log t + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(t, value)` pairs that entered the fit.
    pub points: Vec<(f64, f64)>,
}

/// Fits a power law; needs ≥ 5 positive points spanning ≥ 2 decades.
pub fn fit_loglog(points: Vec<(f64, f64)>) -> Result<RateFit> {
    if points.len() < 5 {
        return Err(Error::SingularFit(format!("{} points, need at least 5", points.len())));
    }
    let (tmin, tmax) = points
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), (t, _)| (a.min(*t), b.max(*t)));
    if !(tmin > 0.0) || tmax / tmin < 100.0 * (1.0 - 1e-9) {
        return Err(Error::SingularFit(format!("probe times [{tmin:e}, {tmax:e}] span less than 2 decades")));
    }
    if let Some((t, v)) = points.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::SingularFit(format!("non-positive value {v:e} at t = {t:e}")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points,
    })
}

/// Slope of `log λ_min(bar Q_t)` against `log t`.
pub fn smoothing_rate_probe(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    t_list: &[f64],
    dt: f64,
) -> Result<RateFit> {
    let tmax = t_list.iter().copied().fold(0.0, f64::max);
    let table = ResponseTable::new(sys, pf, tmax, dt)?;
    let mut pts = Vec::with_capacity(t_list.len());
    for &t in t_list {
        pts.push((t, table.covariance(0.0, t, 2)?.lambda_min()));
    }
    fit_loglog(pts)
}

/// Slope of `log |∇R_t[φ](x)h|` against `log t`.
pub fn gradient_rate_probe(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    phibar: &Phibar,
    x: &Segment<f64>,
    h: &Segment<f64>,
    t_list: &[f64],
    quad: &QuadConfig,
) -> Result<RateFit> {
    let tmax = t_list.iter().copied().fold(0.0, f64::max);
    let ctx = OuContext::new(sys, pf, tmax, quad)?;
    let mut pts = Vec::with_capacity(t_list.len());
    for &t in t_list {
        pts.push((t, ctx.gradient(phibar, t, x, h)?.abs()));
    }
    fit_loglog(pts)
}

/// One probed covariance window and its normalized lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowCheck {
    pub s: f64,
    pub t: f64,
    /// `min_ξ ⟨ξ, bar Q_t^s ξ⟩ / (t − s)` over a unit-sphere mesh.
    pub ratio: f64,
}

/// Numerical certificate for `⟨ξ, bar Q_t^s ξ⟩ ≥ c (t − s)|ξ|²` on `t ≤ t̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundCertificate {
    pub c_hat: f64,
    pub t_bar: f64,
    pub windows: Vec<WindowCheck>,
    pub regime: &'static str,
    pub pass: bool,
}

/// Estimates `t̄` as the largest probe time such that every probed window
/// ending at or before it keeps `ratio ≥ ĉ/2`, `ĉ` taken from the smallest window at 0.
pub fn lower_bound_certificate(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    probe_times: &[f64],
    dt: f64,
) -> Result<LowerBoundCertificate> {
    let mut times: Vec<f64> = probe_times.iter().copied().filter(|t| *t > 0.0).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    if times.is_empty() {
        return Err(Error::Invalid("certificate needs positive probe times".into()));
    }
    let table = ResponseTable::new(sys, pf, *times.last().unwrap(), dt)?;
    let mut starts = vec![0.0];
    starts.extend(times.iter().copied());
    let mut windows = Vec::new();
    for &t in &times {
        for &s in starts.iter().filter(|s| **s < t) {
            let q = table.covariance(s, t, 2)?;
            windows.push(WindowCheck {
                s,
                t,
                ratio: q.sphere_min() / (t - s),
            });
        }
    }
    let c_hat = windows[0].ratio;
    let mut t_bar = 0.0;
    for &t in &times {
        let ok = windows.iter().filter(|w| w.t == t).all(|w| w.ratio >= 0.5 * c_hat);
        if !ok {
            break;
        }
        t_bar = t;
    }
    let regime = pf.regime().label();
    let pass = matches!(pf.regime(), Regime::A1) && c_hat > 0.0 && t_bar > 0.0;
    Ok(LowerBoundCertificate {
        c_hat,
        t_bar,
        windows,
        regime,
        pass,
    })
}

/// Geometric grid of `count` points from `a` to `b`.
pub fn geometric_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![a];
    }
    let r = (b / a).ln() / (count - 1) as f64;
    (0..count).map(|k| a * (r * k as f64).exp()).collect()
}
