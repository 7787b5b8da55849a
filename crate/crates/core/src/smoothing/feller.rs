//! Finite-difference probe contrasting a point evaluation of the past, for which
//! `R_t` does not smooth while `t < d`, with a head observable, for which it does.

use crate::delay_dynamics::{DelayMeasure, DelaySystem, Segment};
use crate::error::{Error, Result};
use crate::functionals::{PastFunctional, Phibar};
use crate::linalg::{dot, SquareMatrix};
use crate::quadrature::normal_pdf;

use super::gaussian::QuadConfig;
use super::ou::OuContext;

#[derive(Debug, Clone, PartialEq)]
pub struct FellerRow {
    pub delta: f64,
    /// `|R_t[φ](x + δh) − R_t[φ](x)| / δ` for `φ(x) = 1{y_t(θ*) > 0}`.
    pub point_ratio: f64,
    /// The same ratio for `φ̄ = 1{r > 0}` composed with the head projection.
    pub control_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FellerReport {
    pub t: f64,
    pub theta_star: f64,
    /// `t + θ* < 0`: the probed coordinate is still initial data.
    pub deterministic: bool,
    pub rows: Vec<FellerRow>,
    /// `point_ratio / control_ratio` at `δ = 1e-3`.
    pub growth: f64,
    /// `2 sup_y |∂_h R̄|` for the control observable.
    pub control_bound: f64,
    /// Same bound for the point observable; infinite when its law is degenerate.
    pub point_bound: f64,
    pub control_bounded: bool,
    pub point_bounded: bool,
}

pub const FELLER_DELTAS: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];

/// Head `e₁` plus a unit hat at the tail node nearest `t + θ*` (when that is in the past).
pub fn feller_direction(x: &Segment<f64>, t: f64, theta_star: f64) -> Result<Segment<f64>> {
    let n = x.dim();
    let mut h = Segment::zeros(n, x.delay(), x.grid_size())?;
    h.head_mut()[0] = 1.0;
    let u = t + theta_star;
    if u < 0.0 {
        let j = ((u + x.delay()) / x.spacing()).round() as usize;
        h.tail_point_mut(j.min(x.grid_size() - 1))[0] = 1.0;
    }
    Ok(h)
}

fn sup_gradient(ctx: &OuContext<'_>, t: f64, h: &Segment<f64>) -> Result<f64> {
    let g = ctx.gaussian(0.0, t)?;
    let a = [1.0];
    let v = ctx.mean(h, t)?;
    let s2 = g.cov().get(0, 0);
    if s2 <= ctx.quad().floor {
        return Ok(f64::INFINITY);
    }
    Ok(normal_pdf(0.0) * dot(&a, &v[..1]).abs() / s2.sqrt())
}

/// Runs the probe at `x` along [`feller_direction`] for every `δ` in [`FELLER_DELTAS`].
pub fn strong_feller_failure_probe(
    sys: &DelaySystem<f64>,
    t: f64,
    theta_star: f64,
    x: &Segment<f64>,
    quad: &QuadConfig,
) -> Result<FellerReport> {
    let d = sys.delay();
    if !(t > 0.0) {
        return Err(Error::Domain(format!("probe time must be positive, got {t}")));
    }
    if !(theta_star >= -d && theta_star < 0.0) {
        return Err(Error::Domain(format!("θ* = {theta_star} outside [-{d}, 0)")));
    }
    let n = sys.dim();
    let atom = DelayMeasure::zero(n, d)?.with_atom(theta_star, SquareMatrix::identity(n))?;
    let point_pf = PastFunctional::new(SquareMatrix::zeros(n), atom)?;
    let head_pf = PastFunctional::head_projection(n, d)?;
    let phi = Phibar::indicator(n);
    let point = OuContext::new(sys, &point_pf, t, quad)?;
    let control = OuContext::new(sys, &head_pf, t, quad)?;
    let h = feller_direction(x, t, theta_star)?;

    let p0 = point.apply(&phi, t, x)?;
    let c0 = control.apply(&phi, t, x)?;
    let mut rows = Vec::with_capacity(FELLER_DELTAS.len());
    for &delta in &FELLER_DELTAS {
        let xd = x.axpy(delta, &h)?;
        rows.push(FellerRow {
            delta,
            point_ratio: (point.apply(&phi, t, &xd)? - p0).abs() / delta,
            control_ratio: (control.apply(&phi, t, &xd)? - c0).abs() / delta,
        });
    }
    let at = rows.iter().find(|r| r.delta == 1e-3).expect("1e-3 is probed");
    let growth = at.point_ratio / at.control_ratio;
    let control_bound = 2.0 * sup_gradient(&control, t, &h)?;
    let point_bound = 2.0 * sup_gradient(&point, t, &h)?;
    let control_bounded = rows.iter().filter(|r| r.delta <= 1e-2).all(|r| r.control_ratio <= control_bound);
    let point_bounded = point_bound.is_finite() && rows.iter().all(|r| r.point_ratio <= point_bound);
    Ok(FellerReport {
        t,
        theta_star,
        deterministic: t + theta_star < 0.0,
        rows,
        growth,
        control_bound,
        point_bound,
        control_bounded,
        point_bounded,
    })
}
