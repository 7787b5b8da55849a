use crate::delay_dynamics::{DelaySystem, Segment};
use crate::error::{Error, Result};
use crate::functionals::{apply_reduction, PastFunctional, Phibar, ReducedDrift};
use crate::linalg::dot;
use crate::mc::Estimate;
use crate::quadrature::GaussLegendre;
use crate::smoothing::{mean_reduction, perturbed_apply, McConfig, OuContext, PerturbedEstimate, QuadConfig};

use super::nonlinearity::Nonlinearity;
use super::solver::{s_nodes, SigmaFunction};

/// Gauss-Legendre nodes per half of the time integral in the standalone Γ evaluators.
pub const GAMMA_S_ORDER: usize = 12;

/// `R̄(t, y) = ∫ φ̄(z + y) N(0, bar Q_t)(dz)`.
pub fn reduced_ou(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    phibar: &Phibar,
    t: f64,
    y: &[f64],
    quad: &QuadConfig,
) -> Result<f64> {
    if t <= 0.0 {
        return Ok(phibar.eval(y));
    }
    OuContext::new(sys, pf, t, quad)?.apply_reduced(phibar, t, y)
}

/// Steering direction for [`gamma_gradient`].
#[derive(Debug, Clone, Copy)]
pub enum Direction<'a> {
    Segment(&'a Segment<f64>),
    /// `k = G e_j`.
    GColumn(usize),
}

fn gamma_parts(
    ctx: &OuContext<'_>,
    g: &SigmaFunction,
    psi: &Nonlinearity,
    t: f64,
    y: &[f64],
    score: bool,
) -> Result<(f64, Vec<f64>)> {
    let n = y.len();
    if t > g.horizon() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("t = {t} beyond the horizon {} of g", g.horizon())));
    }
    let mut val = 0.0;
    let mut grad = vec![0.0; n];
    if t <= 0.0 {
        return Ok((val, grad));
    }
    let gl = GaussLegendre::<f64>::new(GAMMA_S_ORDER)?;
    for (s, w) in s_nodes(&gl, t) {
        let m = g.response(s);
        let f = |z: &[f64]| {
            let (v, gr) = g.eval_reduced(s, z);
            psi.eval(v, &m.vec_mul(&gr))
        };
        let law = ctx.gaussian(s, t)?;
        if law.is_degenerate() {
            val += w * f(y);
            continue;
        }
        if score {
            let (a, b) = law.expect_with_score(ctx.rule(), y, f)?;
            val += w * a;
            for c in 0..n {
                grad[c] += w * b[c];
            }
        } else {
            val += w * law.expect(ctx.rule(), y, f);
        }
    }
    Ok((val, grad))
}

/// `Γg(t, y) = ∫_0^t ∫ ψ(ḡ(s, z+y), ∇ḡ(s, z+y) M(s)) N(0, bar Q_t^s)(dz) ds`.
pub fn gamma_convolution(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    g: &SigmaFunction,
    psi: &Nonlinearity,
    t: f64,
    y: &[f64],
    quad: &QuadConfig,
) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    let ctx = OuContext::new(sys, pf, t, quad)?;
    Ok(gamma_parts(&ctx, g, psi, t, y, false)?.0)
}

/// Derivative of `x ↦ Γg(t, 𝒫e^{tA}x)` along `k`: the kernel
/// `⟨(bar Q_t^s)^{-1} z, 𝒫e^{tA}k⟩` integrated against the same measure.
#[allow(clippy::too_many_arguments)]
pub fn gamma_gradient(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    g: &SigmaFunction,
    psi: &Nonlinearity,
    t: f64,
    y: &[f64],
    k: Direction<'_>,
    quad: &QuadConfig,
) -> Result<f64> {
    if t > g.tbar() * (1.0 + 1e-12) {
        return Err(Error::Refused(format!("t = {t} exceeds the certified t̄ = {}", g.tbar())));
    }
    if t <= 0.0 {
        return Err(Error::Domain("the kernel gradient needs t > 0".into()));
    }
    let ctx = OuContext::new(sys, pf, t, quad)?;
    let v = match k {
        Direction::Segment(seg) => ctx.mean(seg, t)?,
        Direction::GColumn(j) => {
            if j >= sys.dim() {
                return Err(Error::Dimension { expected: sys.dim(), got: j });
            }
            ctx.response(t).column(j)
        }
    };
    let (_, grad) = gamma_parts(&ctx, g, psi, t, y, true)?;
    Ok(dot(&grad, &v))
}

/// `w(t, x)` and `∇w(t, x)G` read from a reduced solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaEval {
    pub value: f64,
    pub grad_g: Vec<f64>,
    pub y: Vec<f64>,
    /// `𝒫e^{tA}x` fell outside the space grid and was clamped.
    pub extrapolated: bool,
}

pub fn sigma_eval(
    w: &SigmaFunction,
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    t: f64,
    x: &Segment<f64>,
) -> Result<SigmaEval> {
    if t < 0.0 || t > w.horizon() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("t = {t} outside [0, {}]", w.horizon())));
    }
    let y = mean_reduction(sys, pf, x, t, w.dt())?;
    let (value, grad) = w.eval_reduced(t, &y);
    Ok(SigmaEval {
        value,
        grad_g: w.response(t).vec_mul(&grad),
        extrapolated: !w.grid().contains(&y),
        y,
    })
}

/// `v(t, x) = E φ̄(𝒫X^{t,x}(T))` for the perturbed equation.
#[allow(clippy::too_many_arguments)]
pub fn linear_solve(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    drift: &ReducedDrift,
    phibar: &Phibar,
    t: f64,
    horizon: f64,
    x: &Segment<f64>,
    mc: &McConfig,
) -> Result<PerturbedEstimate> {
    if t > horizon {
        return Err(Error::Domain(format!("t = {t} after the horizon {horizon}")));
    }
    if t == horizon {
        let e = Estimate {
            mean: phibar.eval(&apply_reduction(pf, x)),
            se: 0.0,
            paths: 0,
        };
        return Ok(PerturbedEstimate {
            direct: e,
            girsanov: e,
            weight_mean: Estimate { mean: 1.0, se: 0.0, paths: 0 },
            flagged: false,
        });
    }
    perturbed_apply(sys, pf, drift, phibar, horizon - t, x, mc)
}
