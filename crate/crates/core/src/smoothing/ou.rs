use crate::delay_dynamics::{DelaySystem, Segment, Stepper};
use crate::error::{Error, Result};
use crate::functionals::{apply_reduction, PastFunctional, Phibar, Smoothness};
use crate::linalg::{norm2, SquareMatrix};

use super::gaussian::{GaussRule, Gaussian, QuadConfig};
use super::response::{CovMatrix, ResponseTable};

/// Everything needed to evaluate `R_t[φ̄∘𝒫]` for one system and reduction map
/// up to a horizon: the response table and the Gaussian rule.
#[derive(Debug, Clone)]
pub struct OuContext<'a> {
    sys: &'a DelaySystem<f64>,
    pf: &'a PastFunctional<f64>,
    table: ResponseTable,
    rule: GaussRule,
    quad: QuadConfig,
}

impl<'a> OuContext<'a> {
    pub fn new(sys: &'a DelaySystem<f64>, pf: &'a PastFunctional<f64>, horizon: f64, quad: &QuadConfig) -> Result<Self> {
        let table = ResponseTable::new(sys, pf, horizon, quad.dt)?;
        let rule = GaussRule::for_dim(sys.dim(), quad)?;
        Ok(Self {
            sys,
            pf,
            table,
            rule,
            quad: quad.clone(),
        })
    }

    pub fn system(&self) -> &'a DelaySystem<f64> {
        self.sys
    }

    pub fn functional(&self) -> &'a PastFunctional<f64> {
        self.pf
    }

    pub fn table(&self) -> &ResponseTable {
        &self.table
    }

    pub fn rule(&self) -> &GaussRule {
        &self.rule
    }

    pub fn quad(&self) -> &QuadConfig {
        &self.quad
    }

    pub fn horizon(&self) -> f64 {
        self.table.horizon()
    }

    pub fn response(&self, r: f64) -> SquareMatrix<f64> {
        self.table.at(r)
    }

    pub fn covariance(&self, s: f64, t: f64) -> Result<CovMatrix> {
        self.table.covariance(s, t, self.quad.quad_nodes)
    }

    /// `N(0, bar Q_t^s)`; the empty window gives the point mass.
    pub fn gaussian(&self, s: f64, t: f64) -> Result<Gaussian> {
        if t <= s {
            return Ok(Gaussian::point_mass(self.sys.dim()));
        }
        Ok(Gaussian::new(&self.covariance(s, t)?.value, self.quad.floor))
    }

    /// `𝒫e^{tA}x`, read from the Euler flow and linear in `t` between steps.
    pub fn mean(&self, x: &Segment<f64>, t: f64) -> Result<Vec<f64>> {
        mean_reduction(self.sys, self.pf, x, t, self.quad.dt)
    }

    /// `R̄(t, y) = ∫ φ̄(z + y) N(0, bar Q_t)(dz)`.
    pub fn apply_reduced(&self, phibar: &Phibar, t: f64, y: &[f64]) -> Result<f64> {
        if t <= 0.0 {
            return Ok(phibar.eval(y));
        }
        let g = self.gaussian(0.0, t)?;
        if let Some(hs) = phibar.half_space_form() {
            return Ok(g.half_space_prob(hs, y, self.quad.floor));
        }
        if g.is_degenerate() && phibar.smoothness() == Smoothness::Bounded {
            return Err(Error::Refused(format!(
                "covariance is singular (λ_min = {:e}) and '{}' is only declared bounded",
                g.lambda_min(),
                phibar.name()
            )));
        }
        Ok(g.expect(&self.rule, y, |z| phibar.eval(z)))
    }

    /// `∇_y R̄(t, y) · v`.
    pub fn gradient_reduced(&self, phibar: &Phibar, t: f64, y: &[f64], v: &[f64]) -> Result<f64> {
        if t <= 0.0 {
            return Err(Error::Domain("the gradient representation needs t > 0".into()));
        }
        let g = self.gaussian(0.0, t)?;
        if let Some(hs) = phibar.half_space_form() {
            return g.half_space_grad(hs, y, v, self.quad.floor);
        }
        g.expect_score(&self.rule, y, v, |z| phibar.eval(z))
    }

    pub fn apply(&self, phibar: &Phibar, t: f64, x: &Segment<f64>) -> Result<f64> {
        if t <= 0.0 {
            return Ok(phibar.eval(&apply_reduction(self.pf, x)));
        }
        let y = self.mean(x, t)?;
        self.apply_reduced(phibar, t, &y)
    }

    /// `∇R_t[φ](x) h`.
    pub fn gradient(&self, phibar: &Phibar, t: f64, x: &Segment<f64>, h: &Segment<f64>) -> Result<f64> {
        let y = self.mean(x, t)?;
        let v = self.mean(h, t)?;
        self.gradient_reduced(phibar, t, &y, &v)
    }

    /// `‖bar Q_t^{-1/2} 𝒫e^{tA}η‖`.
    pub fn steering_energy(&self, t: f64, eta: &Segment<f64>) -> Result<f64> {
        let v = self.mean(eta, t)?;
        if norm2(&v) == 0.0 {
            return Ok(0.0);
        }
        let q = self.covariance(0.0, t)?;
        let (_, inv_sqrt, _) = crate::linalg::sym::factor_pd(&q.value, self.quad.floor)?;
        Ok(norm2(&inv_sqrt.mul_vec(&v)))
    }
}

/// `𝒫e^{tA}x` by Euler with a step dividing the tail spacing of `x` and close
/// to `dt`; linear interpolation in time between steps.
pub fn mean_reduction(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    x: &Segment<f64>,
    t: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    if t < 0.0 {
        return Err(Error::Domain(format!("time must be ≥ 0, got {t}")));
    }
    let h = x.spacing();
    let m = (h / dt - 1e-9).ceil().max(1.0);
    let step = h / m;
    let u = t / step;
    let mut lo = u.floor();
    if (u - u.round()).abs() < 1e-9 {
        lo = u.round();
    }
    let lam = (u - lo).max(0.0);
    let lo = lo as usize;
    let compiled = pf.compile(step);
    let mut st = Stepper::from_segment(sys, x, step)?;
    for _ in 0..lo {
        st.step(None);
    }
    let n = sys.dim();
    let mut a = vec![0.0; n];
    compiled.apply_stepper(&st, &mut a);
    if lam < 1e-9 {
        return Ok(a);
    }
    st.step(None);
    let mut b = vec![0.0; n];
    compiled.apply_stepper(&st, &mut b);
    Ok(a.iter().zip(&b).map(|(p, q)| p + lam * (q - p)).collect())
}

/// `R_t[φ](x) = ∫ φ̄(z + 𝒫e^{tA}x) N(0, bar Q_t)(dz)`.
pub fn ou_apply(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    phibar: &Phibar,
    t: f64,
    x: &Segment<f64>,
    quad: &QuadConfig,
) -> Result<f64> {
    OuContext::new(sys, pf, t, quad)?.apply(phibar, t, x)
}

/// `∇R_t[φ](x)h = E[φ̄(Q^{1/2}ζ + 𝒫e^{tA}x) ⟨Q^{-1/2}𝒫e^{tA}h, ζ⟩]`.
pub fn ou_gradient(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    phibar: &Phibar,
    t: f64,
    x: &Segment<f64>,
    h: &Segment<f64>,
    quad: &QuadConfig,
) -> Result<f64> {
    OuContext::new(sys, pf, t, quad)?.gradient(phibar, t, x, h)
}

/// Minimal energy `𝓔(t, 𝒫e^{tA}η) = ‖bar Q_t^{-1/2}𝒫e^{tA}η‖`.
pub fn steering_energy(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    t: f64,
    eta: &Segment<f64>,
    quad: &QuadConfig,
) -> Result<f64> {
    OuContext::new(sys, pf, t, quad)?.steering_energy(t, eta)
}
