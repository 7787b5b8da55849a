use crate::delay_dynamics::{DelaySystem, Stepper};
use crate::error::{Error, Result};
use crate::functionals::PastFunctional;
use crate::linalg::{sym, SquareMatrix};
use crate::quadrature::GaussLegendre;

/// Reduced covariance `bar Q_t^s = ∫_s^t M(r) M(r)ᵀ dr`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    pub value: SquareMatrix<f64>,
    pub s: f64,
    pub t: f64,
    pub quad_nodes: usize,
}

impl CovMatrix {
    pub fn lambda_min(&self) -> f64 {
        sym::lambda_min(&self.value)
    }

    pub fn lambda_max(&self) -> f64 {
        sym::SymEigen::new(&self.value).max()
    }

    /// Smallest Rayleigh quotient `⟨ξ, Qξ⟩` over a mesh of the unit sphere.
    pub fn sphere_min(&self) -> f64 {
        let q = &self.value;
        let rq = |xi: &[f64]| crate::linalg::dot(xi, &q.mul_vec(xi));
        match q.dim() {
            1 => q.get(0, 0),
            2 => (0..360)
                .map(|k| {
                    let a = std::f64::consts::PI * k as f64 / 360.0;
                    rq(&[a.cos(), a.sin()])
                })
                .fold(f64::INFINITY, f64::min),
            3 => {
                let m = 2000;
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..m)
                    .map(|k| {
                        let z = 1.0 - 2.0 * (k as f64 + 0.5) / m as f64;
                        let r = (1.0 - z * z).sqrt();
                        let a = golden * k as f64;
                        rq(&[r * a.cos(), r * a.sin(), z])
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            _ => self.lambda_min(),
        }
    }
}

/// `M(r) = 𝒫e^{rA}G` tabulated by Euler at `r = k·dt` and interpolated linearly.
#[derive(Debug, Clone)]
pub struct ResponseTable {
    n: usize,
    dt: f64,
    steps: usize,
    values: Vec<f64>,
}

impl ResponseTable {
    pub fn new(sys: &DelaySystem<f64>, pf: &PastFunctional<f64>, horizon: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !(horizon >= 0.0) {
            return Err(Error::Domain(format!("response table needs dt > 0 and horizon ≥ 0 (dt={dt}, horizon={horizon})")));
        }
        if pf.dim() != sys.dim() {
            return Err(Error::Dimension {
                expected: sys.dim(),
                got: pf.dim(),
            });
        }
        let n = sys.dim();
        let steps = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
        let compiled = pf.compile(dt);
        let mut values = vec![0.0; (steps + 1) * n * n];
        let mut out = vec![0.0; n];
        for j in 0..n {
            let head = sys.sigma().column(j);
            let mut st = Stepper::from_zero_past(sys, &head, dt)?;
            for k in 0..=steps {
                compiled.apply_stepper(&st, &mut out);
                for i in 0..n {
                    values[k * n * n + i * n + j] = out[i];
                }
                if k < steps {
                    st.step(None);
                }
            }
        }
        Ok(Self { n, dt, steps, values })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    #[inline]
    fn node(&self, k: usize) -> &[f64] {
        let nn = self.n * self.n;
        &self.values[k * nn..(k + 1) * nn]
    }

    fn locate(&self, r: f64) -> (usize, f64) {
        let u = (r / self.dt).max(0.0);
        let k = u.floor();
        if k as usize >= self.steps {
            return (self.steps - 1, 1.0_f64.min(u - (self.steps - 1) as f64));
        }
        (k as usize, u - k)
    }

    fn interp_into(&self, k: usize, lam: f64, out: &mut [f64]) {
        let a = self.node(k);
        let b = self.node(k + 1);
        for i in 0..out.len() {
            out[i] = a[i] + lam * (b[i] - a[i]);
        }
    }

    /// `M(r)`, linear between table nodes; `r` is clamped to the table horizon.
    pub fn at(&self, r: f64) -> SquareMatrix<f64> {
        let (k, lam) = self.locate(r);
        let mut m = vec![0.0; self.n * self.n];
        self.interp_into(k, lam, &mut m);
        SquareMatrix::from_row_major(self.n, m).expect("table node has n² entries")
    }

    /// `bar Q_t^s`, cell by cell with a Gauss-Legendre rule of order `quad_nodes`.
    pub fn covariance(&self, s: f64, t: f64, quad_nodes: usize) -> Result<CovMatrix> {
        if !(t > s) || s < 0.0 {
            return Err(Error::Domain(format!("covariance window needs 0 ≤ s < t, got s={s}, t={t}")));
        }
        if t > self.horizon() * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::Domain(format!("t = {t} beyond response table horizon {}", self.horizon())));
        }
        let gl = GaussLegendre::<f64>::new(quad_nodes)?;
        let n = self.n;
        let mut acc = vec![0.0; n * n];
        let mut m = vec![0.0; n * n];
        let k0 = ((s / self.dt).floor() as usize).min(self.steps - 1);
        let k1 = ((t / self.dt).ceil() as usize).min(self.steps);
        for k in k0..k1 {
            let a = s.max(k as f64 * self.dt);
            let b = t.min((k + 1) as f64 * self.dt);
            if b <= a {
                continue;
            }
            for (r, w) in gl.on_interval(a, b) {
                let lam = (r - k as f64 * self.dt) / self.dt;
                self.interp_into(k, lam, &mut m);
                for i in 0..n {
                    for j in 0..n {
                        let mut v = 0.0;
                        for l in 0..n {
                            v += m[i * n + l] * m[j * n + l];
                        }
                        acc[i * n + j] += w * v;
                    }
                }
            }
        }
        let value = SquareMatrix::from_row_major(n, acc)?.symmetrized();
        Ok(CovMatrix {
            value,
            s,
            t,
            quad_nodes,
        })
    }
}

/// `M(s)`: column `j` is `𝒫 e^{sA} G e_j`.
pub fn response_matrix(sys: &DelaySystem<f64>, pf: &PastFunctional<f64>, s: f64, dt: f64) -> Result<SquareMatrix<f64>> {
    if s < 0.0 {
        return Err(Error::Domain(format!("response time must be ≥ 0, got {s}")));
    }
    Ok(ResponseTable::new(sys, pf, s.max(dt), dt)?.at(s))
}

/// `bar Q_t^s` with the response tabulated at step `dt`.
pub fn covariance(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    s: f64,
    t: f64,
    quad_nodes: usize,
    dt: f64,
) -> Result<CovMatrix> {
    if !(t > s) || s < 0.0 {
        return Err(Error::Domain(format!("covariance window needs 0 ≤ s < t, got s={s}, t={t}")));
    }
    ResponseTable::new(sys, pf, t, dt)?.covariance(s, t, quad_nodes)
}
