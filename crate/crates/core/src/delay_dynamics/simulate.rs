use crate::error::{Error, Result};
use crate::functionals::{apply_reduction, ReducedDrift};
use crate::rng::{family, fill_normals, path_rng};
use crate::scalar::Real;

use super::segment::Segment;
use super::stepper::{checked_steps, Stepper};
use super::system::DelaySystem;

/// Brownian increments `ΔW_k ~ N(0, dt I)` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath<T: Real = f64> {
    n: usize,
    dt: T,
    increments: Vec<T>,
    seed: u64,
    stream: u64,
}

impl<T: Real> BrownianPath<T> {
    /// Reproducible path `stream` under `seed`.
    pub fn generate(n: usize, steps: usize, dt: T, seed: u64, stream: u64) -> Self {
        let mut rng = path_rng(seed, family::NOISE, stream);
        let mut z = vec![0.0; n * steps];
        fill_normals(&mut rng, &mut z);
        let sq = dt.to_f64_lossy().sqrt();
        Self {
            n,
            dt,
            increments: z.into_iter().map(|v| T::lit(v * sq)).collect(),
            seed,
            stream,
        }
    }

    pub fn zeros(n: usize, steps: usize, dt: T) -> Self {
        Self {
            n,
            dt,
            increments: vec![T::zero(); n * steps],
            seed: 0,
            stream: 0,
        }
    }

    pub fn from_increments(n: usize, dt: T, increments: Vec<T>) -> Result<Self> {
        if n == 0 || !increments.len().is_multiple_of(n) {
            return Err(Error::Dimension {
                expected: n,
                got: increments.len(),
            });
        }
        Ok(Self {
            n,
            dt,
            increments,
            seed: 0,
            stream: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.increments.len() / self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    #[inline]
    pub fn increment(&self, k: usize) -> &[T] {
        &self.increments[k * self.n..(k + 1) * self.n]
    }
}

fn check_noise<T: Real>(sys: &DelaySystem<T>, horizon: T, dt: T, noise: &BrownianPath<T>) -> Result<usize> {
    let steps = checked_steps(horizon, dt)?;
    if noise.dim() != sys.dim() {
        return Err(Error::Dimension {
            expected: sys.dim(),
            got: noise.dim(),
        });
    }
    if noise.steps() != steps || ((noise.dt() - dt) / dt).abs() > T::lit(1e-12) {
        return Err(Error::Invalid(format!(
            "noise has {} steps of {}, simulation needs {steps} steps of {dt}",
            noise.steps(),
            noise.dt()
        )));
    }
    Ok(steps)
}

/// Euler-Maruyama for the OU process; returns `Z(t_k)` for every grid time.
pub fn simulate_ou<T: Real>(
    sys: &DelaySystem<T>,
    x: &Segment<T>,
    horizon: T,
    dt: T,
    noise: &BrownianPath<T>,
) -> Result<Vec<Segment<T>>> {
    let steps = check_noise(sys, horizon, dt, noise)?;
    let mut st = Stepper::from_segment(sys, x, dt)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(st.segment()?);
    let mut inc = vec![T::zero(); sys.dim()];
    for k in 0..steps {
        inc.iter_mut().for_each(|v| *v = T::zero());
        sys.sigma().mul_vec_acc(noise.increment(k), &mut inc);
        st.step(Some(&inc));
        out.push(st.segment()?);
    }
    Ok(out)
}

/// Feedback law evaluated on the current simulator state.
pub type FeedbackFn<'f> = dyn for<'s> Fn(f64, &Stepper<'s, f64>) -> Result<Vec<f64>> + Sync + 'f;

/// Control input of [`simulate_controlled`] in noise units (the head gains `σ u dt`).
pub enum Control<'f> {
    Zero,
    Signal(&'f (dyn Fn(f64) -> Vec<f64> + Sync)),
    Feedback(&'f FeedbackFn<'f>),
}

impl Control<'_> {
    /// Control value at the current state, or `None` for the zero control.
    pub fn value(&self, st: &Stepper<'_, f64>) -> Result<Option<Vec<f64>>> {
        match self {
            Control::Zero => Ok(None),
            Control::Signal(f) => Ok(Some(f(st.time()))),
            Control::Feedback(f) => f(st.time(), st).map(Some).map_err(|e| match e {
                Error::Feedback(m) => Error::Feedback(m),
                other => Error::Feedback(other.to_string()),
            }),
        }
    }
}

/// Head increment `σ((B̄ + u) dt + ΔW)` for one controlled Euler step.
pub(crate) fn controlled_increment(
    sys: &DelaySystem<f64>,
    b: Option<&[f64]>,
    u: Option<&[f64]>,
    dw: &[f64],
    dt: f64,
    out: &mut [f64],
) {
    let n = sys.dim();
    out.iter_mut().for_each(|v| *v = 0.0);
    if b.is_none() && u.is_none() {
        sys.sigma().mul_vec_acc(dw, out);
        return;
    }
    let mut v = vec![0.0; n];
    for i in 0..n {
        let mut drift = 0.0;
        if let Some(b) = b {
            drift += b[i];
        }
        if let Some(u) = u {
            drift += u[i];
        }
        v[i] = drift * dt + dw[i];
    }
    sys.sigma().mul_vec_acc(&v, out);
}

/// Euler-Maruyama for `dX = (AX + G(B(t,X) + u)) dt + G dW`.
pub fn simulate_controlled(
    sys: &DelaySystem<f64>,
    x: &Segment<f64>,
    drift: Option<&ReducedDrift>,
    control: &Control<'_>,
    horizon: f64,
    dt: f64,
    noise: &BrownianPath<f64>,
) -> Result<Vec<Segment<f64>>> {
    let steps = check_noise(sys, horizon, dt, noise)?;
    let n = sys.dim();
    let mut st = Stepper::from_segment(sys, x, dt)?;
    let compiled = drift.map(|d| d.pf.compile(dt));
    let mut out = Vec::with_capacity(steps + 1);
    out.push(st.segment()?);
    let mut y = vec![0.0; n];
    let mut inc = vec![0.0; n];
    for k in 0..steps {
        let b = match (drift, &compiled) {
            (Some(d), Some(c)) => {
                c.apply_stepper(&st, &mut y);
                Some(d.eval(st.time(), &y))
            }
            _ => None,
        };
        let u = control.value(&st)?;
        controlled_increment(sys, b.as_deref(), u.as_deref(), noise.increment(k), dt, &mut inc);
        st.step(Some(&inc));
        out.push(st.segment()?);
    }
    Ok(out)
}

/// `exp(Σ⟨B(s_k, Z(s_k)), ΔW_k⟩ − ½ Σ |B(s_k, Z(s_k))|² dt)` along an OU path.
pub fn girsanov_weight(
    drift: &ReducedDrift,
    ou_path: &[Segment<f64>],
    noise: &BrownianPath<f64>,
) -> Result<f64> {
    if ou_path.len() != noise.steps() + 1 {
        return Err(Error::Invalid(format!(
            "path has {} states, noise has {} increments",
            ou_path.len(),
            noise.steps()
        )));
    }
    let dt = noise.dt();
    let mut log_w = 0.0;
    for k in 0..noise.steps() {
        let b = drift.eval(k as f64 * dt, &apply_reduction(&drift.pf, &ou_path[k]));
        let dw = noise.increment(k);
        for i in 0..b.len() {
            log_w += b[i] * dw[i] - 0.5 * b[i] * b[i] * dt;
        }
    }
    Ok(log_w.exp())
}
