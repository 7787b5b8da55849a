use crate::delay_dynamics::{checked_steps, controlled_increment, DelaySystem, Segment, Stepper};
use crate::error::{Error, Result};
use crate::functionals::{PastFunctional, Phibar, ReducedDrift, Smoothness};
use crate::linalg::dot;
use crate::mc::{estimate, par_map, Estimate};
use crate::rng::{family, fill_normals, path_rng};

/// Monte Carlo settings for path estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub paths: usize,
    pub seed: u64,
    /// Euler step; must divide the horizon and the tail spacing.
    pub dt: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            paths: 100_000,
            seed: 0,
            dt: 0.01,
        }
    }
}

/// The two estimators of `P_t[φ](x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedEstimate {
    /// Average of `φ(X(t))` over paths of the perturbed equation.
    pub direct: Estimate,
    /// Average of `φ(Z(t)) exp V(t)` over OU paths.
    pub girsanov: Estimate,
    /// Average Girsanov weight (1 in expectation).
    pub weight_mean: Estimate,
    /// Set when the estimators differ by more than 4 combined standard errors.
    pub flagged: bool,
}

fn increments(n: usize, steps: usize, dt: f64, seed: u64, fam: u64, path: usize) -> Vec<f64> {
    let mut rng = path_rng(seed, fam, path as u64);
    let mut z = vec![0.0; n * steps];
    fill_normals(&mut rng, &mut z);
    let sq = dt.sqrt();
    z.iter_mut().for_each(|v| *v *= sq);
    z
}

fn check_pf(sys: &DelaySystem<f64>, pf: &PastFunctional<f64>) -> Result<()> {
    if pf.dim() != sys.dim() {
        return Err(Error::Dimension {
            expected: sys.dim(),
            got: pf.dim(),
        });
    }
    Ok(())
}

/// `φ̄(𝒫X(t))` along one path driven by `dw`, with `X` the Euler solution of
/// the perturbed equation started at `x`.
fn direct_path(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    drift: &ReducedDrift,
    phibar: &Phibar,
    x: &Segment<f64>,
    dt: f64,
    dw: &[f64],
) -> Result<f64> {
    let n = sys.dim();
    let steps = dw.len() / n;
    let cd = drift.pf.compile(dt);
    let co = pf.compile(dt);
    let mut st = Stepper::from_segment(sys, x, dt)?;
    let mut y = vec![0.0; n];
    let mut inc = vec![0.0; n];
    for k in 0..steps {
        cd.apply_stepper(&st, &mut y);
        let b = drift.eval(st.time(), &y);
        controlled_increment(sys, Some(&b), None, &dw[k * n..(k + 1) * n], dt, &mut inc);
        st.step(Some(&inc));
    }
    co.apply_stepper(&st, &mut y);
    Ok(phibar.eval(&y))
}

/// `(φ̄(𝒫Z(t)), exp V(t))` along one OU path.
fn girsanov_path(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    drift: &ReducedDrift,
    phibar: &Phibar,
    x: &Segment<f64>,
    dt: f64,
    dw: &[f64],
) -> Result<(f64, f64)> {
    let n = sys.dim();
    let steps = dw.len() / n;
    let cd = drift.pf.compile(dt);
    let co = pf.compile(dt);
    let mut st = Stepper::from_segment(sys, x, dt)?;
    let mut y = vec![0.0; n];
    let mut inc = vec![0.0; n];
    let mut log_w = 0.0;
    for k in 0..steps {
        let w = &dw[k * n..(k + 1) * n];
        cd.apply_stepper(&st, &mut y);
        let b = drift.eval(st.time(), &y);
        log_w += dot(&b, w) - 0.5 * dot(&b, &b) * dt;
        controlled_increment(sys, None, None, w, dt, &mut inc);
        st.step(Some(&inc));
    }
    co.apply_stepper(&st, &mut y);
    Ok((phibar.eval(&y), log_w.exp()))
}

/// `P_t[φ](x)` by direct simulation of the perturbed equation and by
/// Girsanov reweighting of OU paths (independent noise families).
#[allow(clippy::too_many_arguments)]
pub fn perturbed_apply(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    drift: &ReducedDrift,
    phibar: &Phibar,
    t: f64,
    x: &Segment<f64>,
    mc: &McConfig,
) -> Result<PerturbedEstimate> {
    check_pf(sys, pf)?;
    check_pf(sys, &drift.pf)?;
    let steps = checked_steps(t, mc.dt)?;
    let n = sys.dim();
    let direct: Vec<f64> = par_map(mc.paths, |p| {
        let dw = increments(n, steps, mc.dt, mc.seed, family::DIRECT, p);
        direct_path(sys, pf, drift, phibar, x, mc.dt, &dw)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let pairs: Vec<(f64, f64)> = par_map(mc.paths, |p| {
        let dw = increments(n, steps, mc.dt, mc.seed, family::GIRSANOV, p);
        girsanov_path(sys, pf, drift, phibar, x, mc.dt, &dw)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let weighted: Vec<f64> = pairs.iter().map(|(f, w)| f * w).collect();
    let weights: Vec<f64> = pairs.iter().map(|(_, w)| *w).collect();
    let direct = estimate(&direct);
    let girsanov = estimate(&weighted);
    let flagged = !direct.agrees_with(&girsanov, 4.0);
    Ok(PerturbedEstimate {
        direct,
        girsanov,
        weight_mean: estimate(&weights),
        flagged,
    })
}

/// Which estimator(s) [`perturbed_gradient`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientPath {
    Formula,
    FiniteDifference,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub formula: Option<Estimate>,
    pub fd: Option<Estimate>,
    pub delta: f64,
}

/// Values of `𝒫 e^{t_k A} h` at every Euler step `k = 0..=steps`.
fn deterministic_reductions(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    h: &Segment<f64>,
    dt: f64,
    steps: usize,
) -> Result<Vec<Vec<f64>>> {
    let c = pf.compile(dt);
    let mut st = Stepper::from_segment(sys, h, dt)?;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = vec![0.0; sys.dim()];
    for k in 0..=steps {
        c.apply_stepper(&st, &mut y);
        out.push(y.clone());
        if k < steps {
            st.step(None);
        }
    }
    Ok(out)
}

/// `∇P_t[φ](x)h`.
///
/// The formula path averages
/// `φ̄(𝒫X(t)) Σ_k ⟨∇B̄(t_k, 𝒫X(t_k)) 𝒫e^{t_k A}h, ΔW_k⟩ + ⟨∇φ̄(𝒫X(t)), 𝒫e^{tA}h⟩`
/// over paths of the perturbed equation; the finite-difference path takes a
/// central difference of the direct estimator with common noise.
#[allow(clippy::too_many_arguments)]
pub fn perturbed_gradient(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    drift: &ReducedDrift,
    phibar: &Phibar,
    t: f64,
    x: &Segment<f64>,
    h: &Segment<f64>,
    mc: &McConfig,
    path: GradientPath,
    delta: f64,
) -> Result<GradientEstimate> {
    check_pf(sys, pf)?;
    check_pf(sys, &drift.pf)?;
    let steps = checked_steps(t, mc.dt)?;
    let n = sys.dim();
    let want_formula = matches!(path, GradientPath::Formula | GradientPath::Both);
    let want_fd = matches!(path, GradientPath::FiniteDifference | GradientPath::Both);
    if want_formula && (phibar.smoothness() != Smoothness::C1 || !phibar.has_gradient()) {
        return Err(Error::Smoothness {
            name: phibar.name().to_string(),
            declared: phibar.smoothness().label(),
            needed: "bounded C¹ with a registered gradient",
        });
    }
    let formula = if want_formula {
        let vb = deterministic_reductions(sys, &drift.pf, h, mc.dt, steps)?;
        let vt = deterministic_reductions(sys, pf, h, mc.dt, steps)?.pop().expect("steps + 1 entries");
        let cd = drift.pf.compile(mc.dt);
        let co = pf.compile(mc.dt);
        let samples: Vec<f64> = par_map(mc.paths, |p| {
            let dw = increments(n, steps, mc.dt, mc.seed, family::GRADIENT, p);
            let mut st = Stepper::from_segment(sys, x, mc.dt)?;
            let mut y = vec![0.0; n];
            let mut inc = vec![0.0; n];
            let mut stoch = 0.0;
            for k in 0..steps {
                let w = &dw[k * n..(k + 1) * n];
                cd.apply_stepper(&st, &mut y);
                let b = drift.eval(st.time(), &y);
                let jv = drift.jacobian(st.time(), &y).mul_vec(&vb[k]);
                stoch += dot(&jv, w);
                controlled_increment(sys, Some(&b), None, w, mc.dt, &mut inc);
                st.step(Some(&inc));
            }
            co.apply_stepper(&st, &mut y);
            let grad = phibar.gradient(&y).expect("gradient checked above");
            Ok(phibar.eval(&y) * stoch + dot(&grad, &vt))
        })
        .into_iter()
        .collect::<Result<_>>()?;
        Some(estimate(&samples))
    } else {
        None
    };
    let fd = if want_fd {
        let xp = x.axpy(delta, h)?;
        let xm = x.axpy(-delta, h)?;
        let samples: Vec<f64> = par_map(mc.paths, |p| {
            let dw = increments(n, steps, mc.dt, mc.seed, family::GRADIENT, p);
            let a = direct_path(sys, pf, drift, phibar, &xp, mc.dt, &dw)?;
            let b = direct_path(sys, pf, drift, phibar, &xm, mc.dt, &dw)?;
            Ok((a - b) / (2.0 * delta))
        })
        .into_iter()
        .collect::<Result<_>>()?;
        Some(estimate(&samples))
    } else {
        None
    };
    Ok(GradientEstimate { formula, fd, delta })
}
