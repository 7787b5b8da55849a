use std::sync::Arc;

use crate::delay_dynamics::{checked_steps, DelaySystem, Segment, Stepper};
use crate::error::{Error, Result};
use crate::functionals::{PastFunctional, Phibar};
use crate::kolmogorov::{picard_solve, sigma_eval, SigmaFunction, SolverConfig};
use crate::linalg::norm2;
use crate::mc::{estimate, par_map, Estimate};
use crate::rng::{family, fill_normals, path_rng};
use crate::systems;

use super::hamiltonian::{hamiltonian_nonlinearity, select_upsilon, ControlSet, RunningCost};

/// Minimize `E[∫_t^T g(u) ds + φ̄(𝒫X(T))]` subject to
/// `dX = (AX + Gu) dt + G dW`, `X(t) = x`, `u ∈ U`.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub sys: DelaySystem<f64>,
    pub pf: PastFunctional<f64>,
    pub set: ControlSet,
    pub cost: RunningCost,
    pub phibar: Phibar,
    pub horizon: f64,
    pub t0: f64,
    pub x0: Segment<f64>,
}

impl ControlProblem {
    pub fn validate(&self) -> Result<()> {
        let n = self.sys.dim();
        if self.set.dim() != n {
            return Err(Error::Dimension { expected: n, got: self.set.dim() });
        }
        if self.pf.dim() != n || self.x0.dim() != n {
            return Err(Error::Dimension { expected: n, got: self.pf.dim().min(self.x0.dim()) });
        }
        if !(self.horizon > self.t0) || self.t0 < 0.0 {
            return Err(Error::Domain(format!("need 0 ≤ t < T, got t = {}, T = {}", self.t0, self.horizon)));
        }
        let worst = self
            .set
            .samples(11)
            .iter()
            .map(|u| self.cost.eval(u).abs())
            .fold(0.0, f64::max);
        if !worst.is_finite() {
            return Err(Error::Invalid(format!("running cost {} is not finite on U", self.cost.name())));
        }
        Ok(())
    }

    /// Time to go `T − t`.
    pub fn remaining(&self) -> f64 {
        self.horizon - self.t0
    }
}

/// `y' = u`-type benchmark: S1, `g(u) = u²`, `U = [−1, 1]`, `φ̄ = tanh`, `T = 1`, `x = 0`.
pub fn s1_benchmark() -> Result<ControlProblem> {
    let (sys, pf) = systems::s1()?;
    let x0 = Segment::zeros(1, sys.delay(), sys.tail_grid())?;
    Ok(ControlProblem {
        sys,
        pf,
        set: ControlSet::interval(-1.0, 1.0)?,
        cost: RunningCost::quadratic(1.0),
        phibar: Phibar::tanh(1.0),
        horizon: 1.0,
        t0: 0.0,
        x0,
    })
}

/// Feedback `u(s, x) = Υ(∇v(s, x)G)` read from the reduced value function
/// `v(s, x) = w̄(T − s, 𝒫e^{(T−s)A}x)`.
#[derive(Debug, Clone)]
pub struct FeedbackPolicy {
    w: SigmaFunction,
    set: ControlSet,
    cost: RunningCost,
    horizon: f64,
}

impl FeedbackPolicy {
    /// Solves the HJB equation backwards from `T` over `[t, T]`.
    pub fn solve(problem: &ControlProblem, cfg: &SolverConfig) -> Result<Self> {
        problem.validate()?;
        let psi = hamiltonian_nonlinearity(&problem.cost, &problem.set);
        let cfg = SolverConfig {
            horizon: problem.remaining(),
            ..cfg.clone()
        };
        let w = picard_solve(&problem.sys, &problem.pf, &problem.phibar, &psi, &cfg)?;
        Ok(Self {
            w,
            set: problem.set.clone(),
            cost: problem.cost.clone(),
            horizon: problem.horizon,
        })
    }

    pub fn value_function(&self) -> &SigmaFunction {
        &self.w
    }

    /// `v(t, x)`.
    pub fn value(&self, problem: &ControlProblem, t: f64, x: &Segment<f64>) -> Result<f64> {
        Ok(sigma_eval(&self.w, &problem.sys, &problem.pf, self.horizon - t, x)?.value)
    }

    /// `u(t, x)` at a segment.
    pub fn control(&self, problem: &ControlProblem, t: f64, x: &Segment<f64>) -> Result<Vec<f64>> {
        let ev = sigma_eval(&self.w, &problem.sys, &problem.pf, self.horizon - t, x)?;
        Ok(select_upsilon(&self.cost, &self.set, &ev.grad_g))
    }

    /// `(sup_y |∇w̄|, sup |∂_t w̄|)` over the stored slices.
    pub fn lipschitz_fit(&self) -> (f64, f64) {
        let n = self.w.dim();
        let slices = self.w.slices();
        let mut ly = 0.0f64;
        let mut lt = 0.0f64;
        for (i, (t, v, g)) in slices.iter().enumerate() {
            for gj in g.chunks(n) {
                ly = ly.max(norm2(gj));
            }
            if i > 0 {
                let (tp, vp, _) = slices[i - 1];
                let dt = t - tp;
                if dt > 0.0 {
                    for (a, b) in v.iter().zip(vp) {
                        lt = lt.max((a - b).abs() / dt);
                    }
                }
            }
        }
        (ly, lt)
    }
}

/// Per-step data for the closed loop: kernels of `𝒫e^{τA}` on the segment
/// basis and the field `z = Mᵀ(τ)∇w̄(τ, ·)` on the grid, `τ = T − s_k`.
struct LoopTable {
    kernels: Vec<Vec<(usize, Vec<f64>)>>,
    fields: Vec<Vec<f64>>,
}

fn build_table(problem: &ControlProblem, policy: &FeedbackPolicy, dt: f64, steps: usize) -> Result<LoopTable> {
    let sys = &problem.sys;
    let n = sys.dim();
    let nodes = problem.x0.grid_size();
    let basis = (nodes + 2) * n;
    let compiled = problem.pf.compile(dt);
    // cols[b][i] = 𝒫e^{i·dt·A} e_b
    let cols: Vec<Vec<Vec<f64>>> = (0..basis)
        .map(|b| -> Result<Vec<Vec<f64>>> {
            let mut e = Segment::zeros(n, sys.delay(), nodes)?;
            if b < n {
                e.head_mut()[b] = 1.0;
            } else {
                let j = (b - n) / n;
                e.tail_point_mut(j)[(b - n) % n] = 1.0;
            }
            let mut st = Stepper::from_segment(sys, &e, dt)?;
            let mut out = Vec::with_capacity(steps + 1);
            for i in 0..=steps {
                let mut y = vec![0.0; n];
                compiled.apply_stepper(&st, &mut y);
                out.push(y);
                if i < steps {
                    st.step(None);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let w = &policy.w;
    let mut kernels = Vec::with_capacity(steps);
    let mut fields = Vec::with_capacity(steps);
    for k in 0..steps {
        let idx = steps - k;
        let tau = idx as f64 * dt;
        kernels.push(
            (0..basis)
                .filter(|&b| cols[b][idx].iter().any(|v| v.abs() > 1e-14))
                .map(|b| (b, cols[b][idx].clone()))
                .collect(),
        );
        let m = w.response(tau);
        let (_, grads) = w.slice(tau);
        fields.push(grads.chunks(n).flat_map(|g| m.vec_mul(g)).collect());
    }
    Ok(LoopTable { kernels, fields })
}

/// Where the control of a simulated path comes from.
pub enum ControlSource<'a> {
    Signal(&'a (dyn Fn(f64) -> Vec<f64> + Sync)),
    Policy(&'a FeedbackPolicy),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopConfig {
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    /// Number of leading paths whose trajectories are kept.
    pub record: usize,
    pub zero_noise: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            paths: 10_000,
            seed: 0,
            record: 0,
            zero_noise: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub s: f64,
    /// `𝒫X(s)`.
    pub y: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ClosedLoopResult {
    /// `Σ g(u_k) dt + φ̄(𝒫X(T))` per path.
    pub costs: Vec<f64>,
    /// `𝒫X(T)` per path.
    pub terminal: Vec<Vec<f64>>,
    pub records: Vec<Vec<StepRecord>>,
    pub controls_in_set: bool,
}

impl ClosedLoopResult {
    pub fn cost(&self) -> Estimate {
        estimate(&self.costs)
    }
}

fn run_paths(problem: &ControlProblem, source: &ControlSource<'_>, cfg: &LoopConfig) -> Result<ClosedLoopResult> {
    problem.validate()?;
    if cfg.paths == 0 {
        return Err(Error::Invalid("need at least one path".into()));
    }
    let steps = checked_steps(problem.remaining(), cfg.dt)?;
    let sys = &problem.sys;
    let n = sys.dim();
    Stepper::from_segment(sys, &problem.x0, cfg.dt)?;
    let table = match source {
        ControlSource::Policy(p) => Some(build_table(problem, p, cfg.dt, steps)?),
        ControlSource::Signal(_) => None,
    };
    let compiled = problem.pf.compile(cfg.dt);
    let dt = cfg.dt;
    type PathOut = (f64, Vec<f64>, Option<Vec<StepRecord>>, bool);
    let out: Vec<Result<PathOut>> = par_map(cfg.paths, |p| {
        let mut rng = path_rng(cfg.seed, family::CONTROL, p as u64);
        let mut st = Stepper::from_segment(sys, &problem.x0, dt)?;
        let keep = p < cfg.record;
        let mut rec = keep.then(|| Vec::with_capacity(steps));
        let mut running = 0.0;
        let mut inside = true;
        let mut dw = vec![0.0; n];
        let mut inc = vec![0.0; n];
        let mut y = vec![0.0; n];
        for k in 0..steps {
            let s = problem.t0 + k as f64 * dt;
            let u = match (source, &table) {
                (ControlSource::Signal(f), _) => f(s),
                (ControlSource::Policy(pol), Some(tb)) => {
                    let seg = st.segment()?;
                    let mut yt = vec![0.0; n];
                    for (b, col) in &tb.kernels[k] {
                        let xb = if *b < n { seg.head()[*b] } else { seg.tail()[*b - n] };
                        if xb != 0.0 {
                            for i in 0..n {
                                yt[i] += xb * col[i];
                            }
                        }
                    }
                    let mut z = vec![0.0; n];
                    pol.w.grid().interp_acc(&tb.fields[k], n, &yt, 1.0, &mut z);
                    select_upsilon(&pol.cost, &pol.set, &z)
                }
                _ => unreachable!(),
            };
            if u.len() != n {
                return Err(Error::Dimension { expected: n, got: u.len() });
            }
            inside &= problem.set.contains(&u, 1e-12);
            running += problem.cost.eval(&u) * dt;
            if let Some(r) = rec.as_mut() {
                compiled.apply_stepper(&st, &mut y);
                r.push(StepRecord { s, y: y.clone(), u: u.clone() });
            }
            if cfg.zero_noise {
                dw.iter_mut().for_each(|v| *v = 0.0);
            } else {
                fill_normals(&mut rng, &mut dw);
                dw.iter_mut().for_each(|v| *v *= dt.sqrt());
            }
            for i in 0..n {
                dw[i] += u[i] * dt;
            }
            inc.iter_mut().for_each(|v| *v = 0.0);
            sys.sigma().mul_vec_acc(&dw, &mut inc);
            st.step(Some(&inc));
        }
        compiled.apply_stepper(&st, &mut y);
        Ok((running + problem.phibar.eval(&y), y, rec, inside))
    });
    let mut res = ClosedLoopResult {
        costs: Vec::with_capacity(cfg.paths),
        terminal: Vec::with_capacity(cfg.paths),
        records: Vec::new(),
        controls_in_set: true,
    };
    for r in out {
        let (c, y, rec, inside) = r?;
        res.costs.push(c);
        res.terminal.push(y);
        if let Some(rec) = rec {
            res.records.push(rec);
        }
        res.controls_in_set &= inside;
    }
    Ok(res)
}

/// Simulates the closed loop under the feedback policy.
pub fn closed_loop_simulate(problem: &ControlProblem, policy: &FeedbackPolicy, cfg: &LoopConfig) -> Result<ClosedLoopResult> {
    run_paths(problem, &ControlSource::Policy(policy), cfg)
}

/// Monte Carlo cost `J(t, x; u)`, left-endpoint rule in time. The noise is
/// shared across sources for equal seeds.
pub fn evaluate_cost(problem: &ControlProblem, source: &ControlSource<'_>, cfg: &LoopConfig) -> Result<Estimate> {
    let res = run_paths(problem, source, cfg)?;
    if !res.controls_in_set {
        return Err(Error::Invalid("control left the admissible set".into()));
    }
    Ok(res.cost())
}

/// Open-loop comparison control.
#[derive(Clone)]
pub struct Candidate {
    pub name: String,
    pub signal: Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
}

impl Candidate {
    pub fn constant(u: Vec<f64>) -> Self {
        let name = format!("constant{u:?}");
        Self {
            name,
            signal: Arc::new(move |_| u.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationRow {
    pub name: String,
    pub cost: Estimate,
    /// `J − v`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationReport {
    pub value: f64,
    /// `2(dt·L_t + Δy·L_y)`.
    pub slack: f64,
    /// The feedback row comes first.
    pub rows: Vec<RelationRow>,
    pub pass: bool,
}

/// Checks `J(u) ≥ v` for every candidate and `J(u*) ≈ v` for the feedback,
/// each within `3·SE + slack`.
pub fn verify_fundamental_relation(
    problem: &ControlProblem,
    policy: &FeedbackPolicy,
    candidates: &[Candidate],
    cfg: &LoopConfig,
) -> Result<RelationReport> {
    let value = policy.value(problem, problem.t0, &problem.x0)?;
    let (ly, lt) = policy.lipschitz_fit();
    let dy = policy.w.grid().spacing().iter().cloned().fold(0.0, f64::max);
    let slack = 2.0 * (cfg.dt * lt + dy * ly);
    let fb = evaluate_cost(problem, &ControlSource::Policy(policy), cfg)?;
    let mut rows = vec![RelationRow {
        name: "feedback".into(),
        cost: fb,
        gap: fb.mean - value,
    }];
    let mut pass = (fb.mean - value).abs() <= 3.0 * fb.se + slack;
    for c in candidates {
        let f = |s: f64| (c.signal)(s);
        let e = evaluate_cost(problem, &ControlSource::Signal(&f), cfg)?;
        pass &= e.mean - value >= -(3.0 * e.se + slack);
        rows.push(RelationRow {
            name: c.name.clone(),
            cost: e,
            gap: e.mean - value,
        });
    }
    Ok(RelationReport { value, slack, rows, pass })
}
