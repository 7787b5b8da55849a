use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kolmogorov::{Arity, Nonlinearity};
use crate::linalg::dot;

/// Compact admissible control set `U ⊂ ℝⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlSet {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Points kept in lexicographic order.
    Finite(Vec<Vec<f64>>),
}

impl ControlSet {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(vec![lo], vec![hi])
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::Dimension {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !a.is_finite() || !b.is_finite() || a > b) {
            return Err(Error::Invalid("control box needs finite bounds with lo ≤ hi".into()));
        }
        Ok(Self::Box { lo, hi })
    }

    pub fn finite(mut points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.first().map(Vec::len).unwrap_or(0);
        if n == 0 || points.iter().any(|p| p.len() != n || p.iter().any(|v| !v.is_finite())) {
            return Err(Error::Invalid("finite control set needs nonempty points of one dimension".into()));
        }
        points.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
        points.dedup();
        Ok(Self::Finite(points))
    }

    pub fn dim(&self) -> usize {
        match self {
            ControlSet::Box { lo, .. } => lo.len(),
            ControlSet::Finite(p) => p[0].len(),
        }
    }

    pub fn contains(&self, u: &[f64], tol: f64) -> bool {
        match self {
            ControlSet::Box { lo, hi } => u
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *v >= a - tol && *v <= b + tol),
            ControlSet::Finite(p) => p
                .iter()
                .any(|q| q.iter().zip(u).all(|(a, b)| (a - b).abs() <= tol)),
        }
    }

    /// `max_{u∈U} |u|`.
    pub fn max_norm(&self) -> f64 {
        match self {
            ControlSet::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| a.abs().max(b.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            ControlSet::Finite(p) => p.iter().map(|q| dot(q, q).sqrt()).fold(0.0, f64::max),
        }
    }

    /// Sample points (grid for boxes), in lexicographic order.
    pub fn samples(&self, per_axis: usize) -> Vec<Vec<f64>> {
        match self {
            ControlSet::Finite(p) => p.clone(),
            ControlSet::Box { lo, hi } => {
                let n = lo.len();
                let m = per_axis.max(2);
                let total = m.pow(n as u32);
                (0..total)
                    .map(|mut code| {
                        let mut u = vec![0.0; n];
                        for c in (0..n).rev() {
                            let i = code % m;
                            code /= m;
                            u[c] = lo[c] + (hi[c] - lo[c]) * i as f64 / (m - 1) as f64;
                        }
                        u
                    })
                    .collect()
            }
        }
    }
}

type CostFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Running cost `g(u)`.
#[derive(Clone)]
pub struct RunningCost {
    name: String,
    g: CostFn,
    quadratic: Option<f64>,
}

impl fmt::Debug for RunningCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RunningCost")
            .field("name", &self.name)
            .field("quadratic", &self.quadratic)
            .finish()
    }
}

impl RunningCost {
    pub fn new(name: impl Into<String>, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            g: Arc::new(g),
            quadratic: None,
        }
    }

    /// `g(u) = a|u|²` with the exact minimizer on boxes registered.
    pub fn quadratic(a: f64) -> Self {
        Self {
            name: format!("quadratic({a})"),
            g: Arc::new(move |u: &[f64]| a * dot(u, u)),
            quadratic: (a > 0.0).then_some(a),
        }
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, u: &[f64]) -> f64 {
        (self.g)(u)
    }
}

fn objective(g: &RunningCost, z: &[f64], u: &[f64]) -> f64 {
    g.eval(u) + dot(z, u)
}

fn golden(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if b - a < 1e-13 * (1.0 + a.abs() + b.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

/// A minimizer of `g(u) + ⟨z, u⟩` over `U`; ties go to the lexicographically smallest point.
pub fn select_upsilon(g: &RunningCost, set: &ControlSet, z: &[f64]) -> Vec<f64> {
    match set {
        ControlSet::Box { lo, hi } => {
            if let Some(a) = g.quadratic {
                return z
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(zi, (l, h))| (-zi / (2.0 * a)).clamp(*l, *h))
                    .collect();
            }
            let n = lo.len();
            let per = match n {
                1 => 201,
                2 => 41,
                _ => 15,
            };
            let mut best = lo.clone();
            let mut fb = f64::INFINITY;
            for u in set.samples(per) {
                let f = objective(g, z, &u);
                if f < fb {
                    fb = f;
                    best = u;
                }
            }
            let sweeps = if n == 1 { 1 } else { 4 };
            for _ in 0..sweeps {
                for c in 0..n {
                    let h = (hi[c] - lo[c]) / (per - 1) as f64;
                    let (a, b) = ((best[c] - h).max(lo[c]), (best[c] + h).min(hi[c]));
                    if b <= a {
                        continue;
                    }
                    let mut trial = best.clone();
                    let x = golden(a, b, |v| {
                        let mut u = best.clone();
                        u[c] = v;
                        objective(g, z, &u)
                    });
                    trial[c] = x;
                    let f = objective(g, z, &trial);
                    if f < fb {
                        fb = f;
                        best = trial;
                    }
                }
            }
            best
        }
        ControlSet::Finite(points) => {
            let mut best = &points[0];
            let mut fb = objective(g, z, best);
            for u in &points[1..] {
                let f = objective(g, z, u);
                if f < fb - 1e-12 * (1.0 + fb.abs()) {
                    fb = f;
                    best = u;
                }
            }
            best.clone()
        }
    }
}

/// `ψ(z) = inf_{u∈U} g(u) + ⟨z, u⟩`.
pub fn hamiltonian(g: &RunningCost, set: &ControlSet, z: &[f64]) -> f64 {
    objective(g, z, &select_upsilon(g, set, z))
}

/// `ψ` as a gradient-only nonlinearity with the envelope Lipschitz bound `max_U |u|`.
pub fn hamiltonian_nonlinearity(g: &RunningCost, set: &ControlSet) -> Nonlinearity {
    let (g2, s2) = (g.clone(), set.clone());
    Nonlinearity::new(format!("hamiltonian[{}]", g.name()), set.max_norm(), Arity::GradientOnly, move |_, z| {
        hamiltonian(&g2, &s2, z)
    })
}
