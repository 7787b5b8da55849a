use std::fmt;
use std::sync::Arc;

use super::{apply_reduction, PastFunctional};
use crate::delay_dynamics::Segment;

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Declared regularity of `φ̄`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Smoothness {
    Bounded,
    Lipschitz,
    C1,
}

impl Smoothness {
    pub fn label(self) -> &'static str {
        match self {
            Smoothness::Bounded => "bounded",
            Smoothness::Lipschitz => "bounded+Lipschitz",
            Smoothness::C1 => "bounded+C1",
        }
    }
}

/// Half-space indicator `1{⟨a, y⟩ > b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Terminal function `φ̄ : ℝⁿ → ℝ` with its declared smoothness and sup bound.
#[derive(Clone)]
pub struct Phibar {
    name: String,
    f: ScalarFn,
    grad: Option<GradFn>,
    smoothness: Smoothness,
    bound: f64,
    half_space: Option<HalfSpace>,
}

impl fmt::Debug for Phibar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Phibar")
            .field("name", &self.name)
            .field("smoothness", &self.smoothness)
            .field("bound", &self.bound)
            .field("half_space", &self.half_space)
            .finish()
    }
}

impl Phibar {
    pub fn new(
        name: impl Into<String>,
        smoothness: Smoothness,
        bound: f64,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            grad: None,
            smoothness,
            bound,
            half_space: None,
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant({c})"), Smoothness::C1, c.abs(), move |_| c)
            .with_gradient(|y| vec![0.0; y.len()])
    }

    /// `1{⟨a, y⟩ > b}`.
    pub fn half_space(normal: Vec<f64>, offset: f64) -> Self {
        let a = normal.clone();
        let mut p = Self::new("indicator", Smoothness::Bounded, 1.0, move |y| {
            let s: f64 = a.iter().zip(y).map(|(u, v)| u * v).sum();
            if s > offset {
                1.0
            } else {
                0.0
            }
        });
        p.half_space = Some(HalfSpace { normal, offset });
        p
    }

    /// `1{y₁ > 0}` on ℝⁿ.
    pub fn indicator(n: usize) -> Self {
        let mut a = vec![0.0; n];
        a[0] = 1.0;
        Self::half_space(a, 0.0)
    }

    /// `tanh(k y₁)`.
    pub fn tanh(k: f64) -> Self {
        Self::new(format!("tanh({k})"), Smoothness::C1, 1.0, move |y| (k * y[0]).tanh()).with_gradient(move |y| {
            let mut g = vec![0.0; y.len()];
            let c = (k * y[0]).cosh();
            g[0] = k / (c * c);
            g
        })
    }

    /// `cos(y₁)`.
    pub fn cos() -> Self {
        Self::new("cos", Smoothness::C1, 1.0, |y| y[0].cos()).with_gradient(|y| {
            let mut g = vec![0.0; y.len()];
            g[0] = -y[0].sin();
            g
        })
    }

    /// Cubic smoothstep of `y₁` rising from 0 at -1 to 1 at 1.
    pub fn smoothstep() -> Self {
        Self::new("smoothstep", Smoothness::C1, 1.0, |y| {
            let s = ((y[0] + 1.0) * 0.5).clamp(0.0, 1.0);
            s * s * (3.0 - 2.0 * s)
        })
        .with_gradient(|y| {
            let mut g = vec![0.0; y.len()];
            let s = (y[0] + 1.0) * 0.5;
            if (0.0..=1.0).contains(&s) {
                g[0] = 3.0 * s * (1.0 - s);
            }
            g
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, y: &[f64]) -> f64 {
        (self.f)(y)
    }

    pub fn gradient(&self, y: &[f64]) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g(y))
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn half_space_form(&self) -> Option<&HalfSpace> {
        self.half_space.as_ref()
    }

    /// Largest `|φ̄|` over `samples` divided by the declared bound (≤ 1 when consistent).
    pub fn bound_ratio(&self, samples: &[Vec<f64>]) -> f64 {
        let m = samples.iter().map(|y| self.eval(y).abs()).fold(0.0, f64::max);
        if self.bound > 0.0 {
            m / self.bound
        } else if m == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// `φ = φ̄ ∘ 𝒫`.
#[derive(Debug, Clone)]
pub struct Observable {
    pub pf: PastFunctional<f64>,
    pub phibar: Phibar,
}

impl Observable {
    pub fn new(pf: PastFunctional<f64>, phibar: Phibar) -> Self {
        Self { pf, phibar }
    }
}

pub fn observe(obs: &Observable, x: &Segment<f64>) -> f64 {
    obs.phibar.eval(&apply_reduction(&obs.pf, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_values() {
        assert_eq!(Phibar::constant(2.0).eval(&[5.0]), 2.0);
        let ind = Phibar::indicator(1);
        assert_eq!(ind.eval(&[-1.0]), 0.0);
        assert_eq!(ind.eval(&[0.0]), 0.0);
        assert_eq!(ind.eval(&[1e-9]), 1.0);
        let ss = Phibar::smoothstep();
        assert_eq!(ss.eval(&[-3.0]), 0.0);
        assert_eq!(ss.eval(&[3.0]), 1.0);
        assert!((ss.eval(&[0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for p in [Phibar::tanh(1.5), Phibar::cos(), Phibar::smoothstep()] {
            for y in [-0.7, 0.1, 0.9] {
                let h = 1e-6;
                let fd = (p.eval(&[y + h]) - p.eval(&[y - h])) / (2.0 * h);
                let g = p.gradient(&[y]).unwrap()[0];
                assert!((fd - g).abs() < 1e-7, "{}: {fd} vs {g}", p.name());
            }
        }
    }

    #[test]
    fn declared_bounds_hold_on_samples() {
        let samples: Vec<Vec<f64>> = (-50..=50).map(|k| vec![k as f64 * 0.2]).collect();
        for p in [Phibar::tanh(3.0), Phibar::cos(), Phibar::smoothstep(), Phibar::indicator(1)] {
            assert!(p.bound_ratio(&samples) <= 1.0);
        }
    }
}
