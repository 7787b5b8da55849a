use std::fmt;
use std::sync::Arc;

use crate::linalg::dot;

type PsiFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Whether `ψ` reads the value argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Full,
    GradientOnly,
}

/// Lipschitz nonlinearity `ψ(v, z)` of the semilinear equation, `z = ∇w G`.
#[derive(Clone)]
pub struct Nonlinearity {
    name: String,
    psi: PsiFn,
    lipschitz: f64,
    arity: Arity,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("arity", &self.arity)
            .finish()
    }
}

impl Nonlinearity {
    pub fn new(
        name: impl Into<String>,
        lipschitz: f64,
        arity: Arity,
        psi: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            psi: Arc::new(psi),
            lipschitz,
            arity,
        }
    }

    pub fn zero() -> Self {
        Self::new("zero", 0.0, Arity::Full, |_, _| 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), 0.0, Arity::Full, move |_, _| c)
    }

    /// `ψ(v, z) = c v`.
    pub fn linear_value(c: f64) -> Self {
        Self::new(format!("value({c})"), c.abs(), Arity::Full, move |v, _| c * v)
    }

    /// `ψ(v, z) = ⟨b, z⟩`: a constant drift `b` in noise units.
    pub fn gradient_linear(b: Vec<f64>) -> Self {
        let l = dot(&b, &b).sqrt();
        Self::new("gradient-linear", l, Arity::GradientOnly, move |_, z| dot(&b, z))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    #[inline]
    pub fn eval(&self, v: f64, z: &[f64]) -> f64 {
        (self.psi)(v, z)
    }

    /// Largest observed `|ψ(a) − ψ(b)| / (|v_a − v_b| + |z_a − z_b|)` over sample pairs.
    pub fn observed_lipschitz(&self, pairs: &[((f64, Vec<f64>), (f64, Vec<f64>))]) -> f64 {
        pairs
            .iter()
            .filter_map(|((va, za), (vb, zb))| {
                let dz: Vec<f64> = za.iter().zip(zb).map(|(a, b)| a - b).collect();
                let den = (va - vb).abs() + dot(&dz, &dz).sqrt();
                (den > 0.0).then(|| (self.eval(*va, za) - self.eval(*vb, zb)).abs() / den)
            })
            .fold(0.0, f64::max)
    }
}
