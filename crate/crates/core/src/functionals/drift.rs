use std::fmt;
use std::sync::Arc;

use super::{apply_reduction, PastFunctional};
use crate::delay_dynamics::Segment;
use crate::linalg::SquareMatrix;

type DriftFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
type JacFn = Arc<dyn Fn(f64, &[f64]) -> SquareMatrix<f64> + Send + Sync>;

/// Drift `B(t, x) = B̄(t, 𝒫x)` in noise units (the head gains `σ B dt`).
#[derive(Clone)]
pub struct ReducedDrift {
    pub pf: PastFunctional<f64>,
    name: String,
    bbar: DriftFn,
    jacobian: Option<JacFn>,
    lipschitz: f64,
    bound: f64,
}

impl fmt::Debug for ReducedDrift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReducedDrift")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("bound", &self.bound)
            .finish()
    }
}

impl ReducedDrift {
    pub fn new(
        pf: PastFunctional<f64>,
        name: impl Into<String>,
        lipschitz: f64,
        bound: f64,
        bbar: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            pf,
            name: name.into(),
            bbar: Arc::new(bbar),
            jacobian: None,
            lipschitz,
            bound,
        }
    }

    pub fn with_jacobian(mut self, j: impl Fn(f64, &[f64]) -> SquareMatrix<f64> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn zero(pf: PastFunctional<f64>) -> Self {
        let n = pf.dim();
        Self::new(pf, "zero", 0.0, 0.0, move |_, _| vec![0.0; n]).with_jacobian(move |_, _| SquareMatrix::zeros(n))
    }

    pub fn constant(pf: PastFunctional<f64>, b: Vec<f64>) -> Self {
        let n = pf.dim();
        let bound = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self::new(pf, "constant", 0.0, bound, move |_, _| b.clone()).with_jacobian(move |_, _| SquareMatrix::zeros(n))
    }

    /// `B̄(t, y) = y` (unbounded; for tests of the composition only).
    pub fn identity(pf: PastFunctional<f64>) -> Self {
        let n = pf.dim();
        Self::new(pf, "identity", 1.0, f64::INFINITY, |_, y| y.to_vec())
            .with_jacobian(move |_, _| SquareMatrix::identity(n))
    }

    /// Componentwise `tanh`.
    pub fn tanh(pf: PastFunctional<f64>) -> Self {
        let n = pf.dim();
        Self::new(pf, "tanh", 1.0, (n as f64).sqrt(), |_, y| y.iter().map(|v| v.tanh()).collect()).with_jacobian(
            |_, y| {
                let d: Vec<f64> = y.iter().map(|v| 1.0 / (v.cosh() * v.cosh())).collect();
                SquareMatrix::from_diagonal(&d)
            },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    #[inline]
    pub fn eval(&self, t: f64, y: &[f64]) -> Vec<f64> {
        (self.bbar)(t, y)
    }

    /// `∂B̄/∂y`, by central differences when no Jacobian was registered.
    pub fn jacobian(&self, t: f64, y: &[f64]) -> SquareMatrix<f64> {
        if let Some(j) = &self.jacobian {
            return j(t, y);
        }
        let n = y.len();
        let mut m = SquareMatrix::zeros(n);
        let mut yp = y.to_vec();
        for j in 0..n {
            let h = 1e-6 * (1.0 + y[j].abs());
            yp[j] = y[j] + h;
            let fp = self.eval(t, &yp);
            yp[j] = y[j] - h;
            let fm = self.eval(t, &yp);
            yp[j] = y[j];
            for i in 0..n {
                m.set(i, j, (fp[i] - fm[i]) / (2.0 * h));
            }
        }
        m
    }

    /// Largest observed `|B̄(t,y) − B̄(t,y')| / |y − y'|` over sample pairs.
    pub fn observed_lipschitz(&self, t: f64, pairs: &[(Vec<f64>, Vec<f64>)]) -> f64 {
        pairs
            .iter()
            .filter_map(|(a, b)| {
                let dy = crate::linalg::norm2(&a.iter().zip(b).map(|(u, v)| u - v).collect::<Vec<_>>());
                if dy == 0.0 {
                    return None;
                }
                let fa = self.eval(t, a);
                let fb = self.eval(t, b);
                let df = crate::linalg::norm2(&fa.iter().zip(&fb).map(|(u, v)| u - v).collect::<Vec<_>>());
                Some(df / dy)
            })
            .fold(0.0, f64::max)
    }
}

/// `B(t, x) = B̄(t, 𝒫x)`.
pub fn reduced_drift_eval(drift: &ReducedDrift, t: f64, x: &Segment<f64>) -> Vec<f64> {
    drift.eval(t, &apply_reduction(&drift.pf, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_drift_is_one_lipschitz_on_samples() {
        let pf = PastFunctional::head_projection(1, 1.0).unwrap();
        let b = ReducedDrift::tanh(pf);
        let pairs: Vec<_> = (0..200)
            .map(|k| {
                let a = -3.0 + 0.03 * k as f64;
                (vec![a], vec![a + 0.013])
            })
            .collect();
        assert!(b.observed_lipschitz(0.0, &pairs) <= b.lipschitz() + 1e-12);
        let j = b.jacobian(0.0, &[0.3]);
        assert!((j.get(0, 0) - 1.0 / 0.3f64.cosh().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn composition_with_head_projection() {
        let pf = PastFunctional::head_projection(1, 1.0).unwrap();
        let x = Segment::constant(vec![0.4], &[2.0], 1.0, 4).unwrap();
        assert_eq!(reduced_drift_eval(&ReducedDrift::identity(pf.clone()), 0.0, &x), vec![0.4]);
        assert_eq!(reduced_drift_eval(&ReducedDrift::zero(pf), 0.0, &x), vec![0.0]);
    }
}
