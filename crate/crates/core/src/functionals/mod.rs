//! Reduction maps `𝒫x = α₀x₀ + ∫ x₁ dμ̄`, observables `φ̄∘𝒫` and reduced drifts.

mod drift;
mod observable;

pub use drift::{reduced_drift_eval, ReducedDrift};
pub use observable::{observe, HalfSpace, Observable, Phibar, Smoothness};

use crate::delay_dynamics::measure::CompiledMeasure;
use crate::delay_dynamics::track::Track;
use crate::delay_dynamics::{DelayMeasure, Segment, Stepper};
use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::scalar::Real;

/// Non-degeneracy regime claimed by a reduction map.
#[derive(Debug, Clone, PartialEq)]
pub enum Regime<T: Real = f64> {
    /// `α₀` invertible: covariance grows like `t`.
    A1,
    /// `α₀ = 0` with invertible density limit `f₀` at 0: covariance grows like `t³`.
    A2 { f0: SquareMatrix<T> },
    /// Neither condition could be verified.
    Degenerate,
}

impl<T: Real> Regime<T> {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::A1 => "A1",
            Regime::A2 { .. } => "A2",
            Regime::Degenerate => "degenerate",
        }
    }
}

/// The reduction map `𝒫` with atom `α₀` at 0 and tail measure `μ̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct PastFunctional<T: Real = f64> {
    alpha0: SquareMatrix<T>,
    tail: DelayMeasure<T>,
    regime: Regime<T>,
}

impl<T: Real> PastFunctional<T> {
    pub fn new(alpha0: SquareMatrix<T>, tail: DelayMeasure<T>) -> Result<Self> {
        if alpha0.dim() != tail.dim() {
            return Err(Error::Dimension {
                expected: alpha0.dim(),
                got: tail.dim(),
            });
        }
        if !alpha0.is_finite() {
            return Err(Error::Invalid("alpha0 must be finite".into()));
        }
        if tail.has_atom_at_zero() {
            return Err(Error::Invalid(
                "the tail measure of a reduction map has no atom at 0; the mass at 0 belongs in alpha0".into(),
            ));
        }
        let regime = classify(&alpha0, &tail);
        Ok(Self { alpha0, tail, regime })
    }

    /// `𝒫x = x₀`.
    pub fn head_projection(n: usize, d: T) -> Result<Self> {
        Self::new(SquareMatrix::identity(n), DelayMeasure::zero(n, d)?)
    }

    pub fn alpha0(&self) -> &SquareMatrix<T> {
        &self.alpha0
    }

    pub fn tail_measure(&self) -> &DelayMeasure<T> {
        &self.tail
    }

    pub fn dim(&self) -> usize {
        self.alpha0.dim()
    }

    pub fn regime(&self) -> &Regime<T> {
        &self.regime
    }

    pub(crate) fn compile(&self, dt: T) -> CompiledFunctional<T> {
        CompiledFunctional {
            alpha0: self.alpha0.clone(),
            measure: self.tail.compile(dt),
            scratch_len: 2 * self.dim(),
        }
    }
}

fn classify<T: Real>(alpha0: &SquareMatrix<T>, tail: &DelayMeasure<T>) -> Regime<T> {
    if alpha0.condition_number().to_f64_lossy() < 1e12 {
        return Regime::A1;
    }
    if !alpha0.is_zero() || tail.density_cells().is_empty() {
        return Regime::Degenerate;
    }
    let cell = tail.delay() / T::from_usize_lossy(tail.density_cells().len());
    let near = tail.cesaro_mean(cell * T::lit(0.25));
    let half = tail.cesaro_mean(cell * T::lit(0.5));
    let gap = near.sub(&half).norm_inf().to_f64_lossy();
    let scale = near.norm_inf().to_f64_lossy();
    let atom_near_zero = tail
        .atoms()
        .iter()
        .any(|a| a.theta > -cell * T::lit(0.5) && !a.weight.is_zero());
    if scale > 0.0 && gap <= 1e-9 * scale && !atom_near_zero && near.condition_number().to_f64_lossy() < 1e12 {
        Regime::A2 { f0: near }
    } else {
        Regime::Degenerate
    }
}

/// `𝒫` ready to be applied to paths sampled with a fixed step.
#[derive(Debug, Clone)]
pub(crate) struct CompiledFunctional<T: Real> {
    alpha0: SquareMatrix<T>,
    measure: CompiledMeasure<T>,
    scratch_len: usize,
}

impl<T: Real> CompiledFunctional<T> {
    pub(crate) fn apply_track(&self, track: &Track<T>, k: i64, head: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|v| *v = T::zero());
        self.alpha0.mul_vec_acc(head, out);
        if !self.measure.is_empty() {
            let mut scratch = vec![T::zero(); self.scratch_len];
            self.measure.apply_acc(track, k, out, &mut scratch);
        }
    }

    /// `𝒫` of the current state of a stepper, read on the step grid.
    pub(crate) fn apply_stepper(&self, st: &Stepper<'_, T>, out: &mut [T]) {
        self.apply_track(st.track(), st.index(), st.current(), out);
    }
}

/// `𝒫x`: atoms by tail interpolation, density by the exact integral of the
/// piecewise-linear tail (trapezoid on aligned cells).
pub fn apply_reduction<T: Real>(pf: &PastFunctional<T>, x: &Segment<T>) -> Vec<T> {
    let c = pf.compile(x.spacing());
    let tr = Track::from_segment(x);
    let mut out = vec![T::zero(); pf.dim()];
    c.apply_track(&tr, 0, x.head(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_pf() -> PastFunctional<f64> {
        let mu = DelayMeasure::zero(1, 1.0)
            .unwrap()
            .with_constant_density(SquareMatrix::identity(1))
            .unwrap();
        PastFunctional::new(SquareMatrix::zeros(1), mu).unwrap()
    }

    #[test]
    fn head_projection_returns_head() {
        let pf = PastFunctional::<f64>::head_projection(2, 1.0).unwrap();
        let x = Segment::constant(vec![3.0, -1.0], &[7.0, 7.0], 1.0, 5).unwrap();
        assert_eq!(apply_reduction(&pf, &x), vec![3.0, -1.0]);
        assert_eq!(pf.regime(), &Regime::A1);
    }

    #[test]
    fn mean_of_constant_tail() {
        let pf = mean_pf();
        let x = Segment::constant(vec![100.0], &[2.5], 1.0, 7).unwrap();
        assert!((apply_reduction(&pf, &x)[0] - 2.5).abs() < 1e-14);
        assert!(matches!(pf.regime(), Regime::A2 { .. }));
    }

    #[test]
    fn atom_on_linear_tail() {
        let mu = DelayMeasure::zero(1, 1.0)
            .unwrap()
            .with_atom(-0.5, SquareMatrix::scalar(1, 2.0))
            .unwrap();
        let pf = PastFunctional::new(SquareMatrix::identity(1), mu).unwrap();
        let x: Segment = Segment::from_fn(vec![1.0], 1.0, 10, |th| vec![th]).unwrap();
        assert!(apply_reduction(&pf, &x)[0].abs() < 1e-15);
    }

    #[test]
    fn atom_at_zero_rejected() {
        let mu = DelayMeasure::zero(1, 1.0)
            .unwrap()
            .with_atom(0.0, SquareMatrix::identity(1))
            .unwrap();
        assert!(PastFunctional::new(SquareMatrix::identity(1), mu).is_err());
    }

    #[test]
    fn refinement_converges_at_second_order() {
        let pf = mean_pf();
        let exact = (1.0f64).sin() - (1.0f64 - 1.0).sin();
        // ∫_{-1}^0 cos(θ+1) dθ = sin(1)
        let err = |n: usize| {
            let x = Segment::from_fn(vec![0.0], 1.0, n, |th: f64| vec![(th + 1.0).cos()]).unwrap();
            (apply_reduction(&pf, &x)[0] - exact).abs()
        };
        let order = (err(20) / err(40)).log2();
        assert!(order >= 1.8, "order {order}");
    }
}
