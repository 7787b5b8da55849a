use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::scalar::Real;

use super::measure::DelayMeasure;

/// Default bound on the condition number of `σ`.
pub const SIGMA_CONDITION_BOUND: f64 = 1e10;

/// Linear delay system `dy = a₀ y dt + ∫ y(t+θ) a₁(dθ) dt + σ dW`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySystem<T: Real = f64> {
    n: usize,
    d: T,
    a0: SquareMatrix<T>,
    a1: DelayMeasure<T>,
    sigma: SquareMatrix<T>,
    sigma_inv: SquareMatrix<T>,
    tail_grid: usize,
}

impl<T: Real> DelaySystem<T> {
    /// Validates the standing conditions: `a₁({0}) = 0`, `σ` invertible, matching dimensions.
    pub fn new(a0: SquareMatrix<T>, a1: DelayMeasure<T>, sigma: SquareMatrix<T>, tail_grid: usize) -> Result<Self> {
        let n = a0.dim();
        for (what, got) in [("a1", a1.dim()), ("sigma", sigma.dim())] {
            if got != n {
                return Err(Error::Invalid(format!("{what} has dimension {got}, a0 has {n}")));
            }
        }
        if !a0.is_finite() || !sigma.is_finite() {
            return Err(Error::Invalid("system matrices must be finite".into()));
        }
        if a1.has_atom_at_zero() {
            return Err(Error::Invalid(
                "a1 has an atom at θ = 0; the delay measure must satisfy a1({0}) = 0 (put that mass into a0)".into(),
            ));
        }
        if tail_grid < 2 {
            return Err(Error::Invalid(format!("tail grid needs N ≥ 2, got {tail_grid}")));
        }
        let cond = sigma.condition_number();
        let sigma_inv = match sigma.inverse() {
            Some(inv) if cond.to_f64_lossy() < SIGMA_CONDITION_BOUND => inv,
            _ => {
                return Err(Error::Invalid(format!(
                    "sigma must be invertible (condition number {cond} ≥ {SIGMA_CONDITION_BOUND:e})"
                )))
            }
        };
        Ok(Self {
            n,
            d: a1.delay(),
            a0,
            a1,
            sigma,
            sigma_inv,
            tail_grid,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn delay(&self) -> T {
        self.d
    }

    pub fn a0(&self) -> &SquareMatrix<T> {
        &self.a0
    }

    pub fn a1(&self) -> &DelayMeasure<T> {
        &self.a1
    }

    pub fn sigma(&self) -> &SquareMatrix<T> {
        &self.sigma
    }

    pub fn sigma_inv(&self) -> &SquareMatrix<T> {
        &self.sigma_inv
    }

    /// Default tail grid size `N` for segments of this system.
    pub fn tail_grid(&self) -> usize {
        self.tail_grid
    }

    /// Default time step `d / N`.
    pub fn default_dt(&self) -> T {
        self.d / T::from_usize_lossy(self.tail_grid)
    }
}
