//! Partial smoothing for Ornstein-Uhlenbeck semigroups of linear delay
//! equations, mild solutions of semilinear Kolmogorov/HJB equations in the
//! reduced representation `w(t,x) = w̄(t, 𝒫e^{tA}x)`, and feedback control.
//!
//! The state-level types (matrices, measures, segments, the Euler stepper and the
//! reduction maps) are generic over [`Real`] (`f32` or `f64`). The analysis layers
//! (`smoothing`, `kolmogorov`, `control`) work in `f64`.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod delay_dynamics;
pub mod error;
pub mod functionals;
pub mod kolmogorov;
pub mod linalg;
pub mod mc;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod smoothing;
pub mod systems;

pub use delay_dynamics::{BrownianPath, DelayMeasure, DelaySystem, Segment};
pub use error::{Error, Result};
pub use functionals::{Observable, PastFunctional, Phibar, ReducedDrift, Regime, Smoothness};
pub use linalg::SquareMatrix;
pub use mc::Estimate;
pub use scalar::Real;

pub type SquareMatrixF32 = SquareMatrix<f32>;
pub type SquareMatrixF64 = SquareMatrix<f64>;
pub type SegmentF32 = Segment<f32>;
pub type SegmentF64 = Segment<f64>;
pub type DelayMeasureF32 = DelayMeasure<f32>;
pub type DelayMeasureF64 = DelayMeasure<f64>;
pub type DelaySystemF32 = DelaySystem<f32>;
pub type DelaySystemF64 = DelaySystem<f64>;
pub type PastFunctionalF32 = PastFunctional<f32>;
pub type PastFunctionalF64 = PastFunctional<f64>;
