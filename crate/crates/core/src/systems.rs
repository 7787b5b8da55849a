//! Built-in scalar test systems.
//!
//! * `S1`: `d = 1`, `a₀ = 0`, `a₁ = 0`, `σ = 1`, `𝒫` the head projection.
//! * `S2`: `d = 1`, `a₀ = -1`, `a₁ = ½δ_{-1/2}`, `σ = 1`, `𝒫x = x₀ + ∫ x₁`.
//! * `S3`: the S2 dynamics with `𝒫x = ∫ x₁` (no atom at 0).

use crate::delay_dynamics::{DelayMeasure, DelaySystem};
use crate::error::Result;
use crate::functionals::PastFunctional;
use crate::linalg::SquareMatrix;

/// Default tail grid size of the built-in systems.
pub const DEFAULT_TAIL_GRID: usize = 100;

fn one() -> SquareMatrix<f64> {
    SquareMatrix::identity(1)
}

/// S1 with delay horizon `d`.
pub fn s1_with_delay(d: f64) -> Result<(DelaySystem<f64>, PastFunctional<f64>)> {
    let sys = DelaySystem::new(SquareMatrix::zeros(1), DelayMeasure::zero(1, d)?, one(), DEFAULT_TAIL_GRID)?;
    let pf = PastFunctional::head_projection(1, d)?;
    Ok((sys, pf))
}

pub fn s1() -> Result<(DelaySystem<f64>, PastFunctional<f64>)> {
    s1_with_delay(1.0)
}

fn s2_dynamics() -> Result<DelaySystem<f64>> {
    let a1 = DelayMeasure::zero(1, 1.0)?.with_atom(-0.5, SquareMatrix::scalar(1, 0.5))?;
    DelaySystem::new(SquareMatrix::scalar(1, -1.0), a1, one(), DEFAULT_TAIL_GRID)
}

pub fn s2() -> Result<(DelaySystem<f64>, PastFunctional<f64>)> {
    let mu = DelayMeasure::zero(1, 1.0)?.with_constant_density(one())?;
    Ok((s2_dynamics()?, PastFunctional::new(one(), mu)?))
}

pub fn s3() -> Result<(DelaySystem<f64>, PastFunctional<f64>)> {
    let mu = DelayMeasure::zero(1, 1.0)?.with_constant_density(one())?;
    Ok((s2_dynamics()?, PastFunctional::new(SquareMatrix::zeros(1), mu)?))
}

/// Looks up a built-in system by name (`S1`, `S2`, `S3`, case-insensitive).
pub fn by_name(name: &str) -> Option<Result<(DelaySystem<f64>, PastFunctional<f64>)>> {
    match name.to_ascii_uppercase().as_str() {
        "S1" => Some(s1()),
        "S2" => Some(s2()),
        "S3" => Some(s3()),
        _ => None,
    }
}

pub const NAMES: [&str; 3] = ["S1", "S2", "S3"];
