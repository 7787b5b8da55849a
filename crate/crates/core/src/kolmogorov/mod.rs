//! Mild solutions of linear and semilinear Kolmogorov equations in the
//! reduced form `w(t, x) = w̄(t, 𝒫e^{tA}x)`.

mod gamma;
mod grid;
mod nonlinearity;
mod solver;

pub use gamma::{
    gamma_convolution, gamma_gradient, linear_solve, reduced_ou, sigma_eval, Direction, SigmaEval, GAMMA_S_ORDER,
};
pub use grid::SpaceGrid;
pub use nonlinearity::{Arity, Nonlinearity};
pub use solver::{picard_solve, window_length, GridSpec, SigmaFunction, SolverConfig, TbarSource, WindowReport};
