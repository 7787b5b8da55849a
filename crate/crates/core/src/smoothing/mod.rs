//! Reduced covariances, Gaussian evaluation of `R_t[φ̄∘𝒫]` and its gradient,
//! smoothing-rate probes and the perturbed semigroup.

mod feller;
mod gaussian;
mod ou;
mod perturbed;
mod probes;
mod response;

pub use feller::{feller_direction, strong_feller_failure_probe, FellerReport, FellerRow, FELLER_DELTAS};
pub use gaussian::{GaussRule, Gaussian, QuadConfig};
pub use ou::{mean_reduction, ou_apply, ou_gradient, steering_energy, OuContext};
pub use perturbed::{perturbed_apply, perturbed_gradient, GradientEstimate, GradientPath, McConfig, PerturbedEstimate};
pub use probes::{
    fit_loglog, geometric_grid, gradient_rate_probe, lower_bound_certificate, smoothing_rate_probe, LowerBoundCertificate,
    RateFit, WindowCheck,
};
pub use response::{covariance, response_matrix, CovMatrix, ResponseTable};
