//! The delay system, its deterministic flow `e^{tA}` and path simulation.

pub(crate) mod measure;
mod segment;
mod simulate;
mod stepper;
mod system;
pub(crate) mod track;

pub use measure::{Atom, DelayMeasure};
pub use segment::Segment;
pub use simulate::{girsanov_weight, simulate_controlled, simulate_ou, BrownianPath, Control, FeedbackFn};
pub(crate) use simulate::controlled_increment;
pub use stepper::{checked_steps, evolve_deterministic, fundamental_response, Stepper};
pub use system::{DelaySystem, SIGMA_CONDITION_BOUND};
