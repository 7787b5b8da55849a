//! Optimal control with delay in the state: Hamiltonian, feedback synthesis
//! from the reduced value function, closed-loop simulation and the
//! verification of the fundamental relation.

mod hamiltonian;
mod problem;

pub use hamiltonian::{hamiltonian, hamiltonian_nonlinearity, select_upsilon, ControlSet, RunningCost};
pub use problem::{
    closed_loop_simulate, evaluate_cost, s1_benchmark, verify_fundamental_relation, Candidate, ClosedLoopResult,
    ControlProblem, ControlSource, FeedbackPolicy, LoopConfig, RelationReport, RelationRow, StepRecord,
};
