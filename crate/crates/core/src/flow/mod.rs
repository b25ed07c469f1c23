//! Isomonodromic flows: the full Schlesinger system and the reduced
//! Hamiltonian system, with the tools to compare them.

pub mod integrator;
pub mod reduced;
pub mod schlesinger;

pub use reduced::{
    calibrate_sign, compare_flows, integrate_reduced, reduced_hamiltonian, reduced_rhs, form_pullback_check,
    FlowComparison, FormAgreement, ReducedOptions, ReducedState, ReducedTrajectory, HAMILTONIAN_SIGN,
};
pub use schlesinger::{hamiltonian_k, integrate, schlesinger_rhs, FlowParams, FlowState, Trajectory};
