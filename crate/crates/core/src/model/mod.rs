//! Problems, Grover operators, superoperators and noise channels.

mod noise;
mod problem;
mod superop;

pub use noise::{avg_gate_fidelity, interpolate, noise_superop, process_fidelity, NoiseSpec};
pub use problem::{
    angle_state, grover_amplitude, grover_observable, pauli, pauli_string, prep_unitary, random_state,
    reflection_about, rho_tilde, theta_to_value, EstimationProblem, Mode, TwoStateGeometry,
    NORM_TOL, OBS_TOL,
};
pub use superop::{
    choi, choi_min_eigenvalue, conjugation_superop, devectorize, kraus_superop, ptm_to_superop,
    sandwich_superop, superop_to_ptm, tensor_superops, trace_defect, vec_inner, vectorize,
};
