//! Dense linear algebra, Pauli strings, states, measurements and partial
//! traces.
//!
//! Qubit ordering: qubit 0 is the most significant bit of a basis index.
//! In bipartite registers side A occupies the leading qubits. [`qubit_mask`]
//! is the single place this convention is encoded.

mod eig;
mod matrix;
mod measure;
mod pauli;
mod state;

pub use eig::{hermitian_eig, hermitian_eigenvalues, Eigen, HERMITIAN_TOL};
pub use matrix::{ComplexMatrix, C64, ONE, ZERO};
pub use measure::{
    bell_measure, bell_projector, born_measure, correct_keys, sample_index, BellKeys, Pvm, PVM_TOL,
};
pub use pauli::{pauli_to_matrix, Letter, PauliString, MAX_PAULI_QUBITS};
pub(crate) use pauli::pauli_coefficient;
pub use state::{
    apply_local, epr_state, inner, norm_sqr, partial_trace, pauli_expectation, reduced_density, rho_norm,
    rho_norm_sq, trace_distance, trace_of_product, DensityMatrix, StateVector,
};

/// Basis-index bit of qubit `q` in an `n`-qubit register.
#[inline]
pub fn qubit_mask(n: usize, q: usize) -> usize {
    debug_assert!(q < n);
    1 << (n - 1 - q)
}
