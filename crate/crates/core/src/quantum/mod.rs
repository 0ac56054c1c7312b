//! Statevector simulation of data-encoding circuits and the fidelity
//! kernels built from them.

pub mod feature_map;
pub mod kernel;
pub mod statevector;

pub use feature_map::{build_feature_map, data_map, feature_state, one_period_phase_hi, Entanglement, FeatureMapKind, FeatureMapSpec};
pub use kernel::{
    compute_uncompute_state, cross_kernel_matrix, exact_kernel_entry, kernel_matrix, sample_counts,
    sampled_kernel_entry, KernelMode, ShotConfig,
};
pub use statevector::{apply_gate, inverse_circuit, Gate, Statevector, MAX_QUBITS};
