//! Product Jahn-Teller spin-vibronic model: basis, Hamiltonian, eigensolver,
//! symmetry labels and derived observables.

pub mod basis;
pub mod classify;
pub mod eigen;
pub mod hamiltonian;
pub mod observables;
pub mod sparse;

pub use basis::FockBasis;
pub use classify::{classify_states, LabeledSpectrum, Level, Symmetry};
pub use eigen::{lowest_eigenpairs, EigenOptions, Eigenpairs};
pub use hamiltonian::{build_hamiltonian, HamiltonianMatrix, SpinProjection, VibronicHamiltonian};
pub use sparse::{Scalar, SparseOperator};
