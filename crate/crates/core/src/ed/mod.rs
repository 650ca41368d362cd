//! Exact dynamics of the chain inside the fixed-magnetization sector of the
//! Néel state.

mod basis;
mod hamiltonian;
mod propagate;
mod state;

pub use basis::{neel_config, SectorBasis, MAX_ED_SITES};
pub use hamiltonian::{build_hamiltonian, SparseHamiltonian};
pub use propagate::{evolve_state, Propagator, DEFAULT_KRYLOV_TOL, SPECTRAL_MAX_DIM};
pub use state::{exact_moments, half_chain_entropy, renyi2_of_rdm, two_site_rdm, QuantumState};
