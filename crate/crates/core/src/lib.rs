//! Thermal entanglement witness for the half-filled Hubbard model.
//!
//! The witness `E = chi_z - (<L0^z> - 1/12) / T` combines the magnetic
//! susceptibility with the local moment, so it stays valid when the spin
//! length on each site fluctuates (empty, singly or doubly occupied).
//! `E < 0` certifies entanglement; the highest temperature where that
//! holds is the critical temperature `T_c`.
//!
//! Two solvers feed it:
//!
//! * [`ed`]: exact diagonalization of small clusters, sector by sector,
//!   with canonical or grand-canonical averages in [`thermo`].
//! * [`dqmc`]: finite-temperature determinant quantum Monte Carlo for
//!   larger lattices at half filling.
//!
//! [`witness`] locates `T_c`, sweeps it against `U` and extrapolates
//! finite chains to the thermodynamic limit.


pub mod cache;
pub mod dqmc;
pub mod ed;
pub mod error;
pub mod hilbert;
pub mod lattice;
pub mod par;
pub mod stats;
pub mod thermo;
pub mod witness;


pub use ed::{solve_cluster, ClusterSpectra, HubbardParams, SectorSet, Spectrum};
pub use error::{Error, Result};
pub use lattice::{ClusterGeometry, LatticeKind};
pub use thermo::{free_fermion_reference, thermal_observables, Ensemble, ThermalObservables};
