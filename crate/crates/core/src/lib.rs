//! Two-dimensional quantum simulator for charged particles around idealized
//! flux lines.
//!
//! Flux lines are encoded on a finite-difference lattice through branch-cut
//! (string) link phases; eigenstates come from a matrix-free Lanczos solver
//! and wave packets evolve under Crank-Nicolson. Analysis extracts nodal
//! curves, exponential tails, far-field diffraction spectra, and confinement
//! statistics; the CLI runs the canonical experiments end-to-end.

pub mod analysis;
pub mod cli_io;
pub mod dynamics;
pub mod error;
pub mod lattice_gauge;
pub mod spectral;

pub use error::{Error, Result};
