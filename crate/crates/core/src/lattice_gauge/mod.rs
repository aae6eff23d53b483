//! Domains, flux lines, grids, and the discretized gauge field.
//!
//! A flux line (idealized solenoid) is encoded on the lattice through its
//! branch-cut "string": a ray from the solenoid to the boundary. Every link
//! whose segment crosses the string picks up the Aharonov-Bohm phase
//! `exp(i 2π f)` per signed crossing. Observables depend only on the enclosed
//! flux per plaquette, never on the string direction — that is the gauge
//! freedom, and it is tested as such.

mod domain;
mod grid;
mod links;

pub use domain::{Domain, FluxLine};
pub use grid::{Grid, GridMeta};
pub use links::{plaquette_flux, relative_gauge, LinkField};
