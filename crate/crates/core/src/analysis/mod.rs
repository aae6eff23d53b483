//! Observable signatures: nodal curves, exponential tails, far-field
//! diffraction spectra, confinement statistics.

mod confinement;
mod diffraction;
mod nodal;
mod tail;

pub use confinement::{confinement_summary, ConfinementRow};
pub use diffraction::{far_field_spectrum, peak_angles, DiffractionSpectrum};
pub use nodal::{align_cluster_to_half_angle, extract_nodal_curves, Endpoint, NodalCurve};
pub use tail::{axis_odd_projection, fit_exponential_tail, TailFit};
