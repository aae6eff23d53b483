//! Per-eigenstate confinement statistics for trap geometries.

use super::tail::{axis_odd_projection, fit_exponential_tail, TailFit};
use crate::dynamics::Region;
use crate::lattice_gauge::{Domain, LinkField};
use crate::spectral::Spectrum;

#[derive(Debug, Clone)]
pub struct ConfinementRow {
    pub index: usize,
    pub energy: f64,
    pub inside_probability: f64,
    /// Right-side tail fit; only attempted for confined states.
    pub tail: Option<TailFit>,
    /// Energy below the transverse-mode threshold.
    pub bound: bool,
}

/// Energy, inside-trap probability, tail decay, and bound/unbound
/// classification for every eigenstate in the spectrum.
///
/// Tail fits run on the gauge-smoothed axis-odd channel (see
/// `axis_odd_projection`), on a window starting 3h (at least 0.25 length
/// units) right of the trap, and only when most of the state sits inside.
pub fn confinement_summary(
    spectrum: &Spectrum,
    links: &LinkField,
    trap: &Region,
    threshold: f64,
) -> Vec<ConfinementRow> {
    let mut rows = Vec::with_capacity(spectrum.len());
    for i in 0..spectrum.len() {
        let v = &spectrum.eigenvectors[i];
        let energy = spectrum.eigenvalues[i];
        let inside = v.region_probability(trap);
        let mut tail = None;
        if inside > 0.5 {
            let grid = v.grid();
            let h = grid.h();
            let domain_right = match grid.domain() {
                Domain::Rectangle { width, .. } => width,
                Domain::Disc { radius } => radius,
            };
            let start = trap.x1 + (3.0 * h).max(0.25);
            let stop = (start + 1.75).min(domain_right - 0.25);
            if stop > start {
                tail = axis_odd_projection(v, links)
                    .and_then(|odd| fit_exponential_tail(&odd, (start, stop)))
                    .ok();
            }
        }
        rows.push(ConfinementRow {
            index: i,
            energy,
            inside_probability: inside,
            tail,
            bound: energy < threshold,
        });
    }
    rows
}
