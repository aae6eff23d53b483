//! Far-field transverse-momentum spectra of transmitted fields.

use num_complex::Complex64;

use crate::dynamics::{Region, WaveField};
use crate::error::{Error, Result};

/// Transverse momentum distribution of the field inside a region.
#[derive(Debug, Clone)]
pub struct DiffractionSpectrum {
    /// Sample momenta, ascending; spacing `2π / (Ny h)`.
    pub ky: Vec<f64>,
    pub intensity: Vec<f64>,
    /// Direct probability integral over the region; Parseval ties the
    /// intensity sum to this.
    pub transmitted_probability: f64,
    pub incident_kx: f64,
    pub period: f64,
    pub region: Region,
    pub bin_width: f64,
}

/// Discrete transform over y of the field restricted to `region`, one column
/// at a time, intensities accumulated across columns with weights chosen so
/// Parseval is exact: Σ I(ky) = Σ_region |ψ|² h².
///
/// The carrier e^{i kx x} is constant within a column, so it drops out of
/// per-column intensities; `incident_kx` and `period` ride along as metadata
/// for the peak bookkeeping downstream.
pub fn far_field_spectrum(
    v: &WaveField,
    region: Region,
    incident_kx: f64,
    period: f64,
) -> Result<DiffractionSpectrum> {
    let grid = v.grid();
    let h = grid.h();
    let cols: Vec<usize> = (0..grid.nx())
        .filter(|&ix| {
            let x = grid.node_x(ix);
            x >= region.x0 && x <= region.x1
        })
        .collect();
    let rows: Vec<usize> = (0..grid.ny())
        .filter(|&iy| {
            let y = grid.node_y(iy);
            y >= region.y0 && y <= region.y1
        })
        .collect();
    if cols.is_empty() || rows.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let nyr = rows.len();

    // twiddle table e^{-i 2π k / Ny}
    let tau = std::f64::consts::TAU;
    let tw: Vec<Complex64> = (0..nyr)
        .map(|k| Complex64::from_polar(1.0, -tau * k as f64 / nyr as f64))
        .collect();

    let mut intensity = vec![0.0f64; nyr];
    let mut direct = 0.0f64;
    let mut col = vec![Complex64::new(0.0, 0.0); nyr];
    for &ix in &cols {
        for (j, &iy) in rows.iter().enumerate() {
            col[j] = v.at(ix, iy);
            direct += col[j].norm_sqr();
        }
        for (m, im) in intensity.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut idx = 0usize;
            for &c in col.iter() {
                acc += c * tw[idx];
                idx += m;
                if idx >= nyr {
                    idx -= nyr;
                }
            }
            *im += acc.norm_sqr();
        }
    }
    let h2 = h * h;
    let direct = direct * h2;
    let scale = h2 / nyr as f64;

    // reorder bins to ascending ky = 2π f / (Ny h), f in (-Ny/2, Ny/2]
    let mut order: Vec<(f64, f64)> = intensity
        .iter()
        .enumerate()
        .map(|(m, &int)| {
            let f = if m <= nyr / 2 {
                m as f64
            } else {
                m as f64 - nyr as f64
            };
            (tau * f / (nyr as f64 * h), int * scale)
        })
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    Ok(DiffractionSpectrum {
        ky: order.iter().map(|p| p.0).collect(),
        intensity: order.iter().map(|p| p.1).collect(),
        transmitted_probability: direct,
        incident_kx,
        period,
        region,
        bin_width: tau / (nyr as f64 * h),
    })
}

impl DiffractionSpectrum {
    /// Max intensity within ±1 bin of a target momentum.
    pub fn intensity_near(&self, ky: f64) -> f64 {
        let j = self
            .ky
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - ky).abs().partial_cmp(&(b.1 - ky).abs()).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        let lo = j.saturating_sub(1);
        let hi = (j + 2).min(self.intensity.len());
        self.intensity[lo..hi].iter().fold(0.0f64, |a, &b| a.max(b))
    }

    /// Momentum of the strongest bin.
    pub fn principal_peak(&self) -> (f64, f64) {
        let (j, &int) = self
            .intensity
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        (self.ky[j], int)
    }
}

/// Local maxima above 10% of the global maximum, converted to scattering
/// angles `sinθ = ky / p` and tagged with the nearest half-integer order
/// `n = ky L / 2π`.
pub fn peak_angles(spec: &DiffractionSpectrum, p: f64) -> Result<Vec<(f64, f64)>> {
    if !(p > 0.0) {
        return Err(Error::ConfigInvalid("incident momentum must be positive".into()));
    }
    let n = spec.intensity.len();
    let max = spec.intensity.iter().fold(0.0f64, |a, &b| a.max(b));
    if !(max > 0.0) {
        return Err(Error::NoPeaks);
    }
    let threshold = 0.1 * max;
    let mut out = Vec::new();
    for j in 0..n {
        let here = spec.intensity[j];
        if here < threshold {
            continue;
        }
        let left = if j > 0 { spec.intensity[j - 1] } else { -1.0 };
        let right = if j + 1 < n { spec.intensity[j + 1] } else { -1.0 };
        if here >= left && here > right || here > left && here >= right {
            let ky = spec.ky[j];
            let order = (2.0 * ky * spec.period / std::f64::consts::TAU).round() / 2.0;
            out.push((order, ky / p));
        }
    }
    if out.is_empty() {
        return Err(Error::NoPeaks);
    }
    Ok(out)
}
