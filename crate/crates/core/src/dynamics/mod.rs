//! Wave fields, initial packets, and unitary time evolution.

mod evolve;

pub use evolve::{
    evolve, step_crank_nicolson, Absorber, AbsorbedTally, CnStepper, EvolveConfig,
    EvolutionReport,
};

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice_gauge::{Domain, Grid};
use crate::spectral::SparseHamiltonian;

/// Axis-aligned rectangle used for probability bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Region {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Region {
        Region { x0, x1, y0, y1 }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// Complex-valued grid function over the interior nodes.
#[derive(Debug, Clone)]
pub struct WaveField {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl PartialEq for WaveField {
    fn eq(&self, other: &Self) -> bool {
        self.grid.meta() == other.grid.meta() && self.values == other.values
    }
}

impl WaveField {
    pub fn from_values(grid: Arc<Grid>, values: Vec<Complex64>) -> WaveField {
        assert_eq!(values.len(), grid.interior_len(), "field/grid size mismatch");
        WaveField { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> WaveField {
        let n = grid.interior_len();
        WaveField {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Value at a lattice node; exterior nodes read as zero.
    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        match self.grid.dense_index(ix, iy) {
            Some(n) => self.values[n],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Discrete L² norm with weight h².
    pub fn norm(&self) -> f64 {
        let h2 = self.grid.h() * self.grid.h();
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * h2).sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let s = 1.0 / n;
            for z in self.values.iter_mut() {
                *z *= s;
            }
        }
    }

    /// Energy expectation ⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩.
    pub fn energy(&self, h: &SparseHamiltonian) -> Result<f64> {
        let hv = h.matvec(&self.values)?;
        let num: f64 = self
            .values
            .iter()
            .zip(hv.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        let den: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        Ok(num / den)
    }

    /// ⟨-i ∂x⟩ by central differences (flux-free diagnostic; boundary and
    /// exterior neighbors contribute zero).
    pub fn momentum_x(&self) -> f64 {
        let g = &self.grid;
        let inv2h = 1.0 / (2.0 * g.h());
        let mut num = 0.0f64;
        for n in 0..g.interior_len() {
            let (ix, iy) = g.interior_node(n);
            let right = if ix + 1 < g.nx() { self.at(ix + 1, iy) } else { Complex64::new(0.0, 0.0) };
            let left = if ix > 0 { self.at(ix - 1, iy) } else { Complex64::new(0.0, 0.0) };
            let grad = (right - left) * inv2h;
            // conj(ψ) * (-i) * grad
            num += (self.values[n].conj() * Complex64::new(0.0, -1.0) * grad).re;
        }
        let den: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        num / den
    }

    /// Discrete integral of |ψ|² h² over nodes inside `region`.
    pub fn region_probability(&self, region: &Region) -> f64 {
        let g = &self.grid;
        let h2 = g.h() * g.h();
        let mut p = 0.0f64;
        for n in 0..g.interior_len() {
            let (x, y) = g.interior_position(n);
            if region.contains(x, y) {
                p += self.values[n].norm_sqr();
            }
        }
        p * h2
    }
}

/// Normalized Gaussian packet `exp(-(x-x0)²/4σx² - (y-y0)²/4σy² + i k·r)`.
pub fn gaussian_packet(
    grid: &Arc<Grid>,
    center: (f64, f64),
    k0: (f64, f64),
    sigma: (f64, f64),
) -> Result<WaveField> {
    let h = grid.h();
    if !grid.domain().contains(center.0, center.1) {
        return Err(Error::UnresolvablePacket(format!(
            "center ({}, {}) not inside the domain",
            center.0, center.1
        )));
    }
    if !(sigma.0 > 2.0 * h && sigma.1 > 2.0 * h) {
        return Err(Error::UnresolvablePacket(format!(
            "width ({}, {}) under the 2h resolution floor (h = {h})",
            sigma.0, sigma.1
        )));
    }
    let kmag = (k0.0 * k0.0 + k0.1 * k0.1).sqrt();
    if kmag * h >= 0.5 {
        return Err(Error::UnresolvablePacket(format!(
            "|k0| h = {} >= 0.5, dispersion not resolved",
            kmag * h
        )));
    }
    let mut field = WaveField::zeros(grid.clone());
    for n in 0..grid.interior_len() {
        let (x, y) = grid.interior_position(n);
        let ex = -(x - center.0).powi(2) / (4.0 * sigma.0 * sigma.0)
            - (y - center.1).powi(2) / (4.0 * sigma.1 * sigma.1);
        let phase = k0.0 * x + k0.1 * y;
        field.values_mut()[n] = Complex64::from_polar(ex.exp(), phase);
    }
    field.normalize();
    if field.norm() == 0.0 {
        return Err(Error::UnresolvablePacket("packet has zero mass on the grid".into()));
    }
    Ok(field)
}

/// Transverse Dirichlet ground mode times a longitudinal Gaussian:
/// `sin(πy/d) exp(-(x-x0)²/4σx² + i kx x)`, normalized.
pub fn transverse_ground_packet(
    grid: &Arc<Grid>,
    x0: f64,
    sigma_x: f64,
    kx: f64,
) -> Result<WaveField> {
    let d = match grid.domain() {
        Domain::Rectangle { height, .. } => height,
        Domain::Disc { .. } => {
            return Err(Error::UnresolvablePacket(
                "transverse ground packet needs a rectangle domain".into(),
            ))
        }
    };
    let h = grid.h();
    if !(sigma_x > 2.0 * h) {
        return Err(Error::UnresolvablePacket(format!(
            "width {sigma_x} under the 2h resolution floor (h = {h})"
        )));
    }
    if kx.abs() * h >= 0.5 {
        return Err(Error::UnresolvablePacket(format!(
            "|kx| h = {} >= 0.5, dispersion not resolved",
            kx.abs() * h
        )));
    }
    let mut field = WaveField::zeros(grid.clone());
    for n in 0..grid.interior_len() {
        let (x, y) = grid.interior_position(n);
        // sin(πy/d) > 0 strictly inside the strip
        let env = (-(x - x0).powi(2) / (4.0 * sigma_x * sigma_x)).exp()
            * (std::f64::consts::PI * y / d).sin();
        field.values_mut()[n] = Complex64::from_polar(env, kx * x);
    }
    field.normalize();
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_gauge::LinkField;
    use std::f64::consts::PI;

    fn rect_grid(w: f64, d: f64, h: f64) -> Arc<Grid> {
        Arc::new(Grid::build(Domain::Rectangle { width: w, height: d }, h).unwrap())
    }

    #[test]
    fn packet_is_normalized() {
        let g = rect_grid(4.0, 4.0, 0.1);
        let f = gaussian_packet(&g, (2.0, 2.0), (1.0, 0.5), (0.5, 0.5)).unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn packet_energy_matches_width_formula() {
        // k0 = 0: ⟨px²⟩ = 1/(4σx²) per axis, so ⟨E⟩ = 1/(8σx²) + 1/(8σy²)
        // up to the O(h²) grid correction
        let g = rect_grid(20.0, 20.0, 0.125);
        let sigma = 2.0;
        let f = gaussian_packet(&g, (10.0, 10.0), (0.0, 0.0), (sigma, sigma)).unwrap();
        let lf = LinkField::build(&g, &[]).unwrap();
        let hm = SparseHamiltonian::assemble(&g, &lf).unwrap();
        let e = f.energy(&hm).unwrap();
        let expect = 2.0 / (8.0 * sigma * sigma);
        assert!((e - expect).abs() < 2e-4, "E = {e}, formula {expect}");
    }

    #[test]
    fn packet_momentum_expectation() {
        // kx = 1, σx = 5: ⟨-i∂x⟩ = 1.000 ± 0.001 at h = 1/20
        let g = rect_grid(40.0, 3.0, 0.05);
        let f = gaussian_packet(&g, (20.0, 1.5), (1.0, 0.0), (5.0, 0.7)).unwrap();
        let px = f.momentum_x();
        assert!((px - 1.0).abs() < 1e-3, "⟨px⟩ = {px}");
    }

    #[test]
    fn unresolvable_packets_rejected() {
        let g = rect_grid(4.0, 4.0, 0.1);
        assert!(matches!(
            gaussian_packet(&g, (8.0, 2.0), (0.0, 0.0), (0.5, 0.5)),
            Err(Error::UnresolvablePacket(_))
        ));
        assert!(matches!(
            gaussian_packet(&g, (2.0, 2.0), (0.0, 0.0), (0.15, 0.5)),
            Err(Error::UnresolvablePacket(_))
        ));
        assert!(matches!(
            gaussian_packet(&g, (2.0, 2.0), (6.0, 0.0), (0.5, 0.5)),
            Err(Error::UnresolvablePacket(_))
        ));
    }

    #[test]
    fn transverse_packet_energy_decomposition() {
        // d=1, kx=0.5, σx=8: ⟨E⟩ = π²/2 + kx²/2 + 1/(8σx²) evaluated on the
        // constructed field (mode + kinetic + width terms); the strip must be
        // long enough that the envelope clears the end walls
        let g = rect_grid(80.0, 1.0, 1.0 / 32.0);
        let f = transverse_ground_packet(&g, 40.0, 8.0, 0.5).unwrap();
        let lf = LinkField::build(&g, &[]).unwrap();
        let hm = SparseHamiltonian::assemble(&g, &lf).unwrap();
        let e = f.energy(&hm).unwrap();
        let expect = PI * PI / 2.0 + 0.125 + 1.0 / (8.0 * 64.0);
        assert!((e - expect).abs() < 0.01, "⟨E⟩ = {e} vs {expect}");
    }

    #[test]
    fn transverse_packet_limits_to_mode_energy() {
        // kx = 0, large σx: ⟨E⟩ -> π²/(2d²) from above
        let g = rect_grid(60.0, 1.0, 1.0 / 16.0);
        let f = transverse_ground_packet(&g, 30.0, 12.0, 0.0).unwrap();
        let lf = LinkField::build(&g, &[]).unwrap();
        let hm = SparseHamiltonian::assemble(&g, &lf).unwrap();
        let e = f.energy(&hm).unwrap();
        let floor = PI * PI / 2.0;
        // lattice transverse mode sits slightly below the continuum value
        assert!(e < floor * 1.002 && e > floor * 0.99, "⟨E⟩ = {e}");
        assert!(e > floor * (1.0 - (PI / 16.0).powi(2)));
    }

    #[test]
    fn transverse_packet_mirror_symmetry() {
        let g = rect_grid(8.0, 1.0, 1.0 / 16.0);
        let f = transverse_ground_packet(&g, 4.0, 1.0, 0.3).unwrap();
        let ny = g.ny();
        for n in 0..g.interior_len() {
            let (ix, iy) = g.interior_node(n);
            let mirror = f.at(ix, ny - 1 - iy);
            let diff = (f.values()[n] - mirror).norm();
            assert!(diff < 1e-14, "asymmetry {diff} at ({ix},{iy})");
        }
    }

    #[test]
    fn region_probability_whole_domain_and_split() {
        let g = rect_grid(2.0, 1.0, 2.0 / 21.0);
        let f = gaussian_packet(&g, (1.0, 0.5), (0.0, 0.0), (0.3, 0.22)).unwrap();
        let whole = Region::new(0.0, 2.0, 0.0, 1.0);
        assert!((f.region_probability(&whole) - 1.0).abs() < 1e-12);
        // no node sits on the center line x = 1 for this h
        let left = Region::new(0.0, 1.0, 0.0, 1.0);
        assert!((f.region_probability(&left) - 0.5).abs() < 1e-12);
        let empty = Region::new(10.0, 11.0, 0.0, 1.0);
        assert_eq!(f.region_probability(&empty), 0.0);
    }
}
