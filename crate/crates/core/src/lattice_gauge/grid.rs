//! Finite-difference lattice with interior mask and dense index map.

use super::domain::{Domain, FluxLine};
use crate::error::{Error, Result};

/// Rectangular lattice of candidate nodes covering the domain; nodes outside
/// the domain are Dirichlet (wave function pinned to zero) and carry no
/// degree of freedom.
///
/// Node `(ix, iy)` sits at `(x0 + ix*h, y0 + iy*h)`. For rectangles the first
/// node is at `(h, h)`; for discs the nodes sit at half-integer multiples of
/// `h` so that the disc center is a plaquette center and a central solenoid
/// snaps there exactly.
#[derive(Debug, Clone)]
pub struct Grid {
    domain: Domain,
    h: f64,
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    mask: Vec<bool>,
    node_index: Vec<u32>,
    interior: Vec<u32>,
}

const NO_NODE: u32 = u32::MAX;

/// Cheap identity for dimension-compatibility checks between products built
/// over the same grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMeta {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub x0: f64,
    pub y0: f64,
    pub interior_len: usize,
}

impl Grid {
    /// Lay out the lattice for `domain` at spacing `h`.
    pub fn build(domain: Domain, h: f64) -> Result<Grid> {
        domain.validate()?;
        if !(h > 0.0) {
            return Err(Error::ConfigInvalid(format!("grid spacing must be positive, got {h}")));
        }
        let (nx, ny, x0, y0) = match domain {
            Domain::Rectangle { width, height } => {
                let nx = count_strict_interior(width, h);
                let ny = count_strict_interior(height, h);
                (nx, ny, h, h)
            }
            Domain::Disc { radius } => {
                // largest i with (i + 1/2) h < radius
                let mut imax = (radius / h - 0.5).floor() as i64;
                while ((imax + 1) as f64 + 0.5) * h < radius {
                    imax += 1;
                }
                if imax < 0 {
                    return Err(Error::EmptyInterior);
                }
                let n = 2 * (imax as usize + 1);
                let x0 = -(imax as f64 + 0.5) * h;
                (n, n, x0, x0)
            }
        };
        if nx == 0 || ny == 0 {
            return Err(Error::EmptyInterior);
        }
        let mut mask = vec![false; nx * ny];
        let mut node_index = vec![NO_NODE; nx * ny];
        let mut interior = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                let x = x0 + ix as f64 * h;
                let y = y0 + iy as f64 * h;
                if domain.contains(x, y) {
                    let lin = iy * nx + ix;
                    mask[lin] = true;
                    node_index[lin] = interior.len() as u32;
                    interior.push(lin as u32);
                }
            }
        }
        if interior.is_empty() {
            return Err(Error::EmptyInterior);
        }
        Ok(Grid {
            domain,
            h,
            nx,
            ny,
            x0,
            y0,
            mask,
            node_index,
            interior,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn node_x(&self, ix: usize) -> f64 {
        self.x0 + ix as f64 * self.h
    }

    pub fn node_y(&self, iy: usize) -> f64 {
        self.y0 + iy as f64 * self.h
    }

    pub fn is_interior(&self, ix: usize, iy: usize) -> bool {
        ix < self.nx && iy < self.ny && self.mask[iy * self.nx + ix]
    }

    /// Dense index of an interior node, if any.
    pub fn dense_index(&self, ix: usize, iy: usize) -> Option<usize> {
        if ix >= self.nx || iy >= self.ny {
            return None;
        }
        let v = self.node_index[iy * self.nx + ix];
        (v != NO_NODE).then_some(v as usize)
    }

    pub fn interior_len(&self) -> usize {
        self.interior.len()
    }

    /// Lattice coordinates of the `n`-th interior node.
    pub fn interior_node(&self, n: usize) -> (usize, usize) {
        let lin = self.interior[n] as usize;
        (lin % self.nx, lin / self.nx)
    }

    /// Position of the `n`-th interior node.
    pub fn interior_position(&self, n: usize) -> (f64, f64) {
        let (ix, iy) = self.interior_node(n);
        (self.node_x(ix), self.node_y(iy))
    }

    pub fn meta(&self) -> GridMeta {
        GridMeta {
            nx: self.nx,
            ny: self.ny,
            h: self.h,
            x0: self.x0,
            y0: self.y0,
            interior_len: self.interior.len(),
        }
    }

    /// Center of plaquette `(ix, iy)` (the cell whose lower-left node is
    /// `(ix, iy)`).
    pub fn plaquette_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.x0 + (ix as f64 + 0.5) * self.h,
            self.y0 + (iy as f64 + 0.5) * self.h,
        )
    }

    /// Plaquette indices whose center is nearest to a point. May fall outside
    /// the stored lattice range for points near/outside the hull; callers
    /// validate through `snap_flux`.
    pub fn nearest_plaquette(&self, x: f64, y: f64) -> (i64, i64) {
        let ix = ((x - self.x0) / self.h - 0.5).round() as i64;
        let iy = ((y - self.y0) / self.h - 0.5).round() as i64;
        (ix, iy)
    }

    /// Same lattice with extra nodes masked out (interior obstacles such as
    /// a grating wall). The predicate keeps a node when it returns true.
    pub fn with_extra_mask(&self, keep: impl Fn(usize, usize) -> bool) -> Result<Grid> {
        let mut mask = self.mask.clone();
        let mut node_index = vec![NO_NODE; self.nx * self.ny];
        let mut interior = Vec::new();
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let lin = iy * self.nx + ix;
                if mask[lin] && !keep(ix, iy) {
                    mask[lin] = false;
                }
                if mask[lin] {
                    node_index[lin] = interior.len() as u32;
                    interior.push(lin as u32);
                }
            }
        }
        if interior.is_empty() {
            return Err(Error::EmptyInterior);
        }
        Ok(Grid {
            mask,
            node_index,
            interior,
            ..self.clone()
        })
    }

    /// Snap a flux line to the nearest plaquette center. Point solenoids sit
    /// below discretization resolution, and plaquette centers guarantee the
    /// string can avoid every node.
    pub fn snap_flux(&self, flux: &FluxLine) -> Result<FluxLine> {
        let (x, y) = flux.position();
        if !self.domain.contains(x, y) {
            return Err(Error::FluxOutsideDomain { x, y });
        }
        let (ix, iy) = self.nearest_plaquette(x, y);
        let sx = self.x0 + (ix as f64 + 0.5) * self.h;
        let sy = self.y0 + (iy as f64 + 0.5) * self.h;
        if !self.domain.contains(sx, sy) {
            return Err(Error::FluxOutsideDomain { x: sx, y: sy });
        }
        Ok(FluxLine::new((sx, sy), flux.flux_fraction(), flux.string_angle()))
    }
}

/// Number of positive integers k with k*h strictly inside (0, extent).
fn count_strict_interior(extent: f64, h: f64) -> usize {
    let tol = 1e-9 * h;
    let mut n = 0usize;
    let mut k = 1u64;
    while (k as f64) * h < extent - tol {
        n += 1;
        k += 1;
    }
    n
}
