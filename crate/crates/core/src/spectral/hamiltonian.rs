//! Discrete Hamiltonian: 5-point kinetic stencil with per-link Peierls
//! phases, Dirichlet boundary, compressed sparse rows.
//!
//! H = -(1/2)(∇ - iA)² discretized: diagonal 2/h², off-diagonals -u/(2h²)
//! with |u| = 1. Real symmetric storage whenever the link field is real.

use std::sync::Arc;

use num_complex::Complex64;

use super::scalar::Scalar;
use crate::error::{Error, Result};
use crate::lattice_gauge::{Grid, LinkField};

/// Compressed sparse row matrix over f64 or Complex64 entries.
#[derive(Debug, Clone)]
pub struct Csr<S> {
    n: usize,
    row_ptr: Vec<u32>,
    cols: Vec<u32>,
    vals: Vec<S>,
}

impl<S: Scalar> Csr<S> {
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, S)]) -> Csr<S> {
        let mut per_row: Vec<Vec<(u32, S)>> = vec![Vec::new(); n];
        for &(r, c, v) in triplets {
            per_row[r].push((c as u32, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0u32);
        for row in per_row.iter_mut() {
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in row.iter() {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len() as u32);
        }
        Csr { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// out = A v, fixed summation order per row.
    pub fn matvec(&self, v: &[S], out: &mut [S]) {
        debug_assert_eq!(v.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for r in 0..self.n {
            let lo = self.row_ptr[r] as usize;
            let hi = self.row_ptr[r + 1] as usize;
            let mut acc = S::ZERO;
            for k in lo..hi {
                acc = acc + self.vals[k] * v[self.cols[k] as usize];
            }
            out[r] = acc;
        }
    }

    pub fn inf_norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.n {
            let lo = self.row_ptr[r] as usize;
            let hi = self.row_ptr[r + 1] as usize;
            let s: f64 = (lo..hi).map(|k| self.vals[k].abs_sq().sqrt()).sum();
            worst = worst.max(s);
        }
        worst
    }
}

impl Csr<f64> {
    /// Real matrix applied to a complex vector (two real sweeps fused).
    pub fn matvec_complex(&self, v: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(v.len(), self.n);
        for r in 0..self.n {
            let lo = self.row_ptr[r] as usize;
            let hi = self.row_ptr[r + 1] as usize;
            let mut re = 0.0f64;
            let mut im = 0.0f64;
            for k in lo..hi {
                let a = self.vals[k];
                let x = v[self.cols[k] as usize];
                re += a * x.re;
                im += a * x.im;
            }
            out[r] = Complex64::new(re, im);
        }
    }
}

#[derive(Debug, Clone)]
enum HValues {
    Real(Csr<f64>),
    Complex(Csr<Complex64>),
}

/// Hermitian lattice Hamiltonian (ħ = m = 1; kinetic only, Dirichlet walls).
#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    grid: Option<Arc<Grid>>,
    h: f64,
    values: HValues,
}

impl SparseHamiltonian {
    /// Assemble over `grid` with the phases in `links`.
    pub fn assemble(grid: &Arc<Grid>, links: &LinkField) -> Result<SparseHamiltonian> {
        if links.meta() != grid.meta() {
            return Err(Error::DimensionMismatch {
                expected: grid.meta().interior_len,
                got: links.meta().interior_len,
            });
        }
        let h = grid.h();
        let inv = 1.0 / (2.0 * h * h);
        let diag = 4.0 * inv;
        let n = grid.interior_len();

        // neighbor couplings in ascending column order: down, left, diag,
        // right, up. For the canonical link a->b with phase U the matrix has
        // H[b][a] = -U/(2h²) and H[a][b] = -conj(U)/(2h²).
        if links.is_real() {
            let mut row_ptr = Vec::with_capacity(n + 1);
            let mut cols: Vec<u32> = Vec::with_capacity(5 * n);
            let mut vals: Vec<f64> = Vec::with_capacity(5 * n);
            row_ptr.push(0u32);
            for r in 0..n {
                let (ix, iy) = grid.interior_node(r);
                if iy > 0 {
                    if let Some(c) = grid.dense_index(ix, iy - 1) {
                        cols.push(c as u32);
                        vals.push(-inv * links.sign_v(ix, iy - 1) as f64);
                    }
                }
                if ix > 0 {
                    if let Some(c) = grid.dense_index(ix - 1, iy) {
                        cols.push(c as u32);
                        vals.push(-inv * links.sign_h(ix - 1, iy) as f64);
                    }
                }
                cols.push(r as u32);
                vals.push(diag);
                if let Some(c) = grid.dense_index(ix + 1, iy) {
                    cols.push(c as u32);
                    vals.push(-inv * links.sign_h(ix, iy) as f64);
                }
                if let Some(c) = grid.dense_index(ix, iy + 1) {
                    cols.push(c as u32);
                    vals.push(-inv * links.sign_v(ix, iy) as f64);
                }
                row_ptr.push(cols.len() as u32);
            }
            Ok(SparseHamiltonian {
                grid: Some(grid.clone()),
                h,
                values: HValues::Real(Csr { n, row_ptr, cols, vals }),
            })
        } else {
            let mut row_ptr = Vec::with_capacity(n + 1);
            let mut cols: Vec<u32> = Vec::with_capacity(5 * n);
            let mut vals: Vec<Complex64> = Vec::with_capacity(5 * n);
            row_ptr.push(0u32);
            for r in 0..n {
                let (ix, iy) = grid.interior_node(r);
                if iy > 0 {
                    if let Some(c) = grid.dense_index(ix, iy - 1) {
                        cols.push(c as u32);
                        vals.push(links.phase_v(ix, iy - 1).scale(-inv));
                    }
                }
                if ix > 0 {
                    if let Some(c) = grid.dense_index(ix - 1, iy) {
                        cols.push(c as u32);
                        vals.push(links.phase_h(ix - 1, iy).scale(-inv));
                    }
                }
                cols.push(r as u32);
                vals.push(Complex64::new(diag, 0.0));
                if let Some(c) = grid.dense_index(ix + 1, iy) {
                    cols.push(c as u32);
                    vals.push(links.phase_h(ix, iy).conj().scale(-inv));
                }
                if let Some(c) = grid.dense_index(ix, iy + 1) {
                    cols.push(c as u32);
                    vals.push(links.phase_v(ix, iy).conj().scale(-inv));
                }
                row_ptr.push(cols.len() as u32);
            }
            Ok(SparseHamiltonian {
                grid: Some(grid.clone()),
                h,
                values: HValues::Complex(Csr { n, row_ptr, cols, vals }),
            })
        }
    }

    /// Raw real-symmetric constructor for tests and synthetic operators.
    pub fn from_real_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> SparseHamiltonian {
        SparseHamiltonian {
            grid: None,
            h: 1.0,
            values: HValues::Real(Csr::from_triplets(n, triplets)),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.values {
            HValues::Real(c) => c.n,
            HValues::Complex(c) => c.n,
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self.values, HValues::Real(_))
    }

    pub fn grid(&self) -> Option<&Arc<Grid>> {
        self.grid.as_ref()
    }

    pub fn grid_spacing(&self) -> f64 {
        self.h
    }

    /// Max absolute row sum, an upper bound on the spectral radius.
    pub fn inf_norm(&self) -> f64 {
        match &self.values {
            HValues::Real(c) => c.inf_norm(),
            HValues::Complex(c) => c.inf_norm(),
        }
    }

    /// y = H v (complex vectors, valid for both storages).
    pub fn matvec_complex(&self, v: &[Complex64], out: &mut [Complex64]) {
        match &self.values {
            HValues::Real(c) => c.matvec_complex(v, out),
            HValues::Complex(c) => c.matvec(v, out),
        }
    }

    /// y = H v in real arithmetic. Panics on a complex Hamiltonian.
    pub fn matvec_real(&self, v: &[f64], out: &mut [f64]) {
        match &self.values {
            HValues::Real(c) => c.matvec(v, out),
            HValues::Complex(_) => panic!("matvec_real on a complex Hamiltonian"),
        }
    }

    /// Allocating checked product, the plain operator application.
    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        self.matvec_complex(v, &mut out);
        Ok(out)
    }
}
