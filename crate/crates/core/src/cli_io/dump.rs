//! Self-describing binary grid-field dumps.
//!
//! Layout: one ASCII header line
//! `GFD1 <real|complex> nx=<n> ny=<n> h=<f> x0=<f> y0=<f> domain=<tag> endian=le`
//! followed by row-major little-endian f64 payload over the full lattice
//! (exterior nodes as zero); complex dumps interleave re,im. Floats in the
//! header use 17 significant digits, so a dump-read-dump cycle is
//! byte-identical.

use std::path::Path;

use num_complex::Complex64;

use super::report::fmt_f64;
use crate::dynamics::WaveField;
use crate::error::{Error, Result};
use crate::lattice_gauge::{plaquette_flux, Grid, LinkField};

#[derive(Debug, Clone)]
pub struct FieldDump {
    pub real: bool,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub x0: f64,
    pub y0: f64,
    pub domain_tag: String,
    /// Row-major values over the full lattice, length nx*ny.
    pub values: Vec<Complex64>,
}

impl FieldDump {
    /// Snapshot a wave field onto the full lattice. Fields with exactly zero
    /// imaginary part dump as real.
    pub fn from_field(v: &WaveField) -> FieldDump {
        let grid = v.grid();
        let real = v.values().iter().all(|z| z.im == 0.0);
        let mut values = vec![Complex64::new(0.0, 0.0); grid.nx() * grid.ny()];
        for n in 0..grid.interior_len() {
            let (ix, iy) = grid.interior_node(n);
            values[iy * grid.nx() + ix] = v.values()[n];
        }
        FieldDump {
            real,
            nx: grid.nx(),
            ny: grid.ny(),
            h: grid.h(),
            x0: grid.node_x(0),
            y0: grid.node_y(0),
            domain_tag: grid.domain().tag(),
            values,
        }
    }

    pub fn value(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[iy * self.nx + ix]
    }

    /// Debug view of a grid: 1 on interior nodes, 0 outside.
    pub fn from_grid_mask(grid: &Grid) -> FieldDump {
        let mut values = vec![Complex64::new(0.0, 0.0); grid.nx() * grid.ny()];
        for n in 0..grid.interior_len() {
            let (ix, iy) = grid.interior_node(n);
            values[iy * grid.nx() + ix] = Complex64::new(1.0, 0.0);
        }
        FieldDump {
            real: true,
            nx: grid.nx(),
            ny: grid.ny(),
            h: grid.h(),
            x0: grid.node_x(0),
            y0: grid.node_y(0),
            domain_tag: grid.domain().tag(),
            values,
        }
    }

    /// Debug view of a link field: the winding phase angle of each plaquette
    /// stored at its lower-left node (interior plaquettes only).
    pub fn from_plaquette_fluxes(grid: &Grid, links: &LinkField) -> FieldDump {
        let mut values = vec![Complex64::new(0.0, 0.0); grid.nx() * grid.ny()];
        for iy in 0..grid.ny() - 1 {
            for ix in 0..grid.nx() - 1 {
                let interior = grid.is_interior(ix, iy)
                    && grid.is_interior(ix + 1, iy)
                    && grid.is_interior(ix, iy + 1)
                    && grid.is_interior(ix + 1, iy + 1);
                if interior {
                    let p = plaquette_flux(links, ix, iy);
                    values[iy * grid.nx() + ix] = Complex64::new(p.arg(), 0.0);
                }
            }
        }
        FieldDump {
            real: true,
            nx: grid.nx(),
            ny: grid.ny(),
            h: grid.h(),
            x0: grid.node_x(0),
            y0: grid.node_y(0),
            domain_tag: grid.domain().tag(),
            values,
        }
    }
}

pub fn write_dump(path: &Path, dump: &FieldDump) -> Result<()> {
    let mut out = Vec::with_capacity(128 + 16 * dump.values.len());
    let kind = if dump.real { "real" } else { "complex" };
    out.extend_from_slice(
        format!(
            "GFD1 {kind} nx={} ny={} h={} x0={} y0={} domain={} endian=le\n",
            dump.nx,
            dump.ny,
            fmt_f64(dump.h),
            fmt_f64(dump.x0),
            fmt_f64(dump.y0),
            dump.domain_tag
        )
        .as_bytes(),
    );
    for z in &dump.values {
        out.extend_from_slice(&z.re.to_le_bytes());
        if !dump.real {
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_dump(path: &Path) -> Result<FieldDump> {
    let bytes = std::fs::read(path)?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::CorruptDump("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| Error::CorruptDump("header is not utf-8".into()))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("GFD1") {
        return Err(Error::CorruptDump("bad magic, expected GFD1".into()));
    }
    let kind = parts
        .next()
        .ok_or_else(|| Error::CorruptDump("missing kind".into()))?;
    let real = match kind {
        "real" => true,
        "complex" => false,
        other => return Err(Error::CorruptDump(format!("bad kind {other}"))),
    };
    let mut nx = None;
    let mut ny = None;
    let mut h = None;
    let mut x0 = None;
    let mut y0 = None;
    let mut domain_tag = None;
    let mut endian = None;
    for kv in parts {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::CorruptDump(format!("bad header token {kv}")))?;
        match k {
            "nx" => nx = v.parse::<usize>().ok(),
            "ny" => ny = v.parse::<usize>().ok(),
            "h" => h = v.parse::<f64>().ok(),
            "x0" => x0 = v.parse::<f64>().ok(),
            "y0" => y0 = v.parse::<f64>().ok(),
            "domain" => domain_tag = Some(v.to_string()),
            "endian" => endian = Some(v.to_string()),
            other => return Err(Error::CorruptDump(format!("unknown header key {other}"))),
        }
    }
    let (nx, ny) = match (nx, ny) {
        (Some(a), Some(b)) if a > 0 && b > 0 => (a, b),
        _ => return Err(Error::CorruptDump("missing or invalid nx/ny".into())),
    };
    let h = h.ok_or_else(|| Error::CorruptDump("missing h".into()))?;
    let x0 = x0.ok_or_else(|| Error::CorruptDump("missing x0".into()))?;
    let y0 = y0.ok_or_else(|| Error::CorruptDump("missing y0".into()))?;
    let domain_tag = domain_tag.ok_or_else(|| Error::CorruptDump("missing domain".into()))?;
    if endian.as_deref() != Some("le") {
        return Err(Error::CorruptDump("unsupported endianness tag".into()));
    }
    let payload = &bytes[nl + 1..];
    let per_value = if real { 8 } else { 16 };
    if payload.len() != nx * ny * per_value {
        return Err(Error::CorruptDump(format!(
            "payload holds {} bytes, expected {}",
            payload.len(),
            nx * ny * per_value
        )));
    }
    let mut values = Vec::with_capacity(nx * ny);
    let mut off = 0;
    for _ in 0..nx * ny {
        let re = f64::from_le_bytes(payload[off..off + 8].try_into().unwrap());
        off += 8;
        let im = if real {
            0.0
        } else {
            let v = f64::from_le_bytes(payload[off..off + 8].try_into().unwrap());
            off += 8;
            v
        };
        values.push(Complex64::new(re, im));
    }
    Ok(FieldDump {
        real,
        nx,
        ny,
        h,
        x0,
        y0,
        domain_tag,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::gaussian_packet;
    use crate::lattice_gauge::{Domain, Grid};
    use std::sync::Arc;

    #[test]
    fn round_trip_is_byte_identical() {
        let g = Arc::new(Grid::build(Domain::Disc { radius: 1.0 }, 0.21).unwrap());
        let f = gaussian_packet(&g, (0.0, 0.0), (0.4, 0.1), (0.45, 0.45)).unwrap();
        let dump = FieldDump::from_field(&f);
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.gfd");
        let p2 = dir.path().join("b.gfd");
        write_dump(&p1, &dump).unwrap();
        let back = read_dump(&p1).unwrap();
        write_dump(&p2, &back).unwrap();
        let a = std::fs::read(&p1).unwrap();
        let b = std::fs::read(&p2).unwrap();
        assert_eq!(a, b, "dump -> read -> dump changed bytes");
        assert_eq!(back.nx, g.nx());
        assert!(!back.real);
    }

    #[test]
    fn reader_rejects_mismatched_headers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.gfd");
        std::fs::write(&p, b"GFD2 real nx=2 ny=2 h=1 x0=0 y0=0 domain=d endian=le\n").unwrap();
        assert!(matches!(read_dump(&p), Err(Error::CorruptDump(_))));
        // truncated payload
        std::fs::write(
            &p,
            b"GFD1 real nx=2 ny=2 h=1.0 x0=0.0 y0=0.0 domain=disc:1 endian=le\nshort",
        )
        .unwrap();
        assert!(matches!(read_dump(&p), Err(Error::CorruptDump(_))));
        // wrong endianness tag
        std::fs::write(
            &p,
            b"GFD1 real nx=1 ny=1 h=1.0 x0=0.0 y0=0.0 domain=disc:1 endian=be\n01234567",
        )
        .unwrap();
        assert!(matches!(read_dump(&p), Err(Error::CorruptDump(_))));
    }
}
