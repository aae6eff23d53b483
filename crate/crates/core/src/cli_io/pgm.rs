//! Heat-map rendering to 8-bit binary portable graymaps.
//!
//! Deterministic pixel mapping, no image-library coupling. Row 0 of the image
//! is the top of the domain (largest y). Exterior nodes render as byte 0; in
//! signed mode the data range maps symmetrically about mid-gray 128, so
//! interior bytes stay within 1..=255.

use std::path::Path;

use super::dump::FieldDump;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderMode {
    /// |v| mapped linearly onto 0..=255.
    Magnitude,
    /// Real value mapped onto 1..=255 with zero at 128 (requires real data).
    Signed,
}

impl RenderMode {
    pub fn parse(s: &str) -> Result<RenderMode> {
        match s {
            "magnitude" => Ok(RenderMode::Magnitude),
            "signed" => Ok(RenderMode::Signed),
            other => Err(Error::UnsupportedMode(format!(
                "render mode {other} (use magnitude|signed)"
            ))),
        }
    }
}

pub fn render_heatmap(dump: &FieldDump, mode: RenderMode) -> Result<Vec<u8>> {
    if mode == RenderMode::Signed && !dump.real {
        return Err(Error::UnsupportedMode(
            "signed rendering needs a real field".into(),
        ));
    }
    let (nx, ny) = (dump.nx, dump.ny);
    let mut img = Vec::with_capacity(32 + nx * ny);
    img.extend_from_slice(format!("P5\n{nx} {ny}\n255\n").as_bytes());
    match mode {
        RenderMode::Magnitude => {
            let max = dump
                .values
                .iter()
                .map(|z| z.norm())
                .fold(0.0f64, f64::max);
            for iy in (0..ny).rev() {
                for ix in 0..nx {
                    let v = dump.value(ix, iy).norm();
                    let byte = if max > 0.0 {
                        (255.0 * v / max).round().clamp(0.0, 255.0) as u8
                    } else {
                        0
                    };
                    img.push(byte);
                }
            }
        }
        RenderMode::Signed => {
            let max = dump
                .values
                .iter()
                .map(|z| z.re.abs())
                .fold(0.0f64, f64::max);
            for iy in (0..ny).rev() {
                for ix in 0..nx {
                    let v = dump.value(ix, iy).re;
                    // exact zeros (exterior fill) stay black
                    let byte = if max > 0.0 && v != 0.0 {
                        (128.0 + 127.0 * v / max).round().clamp(1.0, 255.0) as u8
                    } else {
                        0
                    };
                    img.push(byte);
                }
            }
        }
    }
    Ok(img)
}

pub fn render_to_file(dump: &FieldDump, mode: RenderMode, path: &Path) -> Result<()> {
    let img = render_heatmap(dump, mode)?;
    std::fs::write(path, img)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn dump_of(nx: usize, ny: usize, vals: Vec<Complex64>) -> FieldDump {
        FieldDump {
            real: vals.iter().all(|z| z.im == 0.0),
            nx,
            ny,
            h: 1.0,
            x0: 0.0,
            y0: 0.0,
            domain_tag: "rectangle:1:1".into(),
            values: vals,
        }
    }

    #[test]
    fn zero_field_renders_black() {
        let d = dump_of(3, 2, vec![Complex64::new(0.0, 0.0); 6]);
        let img = render_heatmap(&d, RenderMode::Magnitude).unwrap();
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&img[..header.len()], header);
        assert!(img[header.len()..].iter().all(|&b| b == 0));
    }

    #[test]
    fn single_bright_cell_lands_at_matching_pixel() {
        let mut vals = vec![Complex64::new(0.0, 0.0); 6];
        vals[1] = Complex64::new(2.0, 0.0); // (ix=1, iy=0)
        let d = dump_of(3, 2, vals);
        let img = render_heatmap(&d, RenderMode::Magnitude).unwrap();
        let px = &img[b"P5\n3 2\n255\n".len()..];
        // iy=0 is the bottom row, image row 1
        assert_eq!(px[1 * 3 + 1], 255);
        assert_eq!(px.iter().filter(|&&b| b != 0).count(), 1);
    }

    #[test]
    fn signed_mode_is_symmetric_about_midgray() {
        let vals = vec![
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        let d = dump_of(3, 1, vals);
        let img = render_heatmap(&d, RenderMode::Signed).unwrap();
        let px = &img[b"P5\n3 1\n255\n".len()..];
        assert_eq!(px[0], 1);
        assert_eq!(px[1], 0); // exact zero renders as exterior black
        assert_eq!(px[2], 255);
    }

    #[test]
    fn signed_mode_rejects_complex_dumps() {
        let d = dump_of(1, 1, vec![Complex64::new(0.0, 1.0)]);
        assert!(matches!(
            render_heatmap(&d, RenderMode::Signed),
            Err(Error::UnsupportedMode(_))
        ));
    }
}
