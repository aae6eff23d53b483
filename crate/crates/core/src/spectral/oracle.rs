//! Closed-form reference energies for the validated geometries (ħ = m = 1).

use super::bessel::bessel_zero;
use crate::error::{Error, Result};

/// Hard-wall rectangle eigenenergy: E = (π²/2)(n²/D² + m²/d²), n, m >= 1.
pub fn rectangle_oracle(width: f64, height: f64, n: u32, m: u32) -> f64 {
    assert!(width > 0.0 && height > 0.0 && n >= 1 && m >= 1);
    let p2 = std::f64::consts::PI * std::f64::consts::PI;
    0.5 * p2 * ((n * n) as f64 / (width * width) + (m * m) as f64 / (height * height))
}

/// Hard-wall disc eigenenergies.
///
/// Without flux: E = j_{|m|,k}² / (2R²) for integer angular index m and
/// radial index k >= 1. With a central semifluxon only the ground angular
/// family is exposed (angular index 0 stands for that family), returning
/// j_{1,k}² / (2R²) — the half-angle cos(θ/2) states built on the J₁ radial
/// profile. Other semifluxon modes are not covered by this closed form and
/// report `UnsupportedMode`.
pub fn disc_oracle(radius: f64, semifluxon: bool, radial_k: u32, angular_m: i32) -> Result<f64> {
    if radius <= 0.0 {
        return Err(Error::ConfigInvalid(format!(
            "disc radius must be positive, got {radius}"
        )));
    }
    if radial_k < 1 {
        return Err(Error::UnsupportedMode("radial index starts at 1".into()));
    }
    if semifluxon {
        if angular_m != 0 {
            return Err(Error::UnsupportedMode(format!(
                "semifluxon disc oracle covers only the ground angular family, got m={angular_m}"
            )));
        }
        let j = bessel_zero(1, radial_k);
        Ok(j * j / (2.0 * radius * radius))
    } else {
        let j = bessel_zero(angular_m.unsigned_abs(), radial_k);
        Ok(j * j / (2.0 * radius * radius))
    }
}
