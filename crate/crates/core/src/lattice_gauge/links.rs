//! Per-link Peierls phases from signed string crossings.
//!
//! Each flux line owns a string: a ray from the solenoid toward the boundary.
//! The phase on an oriented link is `exp(i 2π Σ_k f_k c_k)` where `c_k` is the
//! signed number of crossings between the link segment and string `k`. Signs
//! are chosen so the counterclockwise product around any plaquette equals
//! `exp(i 2π Σ f_k)` over the fluxes it encloses — the discrete winding rule.
//!
//! When every fraction is a half-integer or integer the phases are computed
//! as `(-1)^crossings` in integer arithmetic, keeping everything downstream
//! exactly real.

use num_complex::Complex64;

use super::domain::FluxLine;
use super::grid::{Grid, GridMeta};
use crate::error::{Error, Result};

const TWO_PI: f64 = std::f64::consts::TAU;

/// Gauge field on lattice links.
///
/// Horizontal link `(ix, iy)` joins nodes `(ix, iy) → (ix+1, iy)`; vertical
/// link `(ix, iy)` joins `(ix, iy) → (ix, iy+1)`. Phases refer to that
/// canonical orientation; traversing a link backwards conjugates the phase.
#[derive(Debug, Clone)]
pub struct LinkField {
    meta: GridMeta,
    fluxes: Vec<FluxLine>,
    real: bool,
    /// signed crossings, flattened `[link * n_fluxes + k]`
    cross_h: Vec<i8>,
    cross_v: Vec<i8>,
    phases: Phases,
}

#[derive(Debug, Clone)]
enum Phases {
    Real { sh: Vec<i8>, sv: Vec<i8> },
    Complex { ph: Vec<Complex64>, pv: Vec<Complex64> },
}

impl LinkField {
    /// Count string crossings for every link and derive phase factors.
    ///
    /// Preconditions checked here: flux positions strictly inside the domain
    /// and off grid lines (snap first), and no string ray passing through a
    /// grid node within `1e-12 * h`.
    pub fn build(grid: &Grid, fluxes: &[FluxLine]) -> Result<LinkField> {
        let h = grid.h();
        let nf = fluxes.len();
        for f in fluxes {
            let (x, y) = f.position();
            if !grid.domain().contains(x, y) {
                return Err(Error::FluxOutsideDomain { x, y });
            }
            // distance to the nearest grid line in either direction
            let fx = ((x - grid.node_x(0)) / h).rem_euclid(1.0);
            let fy = ((y - grid.node_y(0)) / h).rem_euclid(1.0);
            let dx = fx.min(1.0 - fx) * h;
            let dy = fy.min(1.0 - fy) * h;
            if dx < 1e-9 * h || dy < 1e-9 * h {
                return Err(Error::FluxOnGridLine { x, y });
            }
        }
        // a string through a grid node makes crossing parity ill-defined
        let tol = 1e-12 * h;
        for (k, f) in fluxes.iter().enumerate() {
            let (sx, sy) = f.position();
            let (dx, dy) = (f.string_angle().cos(), f.string_angle().sin());
            for n in 0..grid.interior_len() {
                let (px, py) = grid.interior_position(n);
                let (rx, ry) = (px - sx, py - sy);
                let side = dx * ry - dy * rx;
                let along = rx * dx + ry * dy;
                if side.abs() <= tol && along >= -tol {
                    return Err(Error::StringThroughNode { flux: k, x: px, y: py });
                }
            }
        }

        let (nx, ny) = (grid.nx(), grid.ny());
        let nh = (nx - 1) * ny;
        let nv = nx * (ny - 1);
        let mut cross_h = vec![0i8; nh * nf];
        let mut cross_v = vec![0i8; nv * nf];

        for (k, f) in fluxes.iter().enumerate() {
            let (sx, sy) = f.position();
            let (dx, dy) = (f.string_angle().cos(), f.string_angle().sin());
            // side(P) = cross(d, P - S); sign of a crossing is sign(f_B - f_A)
            for iy in 0..ny {
                let ay = grid.node_y(iy);
                for ix in 0..nx - 1 {
                    let ax = grid.node_x(ix);
                    let bx = grid.node_x(ix + 1);
                    if let Some(c) = crossing(sx, sy, dx, dy, ax, ay, bx, ay) {
                        cross_h[(iy * (nx - 1) + ix) * nf + k] += c;
                    }
                }
            }
            for iy in 0..ny - 1 {
                let ay = grid.node_y(iy);
                let by = grid.node_y(iy + 1);
                for ix in 0..nx {
                    let ax = grid.node_x(ix);
                    if let Some(c) = crossing(sx, sy, dx, dy, ax, ay, ax, by) {
                        cross_v[(iy * nx + ix) * nf + k] += c;
                    }
                }
            }
        }

        let real = fluxes.iter().all(|f| f.is_half_integer() || f.is_trivial());
        let phases = if real {
            let semi: Vec<usize> = (0..nf).filter(|&k| fluxes[k].is_half_integer()).collect();
            let sign_of = |cs: &[i8]| -> i8 {
                let parity: i32 = semi.iter().map(|&k| cs[k] as i32).sum();
                if parity.rem_euclid(2) == 0 {
                    1
                } else {
                    -1
                }
            };
            let sh = (0..nh).map(|l| sign_of(&cross_h[l * nf..(l + 1) * nf])).collect();
            let sv = (0..nv).map(|l| sign_of(&cross_v[l * nf..(l + 1) * nf])).collect();
            Phases::Real { sh, sv }
        } else {
            let phase_of = |cs: &[i8]| -> Complex64 {
                let turns: f64 = (0..nf).map(|k| fluxes[k].flux_fraction() * cs[k] as f64).sum();
                Complex64::from_polar(1.0, TWO_PI * turns)
            };
            let ph = (0..nh).map(|l| phase_of(&cross_h[l * nf..(l + 1) * nf])).collect();
            let pv = (0..nv).map(|l| phase_of(&cross_v[l * nf..(l + 1) * nf])).collect();
            Phases::Complex { ph, pv }
        };

        Ok(LinkField {
            meta: grid.meta(),
            fluxes: fluxes.to_vec(),
            real,
            cross_h,
            cross_v,
            phases,
        })
    }

    pub fn meta(&self) -> GridMeta {
        self.meta
    }

    pub fn fluxes(&self) -> &[FluxLine] {
        &self.fluxes
    }

    /// True iff every flux fraction is a half-integer or integer after
    /// canonicalization; all stored phases are then exactly ±1.
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn crossing_count_h(&self, ix: usize, iy: usize, flux: usize) -> i32 {
        let nf = self.fluxes.len();
        self.cross_h[(iy * (self.meta.nx - 1) + ix) * nf + flux] as i32
    }

    pub fn crossing_count_v(&self, ix: usize, iy: usize, flux: usize) -> i32 {
        let nf = self.fluxes.len();
        self.cross_v[(iy * self.meta.nx + ix) * nf + flux] as i32
    }

    pub fn phase_h(&self, ix: usize, iy: usize) -> Complex64 {
        let l = iy * (self.meta.nx - 1) + ix;
        match &self.phases {
            Phases::Real { sh, .. } => Complex64::new(sh[l] as f64, 0.0),
            Phases::Complex { ph, .. } => ph[l],
        }
    }

    pub fn phase_v(&self, ix: usize, iy: usize) -> Complex64 {
        let l = iy * self.meta.nx + ix;
        match &self.phases {
            Phases::Real { sv, .. } => Complex64::new(sv[l] as f64, 0.0),
            Phases::Complex { pv, .. } => pv[l],
        }
    }

    /// ±1 sign of a horizontal link. Callers must hold `is_real()`.
    pub fn sign_h(&self, ix: usize, iy: usize) -> i8 {
        match &self.phases {
            Phases::Real { sh, .. } => sh[iy * (self.meta.nx - 1) + ix],
            Phases::Complex { .. } => panic!("sign_h on a complex link field"),
        }
    }

    pub fn sign_v(&self, ix: usize, iy: usize) -> i8 {
        match &self.phases {
            Phases::Real { sv, .. } => sv[iy * self.meta.nx + ix],
            Phases::Complex { .. } => panic!("sign_v on a complex link field"),
        }
    }
}

impl PartialEq for LinkField {
    fn eq(&self, other: &Self) -> bool {
        if self.meta != other.meta || self.real != other.real {
            return false;
        }
        match (&self.phases, &other.phases) {
            (Phases::Real { sh: a, sv: b }, Phases::Real { sh: c, sv: d }) => a == c && b == d,
            (Phases::Complex { ph: a, pv: b }, Phases::Complex { ph: c, pv: d }) => {
                a == c && b == d
            }
            _ => false,
        }
    }
}

/// Oriented product of the four link phases around plaquette `(ix, iy)`,
/// traversed counterclockwise. Equals `exp(i 2π Σ f_k)` over enclosed fluxes.
pub fn plaquette_flux(links: &LinkField, ix: usize, iy: usize) -> Complex64 {
    links.phase_h(ix, iy)
        * links.phase_v(ix + 1, iy)
        * links.phase_h(ix, iy + 1).conj()
        * links.phase_v(ix, iy).conj()
}

/// Vertex sign field g relating two real gauge-equivalent link fields:
/// `s_to(a,b) = g(a) g(b) s_from(a,b)` on every interior link, so a state
/// stored in gauge `from` is re-expressed in gauge `to` by multiplying with
/// g. Exists exactly when the two fields share all plaquette fluxes (same
/// solenoids, different strings); propagation is by breadth-first search and
/// every revisited node cross-checks consistency.
pub fn relative_gauge(from: &LinkField, to: &LinkField, grid: &Grid) -> Result<Vec<i8>> {
    if !from.is_real() || !to.is_real() {
        return Err(Error::ComplexField);
    }
    if from.meta() != grid.meta() || to.meta() != grid.meta() {
        return Err(Error::DimensionMismatch {
            expected: grid.meta().interior_len,
            got: from.meta().interior_len,
        });
    }
    let n = grid.interior_len();
    let mut g = vec![0i8; n];
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n {
        if g[start] != 0 {
            continue;
        }
        g[start] = 1;
        queue.push_back(start);
        while let Some(a) = queue.pop_front() {
            let (ix, iy) = grid.interior_node(a);
            let mut relate = |bx: usize, by: usize, s_from: i8, s_to: i8| -> Result<()> {
                if let Some(b) = grid.dense_index(bx, by) {
                    let want = g[a] * s_from * s_to;
                    if g[b] == 0 {
                        g[b] = want;
                        queue.push_back(b);
                    } else if g[b] != want {
                        return Err(Error::ConfigInvalid(
                            "link fields are not gauge equivalent".into(),
                        ));
                    }
                }
                Ok(())
            };
            if ix + 1 < grid.nx() {
                relate(ix + 1, iy, from.sign_h(ix, iy), to.sign_h(ix, iy))?;
            }
            if ix > 0 {
                relate(ix - 1, iy, from.sign_h(ix - 1, iy), to.sign_h(ix - 1, iy))?;
            }
            if iy + 1 < grid.ny() {
                relate(ix, iy + 1, from.sign_v(ix, iy), to.sign_v(ix, iy))?;
            }
            if iy > 0 {
                relate(ix, iy - 1, from.sign_v(ix, iy - 1), to.sign_v(ix, iy - 1))?;
            }
        }
    }
    Ok(g)
}

/// Signed crossing of segment A→B with the ray from S in direction d, if any.
fn crossing(
    sx: f64,
    sy: f64,
    dx: f64,
    dy: f64,
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
) -> Option<i8> {
    let fa = dx * (ay - sy) - dy * (ax - sx);
    let fb = dx * (by - sy) - dy * (bx - sx);
    if !((fa > 0.0 && fb < 0.0) || (fa < 0.0 && fb > 0.0)) {
        return None;
    }
    let s = fa / (fa - fb);
    let px = ax + s * (bx - ax);
    let py = ay + s * (by - ay);
    let t = (px - sx) * dx + (py - sy) * dy;
    if t <= 0.0 {
        return None;
    }
    Some(if fb > fa { 1 } else { -1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_gauge::Domain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_grid() -> Grid {
        // 3x3 interior nodes at 0.25, 0.5, 0.75
        Grid::build(
            Domain::Rectangle {
                width: 1.0,
                height: 1.0,
            },
            0.25,
        )
        .unwrap()
    }

    #[test]
    fn single_semifluxon_string_crossing_gives_minus_one() {
        let g = small_grid();
        let f = g.snap_flux(&FluxLine::semifluxon((0.3, 0.3))).unwrap();
        assert_eq!(f.position(), (0.375, 0.375));
        let lf = LinkField::build(&g, &[f]).unwrap();
        assert!(lf.is_real());
        // string runs along y = 0.375 toward +x: vertical links at x = 0.5,
        // 0.75 spanning y in (0.25, 0.5) are crossed once
        assert_eq!(lf.sign_v(1, 0), -1);
        assert_eq!(lf.crossing_count_v(1, 0, 0).abs(), 1);
        assert_eq!(lf.sign_v(2, 0), -1);
        // a link not crossing any string keeps phase +1
        assert_eq!(lf.sign_h(0, 2), 1);
        assert_eq!(lf.crossing_count_h(0, 2, 0), 0);
        assert_eq!(lf.phase_h(0, 2), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn two_semifluxon_strings_on_one_link_cancel() {
        // the two-solenoid encoding: strings pointing at each other annihilate
        // on every link between the solenoids
        let g = small_grid();
        let a = FluxLine::new((0.375, 0.375), 0.5, 0.0);
        let b = FluxLine::new((0.875, 0.375), 0.5, std::f64::consts::PI);
        let lf = LinkField::build(&g, &[a, b]).unwrap();
        // v link at x=0.5 between the solenoids: crossed by both strings
        assert_eq!(lf.crossing_count_v(1, 0, 0).abs(), 1);
        assert_eq!(lf.crossing_count_v(1, 0, 1).abs(), 1);
        assert_eq!(lf.sign_v(1, 0), 1);
    }

    #[test]
    fn plaquette_flux_trivial_values() {
        let g = small_grid();
        let f = g.snap_flux(&FluxLine::semifluxon((0.4, 0.4))).unwrap();
        let lf = LinkField::build(&g, &[f]).unwrap();
        // plaquette (0,0) holds the solenoid
        let p = plaquette_flux(&lf, 0, 0);
        assert!((p - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        // empty plaquette
        let p = plaquette_flux(&lf, 1, 1);
        assert!((p - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn plaquette_flux_quarter_fluxon() {
        let g = small_grid();
        let f = g
            .snap_flux(&FluxLine::new((0.4, 0.4), 0.25, 0.0))
            .unwrap();
        let lf = LinkField::build(&g, &[f]).unwrap();
        assert!(!lf.is_real());
        let p = plaquette_flux(&lf, 0, 0);
        let expect = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_2);
        assert!((p - expect).norm() < 1e-12, "got {p}");
    }

    #[test]
    fn rotate_string_full_turn_identical() {
        let g = small_grid();
        let f = g.snap_flux(&FluxLine::semifluxon((0.4, 0.6))).unwrap();
        let a = LinkField::build(&g, &[f]).unwrap();
        let b = LinkField::build(&g, &[f.rotate_string(f.string_angle() + TWO_PI)]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_flux_string_direction_irrelevant() {
        let g = small_grid();
        let f = g.snap_flux(&FluxLine::new((0.4, 0.6), 0.0, 0.0)).unwrap();
        let a = LinkField::build(&g, &[f]).unwrap();
        let b = LinkField::build(&g, &[f.rotate_string(std::f64::consts::PI)]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sign_v(1, 1), 1);
    }

    #[test]
    fn one_fluxon_periodicity_gives_identical_fields() {
        let g = small_grid();
        // dyadic fractions: bit-identical link fields
        for (fa, fb) in [(0.0, 1.0), (0.5, 1.5), (-0.25, 0.75)] {
            let a = LinkField::build(&g, &[FluxLine::new((0.375, 0.625), fa, 0.2)]).unwrap();
            let b = LinkField::build(&g, &[FluxLine::new((0.375, 0.625), fb, 0.2)]).unwrap();
            assert_eq!(a, b, "f={fa} vs f={fb}");
        }
        // generic fraction: identical plaquette fluxes to rounding error
        let a = LinkField::build(&g, &[FluxLine::new((0.375, 0.625), 0.3, 0.2)]).unwrap();
        let b = LinkField::build(&g, &[FluxLine::new((0.375, 0.625), 1.3, 0.2)]).unwrap();
        for iy in 0..g.ny() - 1 {
            for ix in 0..g.nx() - 1 {
                let pa = plaquette_flux(&a, ix, iy);
                let pb = plaquette_flux(&b, ix, iy);
                assert!((pa - pb).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn string_through_node_detected() {
        let g = small_grid();
        // aim the string from (0.375, 0.375) exactly at node (0.5, 0.5)
        let f = FluxLine::new((0.375, 0.375), 0.5, std::f64::consts::FRAC_PI_4);
        match LinkField::build(&g, &[f]) {
            Err(Error::StringThroughNode { .. }) => {}
            other => panic!("expected StringThroughNode, got {other:?}"),
        }
    }

    #[test]
    fn flux_on_grid_line_rejected() {
        let g = small_grid();
        let f = FluxLine::semifluxon((0.5, 0.375));
        assert!(matches!(
            LinkField::build(&g, &[f]),
            Err(Error::FluxOnGridLine { .. })
        ));
    }

    #[test]
    fn reality_signs_are_exact() {
        let g = small_grid();
        let f = g.snap_flux(&FluxLine::semifluxon((0.6, 0.6))).unwrap();
        let lf = LinkField::build(&g, &[f]).unwrap();
        assert!(lf.is_real());
        for iy in 0..g.ny() {
            for ix in 0..g.nx() - 1 {
                let p = lf.phase_h(ix, iy);
                assert!(p.im == 0.0 && (p.re == 1.0 || p.re == -1.0));
            }
        }
    }

    #[test]
    fn relative_gauge_transports_eigenvectors() {
        use crate::spectral::{lowest_eigenpairs, SparseHamiltonian};
        use std::sync::Arc;
        let g = Arc::new(Grid::build(Domain::Disc { radius: 1.0 }, 1.0 / 12.0).unwrap());
        let f = g.snap_flux(&FluxLine::semifluxon((0.0, 0.0))).unwrap();
        let lf_a = LinkField::build(&g, &[f]).unwrap();
        let lf_b = LinkField::build(&g, &[f.rotate_string(2.2)]).unwrap();
        let signs = relative_gauge(&lf_a, &lf_b, &g).unwrap();
        // s_b(ab) = g_a g_b s_a(ab) on every interior link
        for iy in 0..g.ny() {
            for ix in 0..g.nx() - 1 {
                if let (Some(a), Some(b)) = (g.dense_index(ix, iy), g.dense_index(ix + 1, iy)) {
                    assert_eq!(
                        lf_b.sign_h(ix, iy),
                        signs[a] * signs[b] * lf_a.sign_h(ix, iy)
                    );
                }
            }
        }
        // a transported eigenvector stays an eigenvector at the same energy
        let hm_a = SparseHamiltonian::assemble(&g, &lf_a).unwrap();
        let hm_b = SparseHamiltonian::assemble(&g, &lf_b).unwrap();
        let spec = lowest_eigenpairs(&hm_a, 1, 1e-11, 3).unwrap();
        let lam = spec.eigenvalues[0];
        let moved: Vec<Complex64> = spec.eigenvectors[0]
            .values()
            .iter()
            .zip(&signs)
            .map(|(z, &s)| z * s as f64)
            .collect();
        let hv = hm_b.matvec(&moved).unwrap();
        let res: f64 = hv
            .iter()
            .zip(&moved)
            .map(|(h, v)| (h - v * lam).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(res < 1e-8, "transported eigenvector residual {res:e}");
    }

    #[test]
    fn plaquette_consistency_random_configurations() {
        // discrete winding rule against a point-in-plaquette oracle
        let g = Grid::build(
            Domain::Rectangle {
                width: 2.0,
                height: 1.0,
            },
            0.1,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..25 {
            let nf = rng.gen_range(1..4);
            let mut fluxes = Vec::new();
            for _ in 0..nf {
                let x = rng.gen_range(0.15..1.85);
                let y = rng.gen_range(0.15..0.85);
                let frac = rng.gen_range(-1.5..1.5);
                let ang = rng.gen_range(0.0..TWO_PI);
                if let Ok(f) = g.snap_flux(&FluxLine::new((x, y), frac, ang)) {
                    fluxes.push(f);
                }
            }
            let lf = match LinkField::build(&g, &fluxes) {
                Ok(lf) => lf,
                Err(Error::StringThroughNode { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            for _ in 0..40 {
                let ix = rng.gen_range(0..g.nx() - 1);
                let iy = rng.gen_range(0..g.ny() - 1);
                let (cx0, cy0) = (g.node_x(ix), g.node_y(iy));
                let (cx1, cy1) = (g.node_x(ix + 1), g.node_y(iy + 1));
                let enclosed: f64 = fluxes
                    .iter()
                    .filter(|f| {
                        let (px, py) = f.position();
                        px > cx0 && px < cx1 && py > cy0 && py < cy1
                    })
                    .map(|f| f.flux_fraction())
                    .sum();
                let expect = Complex64::from_polar(1.0, TWO_PI * enclosed);
                let got = plaquette_flux(&lf, ix, iy);
                assert!(
                    (got - expect).norm() < 1e-12,
                    "plaquette ({ix},{iy}): got {got}, expected {expect}"
                );
            }
        }
    }
}
