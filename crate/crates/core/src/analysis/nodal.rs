//! Nodal curve extraction for real fields.
//!
//! A link hosts a genuine node iff `v_i * s_ij * v_j < 0` with `s_ij` the ±1
//! link phase: the sign correction removes the spurious flips a gauge string
//! prints on the raw values, leaving exactly the gauge-invariant zeros of
//! |ψ|. Crossing points are chained cell by cell into polylines; around a
//! semifluxon plaquette the four link phases multiply to -1, so an odd number
//! of its edges carry genuine nodes and a curve is forced to start there.

use num_complex::Complex64;

use super::tail::principal_angle;
use crate::dynamics::WaveField;
use crate::error::{Error, Result};
use crate::lattice_gauge::{FluxLine, Grid, LinkField};

/// What a nodal curve ends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    /// Flux line index within the link field.
    Solenoid(usize),
    /// Domain wall (the curve left the interior).
    Boundary,
    /// The curve closed on itself.
    Closed,
    /// Dissolved in the interior (amplitude floor or resolution limit).
    Interior,
}

#[derive(Debug, Clone)]
pub struct NodalCurve {
    pub points: Vec<(f64, f64)>,
    pub start: Endpoint,
    pub end: Endpoint,
    pub closed: bool,
    pub length: f64,
}

impl NodalCurve {
    fn from_points(points: Vec<(f64, f64)>, start: Endpoint, end: Endpoint, closed: bool) -> Self {
        let length = points
            .windows(2)
            .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
            .sum();
        NodalCurve {
            points,
            start,
            end,
            closed,
            length,
        }
    }

    /// Largest distance of the curve's points from the best-fit ray anchored
    /// at `origin` (principal direction of the point cloud).
    pub fn max_ray_deviation(&self, origin: (f64, f64)) -> f64 {
        let ang = principal_angle(&self.points, origin);
        let (dx, dy) = (ang.cos(), ang.sin());
        self.points
            .iter()
            .map(|&(x, y)| (dx * (y - origin.1) - dy * (x - origin.0)).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum EdgeKind {
    H,
    V,
}

/// Extract all nodal curves of a real field.
///
/// `floor_rel` (relative to max |v|) discards sign flips where both endpoint
/// amplitudes sit below the floor — eigensolver noise, not physics. Pass 0.0
/// to keep everything.
pub fn extract_nodal_curves(
    v: &WaveField,
    links: &LinkField,
    floor_rel: f64,
) -> Result<Vec<NodalCurve>> {
    if !links.is_real() {
        return Err(Error::ComplexField);
    }
    let grid = v.grid();
    if links.meta() != grid.meta() {
        return Err(Error::DimensionMismatch {
            expected: grid.meta().interior_len,
            got: links.meta().interior_len,
        });
    }
    let vmax = v
        .values()
        .iter()
        .map(|z| z.re.abs().max(z.im.abs()))
        .fold(0.0f64, f64::max);
    for z in v.values() {
        if z.im.abs() > 1e-10 * vmax.max(1e-300) {
            return Err(Error::ComplexField);
        }
    }
    let floor = floor_rel * vmax;

    let (nx, ny) = (grid.nx(), grid.ny());
    let h = grid.h();
    let value = |ix: usize, iy: usize| -> Option<f64> {
        grid.dense_index(ix, iy).map(|n| v.values()[n].re)
    };

    // crossing points on genuine-node links
    let mut cross_h: Vec<Option<(f64, f64)>> = vec![None; (nx - 1) * ny];
    let mut cross_v: Vec<Option<(f64, f64)>> = vec![None; nx * (ny - 1)];
    for iy in 0..ny {
        for ix in 0..nx - 1 {
            if let (Some(a), Some(b)) = (value(ix, iy), value(ix + 1, iy)) {
                let s = links.sign_h(ix, iy) as f64;
                if a * s * b < 0.0 && a.abs().max(b.abs()) >= floor {
                    let t = a / (a - s * b);
                    cross_h[iy * (nx - 1) + ix] =
                        Some((grid.node_x(ix) + t * h, grid.node_y(iy)));
                }
            }
        }
    }
    for iy in 0..ny - 1 {
        for ix in 0..nx {
            if let (Some(a), Some(b)) = (value(ix, iy), value(ix, iy + 1)) {
                let s = links.sign_v(ix, iy) as f64;
                if a * s * b < 0.0 && a.abs().max(b.abs()) >= floor {
                    let t = a / (a - s * b);
                    cross_v[iy * nx + ix] = Some((grid.node_x(ix), grid.node_y(iy) + t * h));
                }
            }
        }
    }

    let mut walker = Walker {
        grid,
        cross_h,
        cross_v,
        nx,
        ny,
    };

    let mut curves = Vec::new();

    // solenoid-seeded curves first (semifluxon cells force odd edge parity)
    let solenoid_cell = |f: &FluxLine| -> Option<(usize, usize)> {
        let (sx, sy) = f.position();
        let (cx, cy) = grid.nearest_plaquette(sx, sy);
        if cx >= 0 && cy >= 0 && (cx as usize) < nx - 1 && (cy as usize) < ny - 1 {
            Some((cx as usize, cy as usize))
        } else {
            None
        }
    };
    for (k, f) in links.fluxes().iter().enumerate() {
        if !f.is_half_integer() {
            continue;
        }
        let Some(cell) = solenoid_cell(f) else { continue };
        loop {
            let Some(first) = walker.take_any_edge_of_cell(cell) else { break };
            // continue on the far side of the consumed edge
            match walker.neighbor_cell(cell, first.kind, first.ix, first.iy) {
                Some(cont) => {
                    let (points, end) = walker.march(cont, first, links, &solenoid_cell);
                    curves.push(NodalCurve::from_points(
                        points,
                        Endpoint::Solenoid(k),
                        end,
                        false,
                    ));
                }
                None => {
                    curves.push(NodalCurve::from_points(
                        vec![first.point],
                        Endpoint::Solenoid(k),
                        Endpoint::Boundary,
                        false,
                    ));
                }
            }
        }
    }

    // boundary-seeded curves: the consumed edge faces outside, so the march
    // continues inside the seed cell itself
    for start_cell in walker.boundary_cells() {
        loop {
            let Some(first) = walker.take_boundary_edge_of_cell(start_cell) else { break };
            let (points, end) = walker.march(start_cell, first, links, &solenoid_cell);
            curves.push(NodalCurve::from_points(points, Endpoint::Boundary, end, false));
        }
    }

    // remaining crossings form closed loops
    while let Some((cell, edge)) = walker.any_remaining_edge() {
        let (points, end) = walker.march(cell, edge, links, &solenoid_cell);
        let closed = end == Endpoint::Interior || end == Endpoint::Closed;
        curves.push(NodalCurve::from_points(
            points,
            Endpoint::Closed,
            if closed { Endpoint::Closed } else { end },
            closed,
        ));
    }

    Ok(curves)
}

struct Walker<'a> {
    grid: &'a Grid,
    cross_h: Vec<Option<(f64, f64)>>,
    cross_v: Vec<Option<(f64, f64)>>,
    nx: usize,
    ny: usize,
}

#[derive(Clone, Copy)]
struct Edge {
    kind: EdgeKind,
    ix: usize,
    iy: usize,
    point: (f64, f64),
}

impl Walker<'_> {
    /// Edges of cell (cx, cy): bottom/top horizontal, left/right vertical.
    fn cell_edges(&self, cell: (usize, usize)) -> [(EdgeKind, usize, usize); 4] {
        let (cx, cy) = cell;
        [
            (EdgeKind::H, cx, cy),
            (EdgeKind::V, cx + 1, cy),
            (EdgeKind::H, cx, cy + 1),
            (EdgeKind::V, cx, cy),
        ]
    }

    fn peek(&self, kind: EdgeKind, ix: usize, iy: usize) -> Option<(f64, f64)> {
        match kind {
            EdgeKind::H => self.cross_h[iy * (self.nx - 1) + ix],
            EdgeKind::V => self.cross_v[iy * self.nx + ix],
        }
    }

    fn take(&mut self, kind: EdgeKind, ix: usize, iy: usize) -> Option<(f64, f64)> {
        let slot = match kind {
            EdgeKind::H => &mut self.cross_h[iy * (self.nx - 1) + ix],
            EdgeKind::V => &mut self.cross_v[iy * self.nx + ix],
        };
        slot.take()
    }

    fn take_any_edge_of_cell(&mut self, cell: (usize, usize)) -> Option<Edge> {
        for (kind, ix, iy) in self.cell_edges(cell) {
            if let Some(point) = self.take(kind, ix, iy) {
                return Some(Edge { kind, ix, iy, point });
            }
        }
        None
    }

    /// Pick the crossed edge of a border cell that faces the outside.
    fn take_boundary_edge_of_cell(&mut self, cell: (usize, usize)) -> Option<Edge> {
        for (kind, ix, iy) in self.cell_edges(cell) {
            if self.peek(kind, ix, iy).is_some() && self.edge_faces_outside(cell, kind, ix, iy) {
                let point = self.take(kind, ix, iy).unwrap();
                return Some(Edge { kind, ix, iy, point });
            }
        }
        None
    }

    fn edge_faces_outside(&self, cell: (usize, usize), kind: EdgeKind, ix: usize, iy: usize) -> bool {
        // the neighbor cell across this edge is outside the lattice or
        // touches exterior nodes
        match self.neighbor_cell(cell, kind, ix, iy) {
            None => true,
            Some(c) => !self.cell_fully_interior(c),
        }
    }

    fn neighbor_cell(
        &self,
        cell: (usize, usize),
        kind: EdgeKind,
        ix: usize,
        iy: usize,
    ) -> Option<(usize, usize)> {
        let (cx, cy) = cell;
        match kind {
            EdgeKind::H => {
                if iy == cy {
                    (cy > 0).then(|| (cx, cy - 1))
                } else {
                    (cy + 2 < self.ny).then(|| (cx, cy + 1))
                }
            }
            EdgeKind::V => {
                if ix == cx {
                    (cx > 0).then(|| (cx - 1, cy))
                } else {
                    (cx + 2 < self.nx).then(|| (cx + 1, cy))
                }
            }
        }
    }

    fn cell_fully_interior(&self, cell: (usize, usize)) -> bool {
        let (cx, cy) = cell;
        self.grid.is_interior(cx, cy)
            && self.grid.is_interior(cx + 1, cy)
            && self.grid.is_interior(cx, cy + 1)
            && self.grid.is_interior(cx + 1, cy + 1)
    }

    fn boundary_cells(&self) -> Vec<(usize, usize)> {
        let mut cells = Vec::new();
        for cy in 0..self.ny - 1 {
            for cx in 0..self.nx - 1 {
                if !self.cell_fully_interior((cx, cy)) || cx == 0 || cy == 0
                    || cx == self.nx - 2 || cy == self.ny - 2
                {
                    cells.push((cx, cy));
                }
            }
        }
        cells
    }

    fn any_remaining_edge(&mut self) -> Option<((usize, usize), Edge)> {
        for iy in 0..self.ny {
            for ix in 0..self.nx - 1 {
                if let Some(point) = self.peek(EdgeKind::H, ix, iy) {
                    self.take(EdgeKind::H, ix, iy);
                    let edge = Edge { kind: EdgeKind::H, ix, iy, point };
                    // start from the cell above the edge (or below at the rim)
                    let cell = if iy < self.ny - 1 { (ix, iy) } else { (ix, iy - 1) };
                    return Some((cell, edge));
                }
            }
        }
        for iy in 0..self.ny - 1 {
            for ix in 0..self.nx {
                if let Some(point) = self.peek(EdgeKind::V, ix, iy) {
                    self.take(EdgeKind::V, ix, iy);
                    let edge = Edge { kind: EdgeKind::V, ix, iy, point };
                    let cell = if ix < self.nx - 1 { (ix, iy) } else { (ix - 1, iy) };
                    return Some((cell, edge));
                }
            }
        }
        None
    }

    /// Follow the curve through `cell`, entering across the already-consumed
    /// `edge`, collecting crossing points until it terminates.
    fn march(
        &mut self,
        cell: (usize, usize),
        edge: Edge,
        links: &LinkField,
        solenoid_cell: &impl Fn(&FluxLine) -> Option<(usize, usize)>,
    ) -> (Vec<(f64, f64)>, Endpoint) {
        let mut points = vec![edge.point];
        let mut current_edge = edge;
        let mut current_cell = cell;
        let budget = 4 * (self.nx + 2) * (self.ny + 2);
        for _ in 0..budget {
            // does the curve end on a solenoid cell?
            for (k, f) in links.fluxes().iter().enumerate() {
                if f.is_half_integer() && solenoid_cell(f) == Some(current_cell) {
                    return (points, Endpoint::Solenoid(k));
                }
            }
            // choose the nearest unused crossing among the remaining edges
            let mut best: Option<Edge> = None;
            let mut best_d = f64::INFINITY;
            for (kind, ix, iy) in self.cell_edges(current_cell) {
                if kind == current_edge.kind && ix == current_edge.ix && iy == current_edge.iy {
                    continue;
                }
                if let Some(point) = self.peek(kind, ix, iy) {
                    let d = (point.0 - current_edge.point.0).powi(2)
                        + (point.1 - current_edge.point.1).powi(2);
                    if d < best_d {
                        best_d = d;
                        best = Some(Edge { kind, ix, iy, point });
                    }
                }
            }
            match best {
                None => {
                    let at_rim = !self.cell_fully_interior(current_cell)
                        || current_cell.0 == 0
                        || current_cell.1 == 0
                        || current_cell.0 == self.nx - 2
                        || current_cell.1 == self.ny - 2;
                    return (
                        points,
                        if at_rim { Endpoint::Boundary } else { Endpoint::Interior },
                    );
                }
                Some(next) => {
                    self.take(next.kind, next.ix, next.iy);
                    points.push(next.point);
                    current_edge = next;
                    match self.neighbor_cell(current_cell, next.kind, next.ix, next.iy) {
                        Some(c) => current_cell = c,
                        None => return (points, Endpoint::Boundary),
                    }
                }
            }
        }
        (points, Endpoint::Interior)
    }
}

/// Rotate a degenerate pair onto the half-angle form.
///
/// Within an exactly degenerate pair the nodal direction is a basis artifact;
/// this picks the member best aligned with `cos(θ_s/2)` measured from the
/// string direction of `flux` (so its nodal ray points opposite the string),
/// weighted by the cluster density. Returns a normalized real field.
pub fn align_cluster_to_half_angle(
    v1: &WaveField,
    v2: &WaveField,
    flux: &FluxLine,
) -> WaveField {
    let grid = v1.grid().clone();
    let (sx, sy) = flux.position();
    let alpha = flux.string_angle();
    let tau = std::f64::consts::TAU;
    let mut o1 = 0.0f64;
    let mut o2 = 0.0f64;
    for n in 0..grid.interior_len() {
        let (x, y) = grid.interior_position(n);
        let theta_s = (f64::atan2(y - sy, x - sx) - alpha).rem_euclid(tau);
        let dens = v1.values()[n].norm_sqr() + v2.values()[n].norm_sqr();
        let t = dens.sqrt() * (theta_s / 2.0).cos();
        o1 += v1.values()[n].re * t;
        o2 += v2.values()[n].re * t;
    }
    let scale = 1.0 / (o1 * o1 + o2 * o2).sqrt().max(1e-300);
    let (c1, c2) = (o1 * scale, o2 * scale);
    let values: Vec<Complex64> = v1
        .values()
        .iter()
        .zip(v2.values())
        .map(|(a, b)| a * c1 + b * c2)
        .collect();
    let mut out = WaveField::from_values(grid, values);
    out.normalize();
    out
}
