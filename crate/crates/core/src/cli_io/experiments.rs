//! The canonical experiments, end to end: geometry setup, solves or
//! evolutions, analysis, artifact files, and a summary carrying every
//! acceptance metric.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, ExperimentTag};
use super::dump::{write_dump, FieldDump};
use super::pgm::{render_to_file, RenderMode};
use super::report::{fmt_f64, write_csv, Summary};
use crate::analysis::{
    align_cluster_to_half_angle, confinement_summary, extract_nodal_curves, far_field_spectrum,
    peak_angles, Endpoint, NodalCurve,
};
use crate::dynamics::{
    evolve, gaussian_packet, transverse_ground_packet, Absorber, EvolveConfig, EvolutionReport,
    Region,
};
use crate::error::{Error, Result};
use crate::lattice_gauge::{Domain, FluxLine, Grid, LinkField};
use crate::spectral::{
    disc_oracle, lowest_eigenpairs_with, rectangle_oracle, EigenOptions, SparseHamiltonian,
    Spectrum,
};

pub fn run(cfg: &ExperimentConfig) -> Result<Summary> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut summary = match cfg.tag {
        ExperimentTag::Disc => disc(cfg)?,
        ExperimentTag::RectangleEmpty => rectangle_empty(cfg)?,
        ExperimentTag::Grating => scattering(cfg, false)?,
        ExperimentTag::SolenoidLattice => {
            if cfg.options.mode.as_deref() == Some("barrier") {
                barrier(cfg)?
            } else {
                scattering(cfg, true)?
            }
        }
        ExperimentTag::TwoSolenoidCavity => cavity(cfg)?,
        ExperimentTag::DoubleLatticeTrap => trap(cfg)?,
    };
    summary.put("experiment", cfg.tag.as_str());
    summary.put_usize("seed", cfg.seed as usize);
    summary.write_to(&cfg.output_dir.join("summary.txt"))?;
    Ok(summary)
}

// ---------------------------------------------------------------- helpers

struct Setup {
    grid: Arc<Grid>,
    fluxes: Vec<FluxLine>,
    links: LinkField,
    h_op: SparseHamiltonian,
}

fn setup(domain: Domain, h: f64, fluxes: &[FluxLine]) -> Result<Setup> {
    let grid = Arc::new(Grid::build(domain, h)?);
    let snapped: Vec<FluxLine> = fluxes
        .iter()
        .map(|f| grid.snap_flux(f))
        .collect::<Result<_>>()?;
    let links = LinkField::build(&grid, &snapped)?;
    let h_op = SparseHamiltonian::assemble(&grid, &links)?;
    Ok(Setup {
        grid,
        fluxes: snapped,
        links,
        h_op,
    })
}

/// Grating variant: Dirichlet wall column with periodic slit openings.
fn setup_with_wall(
    domain: Domain,
    h: f64,
    fluxes: &[FluxLine],
    wall_x: f64,
    period: f64,
    slit_width: f64,
) -> Result<Setup> {
    let base = Arc::new(Grid::build(domain, h)?);
    let grid = Arc::new(mask_wall_column(&base, wall_x, period, slit_width)?);
    let snapped: Vec<FluxLine> = fluxes
        .iter()
        .map(|f| grid.snap_flux(f))
        .collect::<Result<_>>()?;
    let links = LinkField::build(&grid, &snapped)?;
    let h_op = SparseHamiltonian::assemble(&grid, &links)?;
    Ok(Setup {
        grid,
        fluxes: snapped,
        links,
        h_op,
    })
}

/// Remove the nodes of the column nearest `wall_x` except inside the slits
/// (|y mod period - period/2| < slit_width/2).
fn mask_wall_column(grid: &Grid, wall_x: f64, period: f64, slit_width: f64) -> Result<Grid> {
    let icol = (0..grid.nx())
        .min_by(|&a, &b| {
            (grid.node_x(a) - wall_x)
                .abs()
                .partial_cmp(&(grid.node_x(b) - wall_x).abs())
                .unwrap()
        })
        .ok_or(Error::EmptyInterior)?;
    let keep = |_ix: usize, iy: usize| -> bool {
        let y = grid.node_y(iy);
        let m = y.rem_euclid(period);
        (m - period / 2.0).abs() < slit_width / 2.0
    };
    grid.with_extra_mask(|ix, iy| ix != icol || keep(ix, iy))
}

fn flux_overrides(cfg: &ExperimentConfig) -> Option<Vec<FluxLine>> {
    cfg.flux.as_ref().map(|s| {
        s.lines
            .iter()
            .map(|e| FluxLine::new((e.position[0], e.position[1]), e.fraction, e.string_angle))
            .collect()
    })
}

/// Absorber from the config section; strength falls back to the calibrated
/// default, the margin to the experiment's geometry choice.
fn absorber_from(cfg: &ExperimentConfig, default_margin: f64) -> Absorber {
    let strength = cfg
        .absorber
        .strength
        .unwrap_or(Absorber::calibrated().strength);
    if let Some(margins) = cfg.absorber.margins {
        Absorber { margins, strength }
    } else {
        Absorber::uniform(cfg.absorber.margin.unwrap_or(default_margin), strength)
    }
}

fn write_spectrum_csv(path: &Path, spec: &Spectrum) -> Result<()> {
    let rows: Vec<Vec<String>> = (0..spec.len())
        .map(|i| {
            vec![
                i.to_string(),
                fmt_f64(spec.eigenvalues[i]),
                fmt_f64(spec.residual_norms[i]),
                spec.cluster_ids[i].to_string(),
            ]
        })
        .collect();
    write_csv(path, &["index", "eigenvalue", "residual", "cluster"], &rows)
}

fn write_states(dir: &Path, spec: &Spectrum, count: usize) -> Result<()> {
    for i in 0..count.min(spec.len()) {
        let dump = FieldDump::from_field(&spec.eigenvectors[i]);
        write_dump(&dir.join(format!("state_{i:02}.gfd")), &dump)?;
        render_to_file(
            &dump,
            RenderMode::Magnitude,
            &dir.join(format!("state_{i:02}_mag.pgm")),
        )?;
        if dump.real {
            render_to_file(
                &dump,
                RenderMode::Signed,
                &dir.join(format!("state_{i:02}_signed.pgm")),
            )?;
        }
    }
    Ok(())
}

fn write_nodal_curves(path: &Path, curves: &[NodalCurve]) -> Result<()> {
    use std::io::Write;
    let mut out = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        if i > 0 {
            writeln!(&mut out)?;
        }
        for &(x, y) in &c.points {
            writeln!(&mut out, "{} {}", fmt_f64(x), fmt_f64(y))?;
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_evolution_csv(path: &Path, rep: &EvolutionReport) -> Result<()> {
    let mut header: Vec<String> = vec!["step".into(), "time".into(), "norm".into(), "energy".into()];
    for name in &rep.region_names {
        header.push(format!("p_{name}"));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows: Vec<Vec<String>> = (0..rep.times.len())
        .map(|i| {
            let mut row = vec![
                rep.sample_steps[i].to_string(),
                fmt_f64(rep.times[i]),
                fmt_f64(rep.norms[i]),
                fmt_f64(rep.energies[i]),
            ];
            for p in &rep.region_probabilities[i] {
                row.push(fmt_f64(*p));
            }
            row
        })
        .collect();
    write_csv(path, &header_refs, &rows)
}

fn endpoint_label(e: Endpoint) -> String {
    match e {
        Endpoint::Solenoid(k) => format!("solenoid:{k}"),
        Endpoint::Boundary => "boundary".into(),
        Endpoint::Closed => "closed".into(),
        Endpoint::Interior => "interior".into(),
    }
}

/// Solve twice with every string rotated by a seeded random angle; returns
/// (max relative eigenvalue drift, max pointwise amplitude drift) over the
/// lowest `k` pairs. Quasi-degenerate neighbors (within 1e-3 relative) are
/// compared through their aggregated densities: their individual members
/// rotate freely under roundoff-level perturbations, the subspace does not.
#[allow(clippy::too_many_arguments)]
fn gauge_drift(
    domain: Domain,
    h: f64,
    fluxes: &[FluxLine],
    wall: Option<(f64, f64, f64)>,
    k: usize,
    tol: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    let build = |fl: &[FluxLine]| -> Result<Spectrum> {
        let s = match wall {
            Some((wx, period, slit)) => setup_with_wall(domain, h, fl, wx, period, slit)?,
            None => setup(domain, h, fl)?,
        };
        lowest_eigenpairs_with(
            &s.h_op,
            &EigenOptions {
                k,
                tol,
                seed,
                max_outer: 500,
                cg_max: 400_000,
            },
        )
    };
    let base = build(fluxes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let rotated: Vec<FluxLine> = fluxes
        .iter()
        .map(|f| f.rotate_string(rng.gen_range(0.3..std::f64::consts::TAU - 0.3)))
        .collect();
    let rot = build(&rotated)?;

    let n = base.len().min(rot.len()).min(k);
    let mut eig_drift = 0.0f64;
    for i in 0..n {
        let rel = (base.eigenvalues[i] - rot.eigenvalues[i]).abs() / base.eigenvalues[i].abs();
        eig_drift = eig_drift.max(rel);
    }
    // group by quasi-degeneracy and compare aggregated densities pointwise
    let mut density_drift = 0.0f64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n
            && (base.eigenvalues[j] - base.eigenvalues[j - 1]).abs()
                <= 1e-3 * base.eigenvalues[j - 1].abs()
        {
            j += 1;
        }
        let npts = base.eigenvectors[0].values().len();
        for p in 0..npts {
            let da: f64 = (i..j).map(|m| base.eigenvectors[m].values()[p].norm_sqr()).sum();
            let db: f64 = (i..j).map(|m| rot.eigenvectors[m].values()[p].norm_sqr()).sum();
            density_drift = density_drift.max((da.sqrt() - db.sqrt()).abs());
        }
        i = j;
    }
    Ok((eig_drift, density_drift))
}

// ---------------------------------------------------------------- disc

fn disc(cfg: &ExperimentConfig) -> Result<Summary> {
    let radius = cfg.geometry.radius.unwrap_or(1.0);
    let h = cfg.grid.h.unwrap_or(1.0 / 64.0);
    let k = cfg.solver.eigenpairs.unwrap_or(8);
    let tol = cfg.solver.tolerance.unwrap_or(1e-9);
    let max_outer = cfg.solver.max_outer.unwrap_or(400);
    let domain = Domain::Disc { radius };
    let fluxes = flux_overrides(cfg).unwrap_or_else(|| vec![FluxLine::semifluxon((0.0, 0.0))]);

    let solve = |hh: f64, tt: f64| -> Result<(Setup, Spectrum)> {
        let s = setup(domain, hh, &fluxes)?;
        let spec = lowest_eigenpairs_with(
            &s.h_op,
            &EigenOptions {
                k,
                tol: tt,
                seed: cfg.seed,
                max_outer,
                cg_max: 400_000,
            },
        )?;
        Ok((s, spec))
    };

    let (coarse_setup, coarse) = solve(h, tol)?;
    let (fine_setup, fine) = solve(h / 2.0, tol)?;

    // staircase boundaries converge at leading order h: two-grid Richardson
    let e_coarse = coarse.eigenvalues[0];
    let e_fine = fine.eigenvalues[0];
    let e_richardson = 2.0 * e_fine - e_coarse;
    let splitting = (fine.eigenvalues[1] - fine.eigenvalues[0]).abs() / fine.eigenvalues[0];

    let mut summary = Summary::new();
    summary.put_f64("radius", radius);
    summary.put_f64("h_coarse", h);
    summary.put_f64("h_fine", h / 2.0);
    summary.put_usize("interior_coarse", coarse_setup.grid.interior_len());
    summary.put_usize("interior_fine", fine_setup.grid.interior_len());
    summary.put_f64("ground_energy_coarse", e_coarse);
    summary.put_f64("ground_energy_fine", e_fine);
    summary.put_f64("ground_energy_richardson", e_richardson);
    summary.put_f64("cluster_splitting_rel", splitting);
    summary.put_f64(
        "residual_max",
        fine.residual_norms.iter().fold(0.0f64, |a, &b| a.max(b)),
    );
    let oracle = disc_oracle(radius, true, 1, 0)?;
    summary.put_f64("oracle_energy", oracle);
    summary.put_f64(
        "half_order_bessel_energy",
        PI * PI / (2.0 * radius * radius),
    );

    // nodal structure of the aligned ground pair (fine grid)
    if fine.len() >= 2 && fine.cluster_ids[0] == fine.cluster_ids[1] {
        let aligned = align_cluster_to_half_angle(
            &fine.eigenvectors[0],
            &fine.eigenvectors[1],
            &fine_setup.fluxes[0],
        );
        let curves = extract_nodal_curves(&aligned, &fine_setup.links, 1e-7)?;
        summary.put_usize("nodal_curve_count", curves.len());
        if let Some(c) = curves.first() {
            summary.put_f64(
                "nodal_max_ray_deviation",
                c.max_ray_deviation(fine_setup.fluxes[0].position()),
            );
            summary.put_f64("nodal_length", c.length);
            summary.put("nodal_start", endpoint_label(c.start));
            summary.put("nodal_end", endpoint_label(c.end));
        }
        write_nodal_curves(&cfg.output_dir.join("nodal_curves.txt"), &curves)?;
        let dump = FieldDump::from_field(&aligned);
        write_dump(&cfg.output_dir.join("ground_aligned.gfd"), &dump)?;
        render_to_file(
            &dump,
            RenderMode::Signed,
            &cfg.output_dir.join("ground_aligned_signed.pgm"),
        )?;
        render_to_file(
            &dump,
            RenderMode::Magnitude,
            &cfg.output_dir.join("ground_aligned_mag.pgm"),
        )?;
    }

    // gauge invariance cross-check on the coarse grid
    if cfg.options.gauge_check.unwrap_or(true) {
        let (eig_drift, den_drift) =
            gauge_drift(domain, h, &fluxes, None, k.min(8), 5e-13, cfg.seed)?;
        summary.put_f64("gauge_eigenvalue_drift_rel", eig_drift);
        summary.put_f64("gauge_density_drift", den_drift);
    }

    write_spectrum_csv(&cfg.output_dir.join("spectrum_coarse.csv"), &coarse)?;
    write_spectrum_csv(&cfg.output_dir.join("spectrum_fine.csv"), &fine)?;
    write_states(&cfg.output_dir, &fine, 4)?;
    // debug views of the lattice and the gauge field
    write_dump(
        &cfg.output_dir.join("grid_mask.gfd"),
        &FieldDump::from_grid_mask(&fine_setup.grid),
    )?;
    write_dump(
        &cfg.output_dir.join("plaquette_flux.gfd"),
        &FieldDump::from_plaquette_fluxes(&fine_setup.grid, &fine_setup.links),
    )?;
    Ok(summary)
}

// ---------------------------------------------------------------- rectangle

fn rectangle_empty(cfg: &ExperimentConfig) -> Result<Summary> {
    let width = cfg.geometry.width.unwrap_or(2.0);
    let height = cfg.geometry.height.unwrap_or(1.0);
    let h = cfg.grid.h.unwrap_or(1.0 / 32.0);
    let k = cfg.solver.eigenpairs.unwrap_or(4);
    let tol = cfg.solver.tolerance.unwrap_or(1e-10);
    let domain = Domain::Rectangle { width, height };

    let solve = |hh: f64| -> Result<Spectrum> {
        let s = setup(domain, hh, &[])?;
        lowest_eigenpairs_with(
            &s.h_op,
            &EigenOptions {
                k,
                tol,
                seed: cfg.seed,
                max_outer: cfg.solver.max_outer.unwrap_or(400),
                cg_max: 400_000,
            },
        )
    };
    let spec = solve(h)?;
    let spec_fine = solve(h / 2.0)?;

    let oracle = rectangle_oracle(width, height, 1, 1);
    let err_coarse = (spec.eigenvalues[0] - oracle).abs();
    let err_fine = (spec_fine.eigenvalues[0] - oracle).abs();

    let mut summary = Summary::new();
    summary.put_f64("width", width);
    summary.put_f64("height", height);
    summary.put_f64("h", h);
    summary.put_f64("ground_energy", spec.eigenvalues[0]);
    summary.put_f64("ground_energy_fine", spec_fine.eigenvalues[0]);
    summary.put_f64("oracle_energy", oracle);
    summary.put_f64("rel_error", err_coarse / oracle);
    summary.put_f64("rel_error_fine", err_fine / oracle);
    summary.put_f64("convergence_ratio", err_coarse / err_fine.max(1e-300));
    summary.put_f64(
        "residual_max",
        spec.residual_norms.iter().fold(0.0f64, |a, &b| a.max(b)),
    );
    write_spectrum_csv(&cfg.output_dir.join("spectrum.csv"), &spec)?;
    write_states(&cfg.output_dir, &spec, 2)?;
    Ok(summary)
}

// ---------------------------------------------------------------- scattering

/// Shared diffraction pipeline for `grating` (slits only) and
/// `solenoid_lattice` (slits plus a semifluxon between each pair of slits,
/// strings pointing straight up so the incident and far-field regions stay
/// free of gauge jumps).
fn scattering(cfg: &ExperimentConfig, with_flux_default: bool) -> Result<Summary> {
    let period = cfg.geometry.separation.unwrap_or(8.0);
    let slit_width = cfg.geometry.slit_width.unwrap_or(2.0);
    let width = cfg.geometry.width.unwrap_or(57.0);
    let height = cfg.geometry.height.unwrap_or(160.0);
    let h = cfg.grid.h.unwrap_or(0.15);
    let wall_x = 27.0_f64.min(width / 2.0);
    let with_slits = cfg.options.with_slits.unwrap_or(true);
    let with_flux = cfg.options.with_flux.unwrap_or(with_flux_default);
    let domain = Domain::Rectangle { width, height };

    // packet: λ/L fixed by the incident momentum; default λ = period/4
    let kx = cfg.packet.k.map(|k| k[0]).unwrap_or(2.0 * PI / (period / 4.0));
    let sigma = cfg.packet.sigma.unwrap_or([2.5, 4.0 * period]);
    let center = cfg
        .packet
        .center
        .unwrap_or([wall_x - 13.0, height / 2.0]);

    let mut fluxes = Vec::new();
    if with_flux {
        let n_per = (height / period).round() as i64;
        for n in 1..n_per {
            fluxes.push(FluxLine::new(
                (wall_x + h / 2.0, n as f64 * period + h / 2.0),
                0.5,
                PI / 2.0,
            ));
        }
    }
    let s = if with_slits {
        setup_with_wall(domain, h, &fluxes, wall_x, period, slit_width)?
    } else {
        setup(domain, h, &fluxes)?
    };

    let psi0 = gaussian_packet(&s.grid, (center[0], center[1]), (kx, 0.0), (sigma[0], sigma[1]))?;
    // measurement once the transmitted packet has cleared the grating
    let t_target = 9.2;
    let dt = cfg.evolution.dt.unwrap_or(0.4 * h * h);
    let steps = cfg
        .evolution
        .steps
        .unwrap_or_else(|| (t_target / dt).ceil() as usize);
    let mut ecfg = EvolveConfig::new(dt, steps);
    ecfg.solver_tol = cfg.evolution.solver_tol.unwrap_or(3e-8);
    ecfg.record_every = cfg.evolution.record_every.unwrap_or(100);
    ecfg.snapshot_every = cfg.evolution.snapshot_every;
    if cfg.absorber.enabled.unwrap_or(true) {
        ecfg.absorber = Some(absorber_from(cfg, 6.0));
    }
    let transmitted_region = Region::new(wall_x + 2.0, width - 7.0, 0.0, height);
    ecfg.regions = vec![
        ("transmitted".into(), transmitted_region),
        (
            "incident_side".into(),
            Region::new(0.0, wall_x - 2.0, 0.0, height),
        ),
    ];
    let report = evolve(&s.h_op, &psi0, &ecfg)?;

    let spec = far_field_spectrum(&report.final_field, transmitted_region, kx, period)?;
    let peaks = peak_angles(&spec, kx)?;

    let mut summary = Summary::new();
    summary.put_f64("period", period);
    summary.put_f64("slit_width", slit_width);
    summary.put_f64("incident_kx", kx);
    summary.put_f64("wavelength_over_period", 2.0 * PI / kx / period);
    summary.put("with_flux", if with_flux { "true" } else { "false" });
    summary.put_f64("h", h);
    summary.put_f64("dt", dt);
    summary.put_usize("steps", steps);
    summary.put_f64("transmitted_probability", spec.transmitted_probability);
    let parseval: f64 = spec.intensity.iter().sum::<f64>() - spec.transmitted_probability;
    summary.put_f64("parseval_abs_error", parseval.abs());
    summary.put_f64("k_bin_width", spec.bin_width);
    let (pk, pint) = spec.principal_peak();
    summary.put_f64("principal_peak_ky", pk);
    summary.put_f64("principal_peak_intensity", pint);
    let comb = PI / period;
    for (name, m) in [
        ("I_rel_0", 0.0),
        ("I_rel_pi_over_L", 1.0),
        ("I_rel_2pi_over_L", 2.0),
        ("I_rel_3pi_over_L", 3.0),
    ] {
        let v = spec
            .intensity_near(m * comb)
            .max(spec.intensity_near(-m * comb));
        summary.put_f64(name, v / pint);
    }
    summary.put_usize("peak_count", peaks.len());
    summary.put_f64("max_norm_drift", report.max_norm_drift);
    if let Some(t) = report.absorbed {
        summary.put_f64("absorbed_total", t.total());
    }

    // artifacts
    let rows: Vec<Vec<String>> = spec
        .ky
        .iter()
        .zip(&spec.intensity)
        .map(|(k, i)| vec![fmt_f64(*k), fmt_f64(*i)])
        .collect();
    write_csv(&cfg.output_dir.join("diffraction.csv"), &["ky", "intensity"], &rows)?;
    let rows: Vec<Vec<String>> = peaks
        .iter()
        .map(|(n, st)| vec![fmt_f64(*n), fmt_f64(*st)])
        .collect();
    write_csv(&cfg.output_dir.join("peaks.csv"), &["order", "sin_theta"], &rows)?;
    write_evolution_csv(&cfg.output_dir.join("evolution.csv"), &report)?;
    let dump = FieldDump::from_field(&report.final_field);
    write_dump(&cfg.output_dir.join("final_field.gfd"), &dump)?;
    render_to_file(
        &dump,
        RenderMode::Magnitude,
        &cfg.output_dir.join("final_field_mag.pgm"),
    )?;
    for (step, field) in &report.snapshots {
        write_dump(
            &cfg.output_dir.join(format!("snapshot_{step:06}.gfd")),
            &FieldDump::from_field(field),
        )?;
    }
    Ok(summary)
}

// ---------------------------------------------------------------- barrier

/// Slitless semifluxon column against a slow packet: transmission is blocked
/// because every transverse far-field channel is shifted to |ky| >= π/L,
/// above the packet's longitudinal energy.
fn barrier(cfg: &ExperimentConfig) -> Result<Summary> {
    let period = cfg.geometry.separation.unwrap_or(4.0);
    let width = cfg.geometry.width.unwrap_or(135.0);
    let height = cfg.geometry.height.unwrap_or(32.0);
    let h = cfg.grid.h.unwrap_or(1.0 / 3.0);
    let line_x = width / 3.0;
    let with_flux = cfg.options.with_flux.unwrap_or(true);
    let domain = Domain::Rectangle { width, height };

    let kx = cfg.packet.k.map(|k| k[0]).unwrap_or(0.3 * PI / period);
    let sigma = cfg.packet.sigma.unwrap_or([7.0, 6.0]);
    let center = cfg
        .packet
        .center
        .unwrap_or([line_x - 2.5 * sigma[0], height / 2.0]);

    let mut fluxes = Vec::new();
    if with_flux {
        let n_per = (height / period).round() as i64;
        for n in 0..n_per {
            fluxes.push(FluxLine::new(
                (line_x + h / 2.0, (n as f64 + 0.5) * period + h / 2.0),
                0.5,
                PI / 2.0,
            ));
        }
    }
    let s = setup(domain, h, &fluxes)?;
    let psi0 = gaussian_packet(&s.grid, (center[0], center[1]), (kx, 0.0), (sigma[0], sigma[1]))?;
    let px_measured = psi0.momentum_x();

    // time for the control packet to cross the measurement plane with its
    // slow momentum tail
    let t_target = 240.0;
    let dt = cfg.evolution.dt.unwrap_or(0.4 * h * h);
    let steps = cfg
        .evolution
        .steps
        .unwrap_or_else(|| (t_target / dt).ceil() as usize);
    let mut ecfg = EvolveConfig::new(dt, steps);
    ecfg.solver_tol = cfg.evolution.solver_tol.unwrap_or(1e-8);
    ecfg.record_every = cfg.evolution.record_every.unwrap_or(200);
    let measure_x = line_x + 2.0;
    ecfg.regions = vec![
        (
            "transmitted".into(),
            Region::new(measure_x, width, 0.0, height),
        ),
        ("reflected".into(), Region::new(0.0, measure_x, 0.0, height)),
    ];
    let report = evolve(&s.h_op, &psi0, &ecfg)?;

    let p0 = report.region_probabilities[0][0];
    let p_final = report.region_probabilities.last().unwrap()[0];
    let mut summary = Summary::new();
    summary.put_f64("period", period);
    summary.put("with_flux", if with_flux { "true" } else { "false" });
    summary.put_f64("h", h);
    summary.put_f64("px_target", kx);
    summary.put_f64("px_measured", px_measured);
    summary.put_f64("barrier_momentum", PI / period);
    summary.put_f64("initial_transmitted_probability", p0);
    summary.put_f64("transmitted_probability", p_final);
    summary.put_f64("time_final", dt * steps as f64);
    summary.put_f64("max_norm_drift", report.max_norm_drift);
    write_evolution_csv(&cfg.output_dir.join("evolution.csv"), &report)?;
    let dump = FieldDump::from_field(&report.final_field);
    write_dump(&cfg.output_dir.join("final_field.gfd"), &dump)?;
    render_to_file(
        &dump,
        RenderMode::Magnitude,
        &cfg.output_dir.join("final_field_mag.pgm"),
    )?;
    Ok(summary)
}

// ---------------------------------------------------------------- cavity

fn cavity(cfg: &ExperimentConfig) -> Result<Summary> {
    let width = cfg.geometry.width.unwrap_or(30.0);
    let height = cfg.geometry.height.unwrap_or(1.0);
    let sep = cfg.geometry.separation.unwrap_or(6.0);
    let h = cfg.grid.h.unwrap_or(1.0 / 32.0);
    let k = cfg.solver.eigenpairs.unwrap_or(32);
    let tol = cfg.solver.tolerance.unwrap_or(1e-13);
    let with_flux = cfg.options.with_flux.unwrap_or(true);
    let domain = Domain::Rectangle { width, height };
    let threshold = 2.0 * PI * PI / (height * height);

    // strings point at each other and annihilate between the solenoids
    let raw_fluxes = if with_flux {
        vec![
            FluxLine::new(((width - sep) / 2.0, height / 2.0), 0.5, 0.0),
            FluxLine::new(((width + sep) / 2.0, height / 2.0), 0.5, PI),
        ]
    } else {
        Vec::new()
    };
    let fluxes = flux_overrides(cfg).unwrap_or(raw_fluxes);

    let s = setup(domain, h, &fluxes)?;
    let opts = EigenOptions {
        k,
        tol,
        seed: cfg.seed,
        max_outer: cfg.solver.max_outer.unwrap_or(500),
        cg_max: 400_000,
    };
    let spec = lowest_eigenpairs_with(&s.h_op, &opts)?;

    let (xa, xb) = if s.fluxes.len() == 2 {
        (s.fluxes[0].position().0, s.fluxes[1].position().0)
    } else {
        ((width - sep) / 2.0, (width + sep) / 2.0)
    };
    let trap = Region::new(xa, xb, 0.0, height);
    let rows = confinement_summary(&spec, &s.links, &trap, threshold);

    let qualifying: Vec<&crate::analysis::ConfinementRow> = rows
        .iter()
        .filter(|r| r.bound && r.inside_probability > 0.9)
        .collect();
    let mut kappa_max_rel = 0.0f64;
    for r in qualifying.iter().take(3) {
        let formula = (2.0 * (threshold - r.energy)).sqrt();
        if let Some(t) = &r.tail {
            kappa_max_rel = kappa_max_rel.max((t.kappa - formula).abs() / formula);
        } else {
            kappa_max_rel = f64::INFINITY;
        }
    }

    let mut summary = Summary::new();
    summary.put_f64("width", width);
    summary.put_f64("height", height);
    summary.put_f64("separation", sep);
    summary.put_f64("h", h);
    summary.put("with_flux", if with_flux { "true" } else { "false" });
    summary.put_f64("threshold", threshold);
    summary.put_f64("trap_x0", xa);
    summary.put_f64("trap_x1", xb);
    summary.put_usize("bound_state_count", qualifying.len());
    summary.put_f64("kappa_max_rel_error_first3", kappa_max_rel);
    for (i, r) in qualifying.iter().take(3).enumerate() {
        summary.put_f64(&format!("bound_{i}_energy"), r.energy);
        summary.put_f64(&format!("bound_{i}_inside_probability"), r.inside_probability);
        if let Some(t) = &r.tail {
            summary.put_f64(&format!("bound_{i}_kappa"), t.kappa);
            summary.put_f64(
                &format!("bound_{i}_kappa_formula"),
                (2.0 * (threshold - r.energy)).sqrt(),
            );
        }
    }
    summary.put_f64(
        "residual_max",
        spec.residual_norms.iter().fold(0.0f64, |a, &b| a.max(b)),
    );

    // empty-cavity control: nearest-in-energy states carry ~L/D inside mass
    if with_flux {
        let control_setup = setup(domain, h, &[])?;
        let control = lowest_eigenpairs_with(&control_setup.h_op, &opts)?;
        let mut max_dev = 0.0f64;
        for r in qualifying.iter().take(3) {
            let nearest = (0..control.len())
                .min_by(|&a, &b| {
                    (control.eigenvalues[a] - r.energy)
                        .abs()
                        .partial_cmp(&(control.eigenvalues[b] - r.energy).abs())
                        .unwrap()
                })
                .unwrap();
            let p = control.eigenvectors[nearest].region_probability(&trap);
            max_dev = max_dev.max((p - sep / width).abs());
        }
        summary.put_f64("control_inside_prob_max_dev", max_dev);
        summary.put_f64("control_expected_fraction", sep / width);
    }

    // nodal topology of the lowest confined state
    if let Some(r0) = qualifying.first() {
        let curves = extract_nodal_curves(&spec.eigenvectors[r0.index], &s.links, 1e-6)?;
        summary.put_usize("nodal_curve_count", curves.len());
        let between = curves
            .iter()
            .flat_map(|c| c.points.iter())
            .filter(|p| p.0 > xa + 0.1 && p.0 < xb - 0.1)
            .count();
        summary.put_usize("nodal_points_between_solenoids", between);
        write_nodal_curves(&cfg.output_dir.join("nodal_curves.txt"), &curves)?;
    }

    // gauge invariance cross-check on a coarser grid
    if cfg.options.gauge_check.unwrap_or(true) && with_flux {
        let hg = h.max(1.0 / 16.0);
        let (eig_drift, den_drift) =
            gauge_drift(domain, hg, &fluxes, None, 8, 5e-13, cfg.seed)?;
        summary.put_f64("gauge_check_h", hg);
        summary.put_f64("gauge_eigenvalue_drift_rel", eig_drift);
        summary.put_f64("gauge_density_drift", den_drift);
    }

    // trapping dynamics (coarser grid): longitudinal energy 0.1 * threshold
    if cfg.options.dynamics.unwrap_or(true) {
        let hd = h.max(1.0 / 16.0);
        let sigma_x = cfg.packet.sigma.map(|s| s[0]).unwrap_or(1.5);
        let e_long = 0.1 * threshold;
        let kx = cfg
            .packet
            .k
            .map(|k| k[0])
            .unwrap_or((2.0 * (e_long - 1.0 / (8.0 * sigma_x * sigma_x))).sqrt());
        let t_total = 4.0 * sep / kx;
        let dt = cfg.evolution.dt.unwrap_or(0.4 * hd * hd);
        let steps = cfg.evolution.steps.unwrap_or((t_total / dt).ceil() as usize);

        let run_dyn = |fl: &[FluxLine]| -> Result<f64> {
            let sd = setup(domain, hd, fl)?;
            let psi0 = transverse_ground_packet(&sd.grid, (xa + xb) / 2.0, sigma_x, kx)?;
            let mut ecfg = EvolveConfig::new(dt, steps);
            ecfg.solver_tol = cfg.evolution.solver_tol.unwrap_or(1e-9);
            ecfg.record_every = cfg.evolution.record_every.unwrap_or(200);
            ecfg.regions = vec![("trap".into(), trap)];
            let rep = evolve(&sd.h_op, &psi0, &ecfg)?;
            write_evolution_csv(
                &cfg.output_dir.join(if fl.is_empty() {
                    "evolution_control.csv"
                } else {
                    "evolution_trap.csv"
                }),
                &rep,
            )?;
            Ok(rep.region_probabilities.last().unwrap()[0])
        };
        let retained = run_dyn(&fluxes)?;
        let control = run_dyn(&[])?;
        summary.put_f64("dynamics_h", hd);
        summary.put_f64("dynamics_kx", kx);
        summary.put_f64("dynamics_time", dt * steps as f64);
        summary.put_f64("trapped_retention", retained);
        summary.put_f64("control_retention", control);
    }

    // artifacts
    write_spectrum_csv(&cfg.output_dir.join("spectrum.csv"), &spec)?;
    let rows_csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.index.to_string(),
                fmt_f64(r.energy),
                fmt_f64(r.inside_probability),
                r.tail.map(|t| fmt_f64(t.kappa)).unwrap_or_default(),
                fmt_f64((2.0 * (threshold - r.energy).max(0.0)).sqrt()),
                if r.bound { "bound" } else { "unbound" }.to_string(),
            ]
        })
        .collect();
    write_csv(
        &cfg.output_dir.join("confinement.csv"),
        &["index", "energy", "inside_probability", "kappa", "kappa_formula", "class"],
        &rows_csv,
    )?;
    write_states(&cfg.output_dir, &spec, 4)?;
    Ok(summary)
}

// ---------------------------------------------------------------- trap

/// Two facing columns of semifluxons inside an absorbing rectangle: a slow
/// packet launched between them stays put while the no-flux control drifts
/// away and is absorbed.
fn trap(cfg: &ExperimentConfig) -> Result<Summary> {
    let period = cfg.geometry.separation.unwrap_or(8.0);
    let width = cfg.geometry.width.unwrap_or(64.0);
    let height = cfg.geometry.height.unwrap_or(48.0);
    let h = cfg.grid.h.unwrap_or(0.25);
    let with_flux = cfg.options.with_flux.unwrap_or(true);
    let domain = Domain::Rectangle { width, height };
    let (xa, xb) = (width / 2.0 - 12.0, width / 2.0 + 12.0);

    let mut fluxes = Vec::new();
    if with_flux {
        let n_per = (height / period).round() as i64;
        for n in 0..n_per {
            let y = (n as f64 + 0.5) * period + h / 2.0;
            fluxes.push(FluxLine::new((xa + h / 2.0, y), 0.5, PI / 2.0));
            fluxes.push(FluxLine::new((xb + h / 2.0, y), 0.5, PI / 2.0));
        }
    }
    let s = setup(domain, h, &fluxes)?;
    let kx = cfg.packet.k.map(|k| k[0]).unwrap_or(0.2);
    let sigma = cfg.packet.sigma.unwrap_or([4.0, 8.0]);
    let psi0 = gaussian_packet(
        &s.grid,
        (width / 2.0, height / 2.0),
        (kx, 0.0),
        (sigma[0], sigma[1]),
    )?;

    let t_target = 150.0;
    let dt = cfg.evolution.dt.unwrap_or(0.4 * h * h);
    let steps = cfg
        .evolution
        .steps
        .unwrap_or_else(|| (t_target / dt).ceil() as usize);
    let mut ecfg = EvolveConfig::new(dt, steps);
    ecfg.solver_tol = cfg.evolution.solver_tol.unwrap_or(1e-8);
    ecfg.record_every = cfg.evolution.record_every.unwrap_or(200);
    ecfg.absorber = Some(absorber_from(cfg, 6.0));
    ecfg.regions = vec![(
        "between_columns".into(),
        Region::new(xa, xb, 0.0, height),
    )];
    let report = evolve(&s.h_op, &psi0, &ecfg)?;

    let mut summary = Summary::new();
    summary.put_f64("period", period);
    summary.put("with_flux", if with_flux { "true" } else { "false" });
    summary.put_f64("column_x0", xa);
    summary.put_f64("column_x1", xb);
    summary.put_f64("kx", kx);
    summary.put_f64("time_final", dt * steps as f64);
    summary.put_f64(
        "retention_between_columns",
        report.region_probabilities.last().unwrap()[0],
    );
    if let Some(t) = report.absorbed {
        summary.put_f64("absorbed_total", t.total());
    }
    write_evolution_csv(&cfg.output_dir.join("evolution.csv"), &report)?;
    let dump = FieldDump::from_field(&report.final_field);
    write_dump(&cfg.output_dir.join("final_field.gfd"), &dump)?;
    render_to_file(
        &dump,
        RenderMode::Magnitude,
        &cfg.output_dir.join("final_field_mag.pgm"),
    )?;
    Ok(summary)
}
