//! Experiment configuration: strict TOML, unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentTag {
    Disc,
    RectangleEmpty,
    Grating,
    SolenoidLattice,
    TwoSolenoidCavity,
    DoubleLatticeTrap,
}

impl ExperimentTag {
    pub fn parse(s: &str) -> Result<ExperimentTag> {
        Ok(match s {
            "disc" => ExperimentTag::Disc,
            "rectangle_empty" => ExperimentTag::RectangleEmpty,
            "grating" => ExperimentTag::Grating,
            "solenoid_lattice" => ExperimentTag::SolenoidLattice,
            "two_solenoid_cavity" => ExperimentTag::TwoSolenoidCavity,
            "double_lattice_trap" => ExperimentTag::DoubleLatticeTrap,
            other => {
                return Err(Error::ConfigInvalid(format!(
                    "unknown experiment tag {other}"
                )))
            }
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentTag::Disc => "disc",
            ExperimentTag::RectangleEmpty => "rectangle_empty",
            ExperimentTag::Grating => "grating",
            ExperimentTag::SolenoidLattice => "solenoid_lattice",
            ExperimentTag::TwoSolenoidCavity => "two_solenoid_cavity",
            ExperimentTag::DoubleLatticeTrap => "double_lattice_trap",
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub radius: Option<f64>,
    pub width: Option<f64>,
    pub height: Option<f64>,
    /// Solenoid separation or lattice period L.
    pub separation: Option<f64>,
    pub slit_width: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxEntry {
    pub position: [f64; 2],
    pub fraction: f64,
    #[serde(default)]
    pub string_angle: f64,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FluxSection {
    pub lines: Vec<FluxEntry>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PacketSection {
    pub center: Option<[f64; 2]>,
    pub k: Option<[f64; 2]>,
    pub sigma: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub eigenpairs: Option<usize>,
    pub tolerance: Option<f64>,
    pub max_outer: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub solver_tol: Option<f64>,
    pub record_every: Option<usize>,
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AbsorberSection {
    pub enabled: Option<bool>,
    /// Uniform margin on all four walls.
    pub margin: Option<f64>,
    /// Per-wall margins (left, right, bottom, top); overrides `margin`.
    pub margins: Option<[f64; 4]>,
    pub strength: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OptionsSection {
    /// Grating line present (diffraction experiments).
    pub with_slits: Option<bool>,
    /// Flux lines present (off = control run).
    pub with_flux: Option<bool>,
    /// Run the packet-dynamics stage of the cavity experiment.
    pub dynamics: Option<bool>,
    /// Run the string-rotation cross-check stage.
    pub gauge_check: Option<bool>,
    /// solenoid_lattice mode: "diffraction" (default) or "barrier".
    pub mode: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: String,
    seed: Option<u64>,
    output_dir: Option<String>,
    geometry: Option<GeometrySection>,
    grid: Option<GridSection>,
    flux: Option<FluxSection>,
    packet: Option<PacketSection>,
    solver: Option<SolverSection>,
    evolution: Option<EvolutionSection>,
    absorber: Option<AbsorberSection>,
    options: Option<OptionsSection>,
}

/// A parsed and validated experiment configuration. Unset values fall back
/// to per-experiment defaults inside the experiment runners.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub tag: ExperimentTag,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub geometry: GeometrySection,
    pub grid: GridSection,
    pub flux: Option<FluxSection>,
    pub packet: PacketSection,
    pub solver: SolverSection,
    pub evolution: EvolutionSection,
    pub absorber: AbsorberSection,
    pub options: OptionsSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        let tag = ExperimentTag::parse(&raw.experiment)?;
        let cfg = ExperimentConfig {
            tag,
            seed: raw.seed.unwrap_or(7),
            output_dir: PathBuf::from(
                raw.output_dir
                    .unwrap_or_else(|| format!("out/{}", tag.as_str())),
            ),
            geometry: raw.geometry.unwrap_or_default(),
            grid: raw.grid.unwrap_or_default(),
            flux: raw.flux,
            packet: raw.packet.unwrap_or_default(),
            solver: raw.solver.unwrap_or_default(),
            evolution: raw.evolution.unwrap_or_default(),
            absorber: raw.absorber.unwrap_or_default(),
            options: raw.options.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Bare default configuration for an experiment tag.
    pub fn defaults(tag: ExperimentTag, seed: u64, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            tag,
            seed,
            output_dir: output_dir.into(),
            geometry: GeometrySection::default(),
            grid: GridSection::default(),
            flux: None,
            packet: PacketSection::default(),
            solver: SolverSection::default(),
            evolution: EvolutionSection::default(),
            absorber: AbsorberSection::default(),
            options: OptionsSection::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| -> Result<()> {
            if let Some(x) = v {
                if !(x > 0.0) {
                    return Err(Error::ConfigInvalid(format!(
                        "{name} must be positive, got {x}"
                    )));
                }
            }
            Ok(())
        };
        positive("grid.h", self.grid.h)?;
        positive("geometry.radius", self.geometry.radius)?;
        positive("geometry.width", self.geometry.width)?;
        positive("geometry.height", self.geometry.height)?;
        positive("geometry.separation", self.geometry.separation)?;
        positive("geometry.slit_width", self.geometry.slit_width)?;
        positive("solver.tolerance", self.solver.tolerance)?;
        positive("evolution.solver_tol", self.evolution.solver_tol)?;
        positive("absorber.margin", self.absorber.margin)?;
        positive("absorber.strength", self.absorber.strength)?;
        if let Some(mode) = &self.options.mode {
            if mode != "diffraction" && mode != "barrier" {
                return Err(Error::ConfigInvalid(format!(
                    "options.mode must be diffraction or barrier, got {mode}"
                )));
            }
        }
        // soft geometry advice for the trap experiment
        if self.tag == ExperimentTag::TwoSolenoidCavity {
            let d_w = self.geometry.width.unwrap_or(30.0);
            let l = self.geometry.separation.unwrap_or(6.0);
            let d_h = self.geometry.height.unwrap_or(1.0);
            if !(d_w > 2.0 * l && l > 2.0 * d_h) {
                eprintln!(
                    "warning: cavity proportions D={d_w}, L={l}, d={d_h} are outside the \
                     intended D >> L >> d regime"
                );
            }
        }
        Ok(())
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_toml_str(&text)
}
