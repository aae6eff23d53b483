//! Crate-wide error type.
//!
//! One enum covers the whole pipeline so the CLI can map failures onto its
//! exit-code contract: configuration problems exit 2, numerical failures
//! (no convergence, solver stalls) exit 3, I/O and file-format problems exit 4.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid has no interior nodes (h too coarse for the domain)")]
    EmptyInterior,

    #[error("string ray of flux line {flux} passes through grid node ({x}, {y}) within tolerance")]
    StringThroughNode { flux: usize, x: f64, y: f64 },

    #[error("flux line position ({x}, {y}) lies outside the domain interior")]
    FluxOutsideDomain { x: f64, y: f64 },

    #[error("flux line position ({x}, {y}) lies on a grid line; snap it to a plaquette center")]
    FluxOnGridLine { x: f64, y: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigensolver did not converge after {iterations} iterations (worst residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("linear solver stalled after {iterations} iterations (relative residual {residual:.3e})")]
    SolverStall { iterations: usize, residual: f64 },

    #[error("wave packet not resolvable on this grid: {0}")]
    UnresolvablePacket(String),

    #[error("operation requires a real field (half-integer or zero flux fractions only)")]
    ComplexField,

    #[error("fit window holds only {columns} grid columns (need at least 8)")]
    WindowTooSmall { columns: usize },

    #[error("non-positive column mass inside the fit window")]
    NonPositiveMass,

    #[error("region contains no grid nodes")]
    EmptyRegion,

    #[error("no spectral peaks above threshold")]
    NoPeaks,

    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("corrupt field dump: {0}")]
    CorruptDump(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, printed alongside the message by the CLI.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::EmptyInterior => "empty-interior",
            Error::StringThroughNode { .. } => "string-through-node",
            Error::FluxOutsideDomain { .. } => "flux-outside-domain",
            Error::FluxOnGridLine { .. } => "flux-on-grid-line",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NoConvergence { .. } => "no-convergence",
            Error::SolverStall { .. } => "solver-stall",
            Error::UnresolvablePacket(_) => "unresolvable-packet",
            Error::ComplexField => "complex-field",
            Error::WindowTooSmall { .. } => "window-too-small",
            Error::NonPositiveMass => "non-positive-mass",
            Error::EmptyRegion => "empty-region",
            Error::NoPeaks => "no-peaks",
            Error::UnsupportedMode(_) => "unsupported-mode",
            Error::ConfigParse(_) => "config-parse",
            Error::ConfigInvalid(_) => "config-invalid",
            Error::CorruptDump(_) => "corrupt-dump",
            Error::Io(_) => "io",
        }
    }

    /// CLI exit code: 2 config, 3 numerical, 4 i/o, 2 for domain/setup errors
    /// (they are always induced by configuration at the CLI surface).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigParse(_) | Error::ConfigInvalid(_) => 2,
            Error::NoConvergence { .. } | Error::SolverStall { .. } => 3,
            Error::Io(_) | Error::CorruptDump(_) => 4,
            _ => 2,
        }
    }
}
