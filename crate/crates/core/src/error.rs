use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("{what} did not converge (defect {defect:e})")]
    NonConvergent { what: &'static str, defect: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unstable dispersion at p = {p:?}: |G_p| = {g:e} >= F_p = {f:e}")]
    UnstableDispersion { p: [i32; 3], f: f64, g: f64 },

    #[error("lattice point {0:?} is not a mode of the observable")]
    MissingMode([i32; 3]),

    #[error("mode {0:?} has no partner -p in the mode list")]
    UnpairedMode([i32; 3]),

    #[error("mode index {mode} out of range for {modes} modes")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("occupation with {found} excitations exceeds N = {n}")]
    OccupationOverflow { n: usize, found: usize },

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("invalid mode set: {0}")]
    InvalidModes(String),
}

pub type Result<T> = core::result::Result<T, Error>;
