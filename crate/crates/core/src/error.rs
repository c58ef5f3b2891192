use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulator and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("sites {0} and {1} coincide (distance 0)")]
    CoincidentSites(usize, usize),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("step size underflow at t = {t:.6e} (h = {h:.3e}) in trajectory {trajectory}")]
    StepUnderflow { trajectory: u64, t: f64, h: f64 },

    #[error("conservation violated in trajectory {trajectory}: {quantity} drift {drift:.3e} exceeds {limit:.1e}")]
    ConservationViolated {
        trajectory: u64,
        quantity: &'static str,
        drift: f64,
        limit: f64,
    },

    #[error("need at least 2 completed trajectories, got {0}")]
    TooFewTrajectories(usize),

    #[error("bogoliubov analysis requires periodic boundary couplings; rebuild the lattice with boundary = periodic")]
    NotPeriodic,

    #[error("unsupported for this geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("no transition: {0}")]
    NoTransition(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("hilbert space dimension {dim} exceeds cap {cap} (needs about {bytes} bytes)")]
    DimensionCap { dim: usize, cap: usize, bytes: usize },

    #[error("total spin count {0} exceeds the exact-solver cap of 12")]
    TooManySpins(usize),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("no collapse domain: no pair of curves overlaps after rescaling")]
    NoCollapseDomain,

    #[error("optimum on search-box boundary: {0}")]
    BoundaryMinimum(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("cache collision for hash {hash}: stored config differs from requested config")]
    CacheCollision { hash: String },

    #[error("budget exceeded: estimated {estimated:.2} core-hours > {limit:.2}; pass --allow-long to run anyway")]
    BudgetExceeded { estimated: f64, limit: f64 },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
