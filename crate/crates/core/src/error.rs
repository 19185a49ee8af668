use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse expression '{input}' at byte {position}: {message}")]
    Parse {
        input: String,
        position: usize,
        message: String,
    },
    #[error("degenerate domain: L = {0} must be positive")]
    DegenerateDomain(f64),
    #[error("not a single-well potential: {0}")]
    NotSingleWell(String),
    #[error("validation grid too small: {0} < 16 points")]
    ValidationGridTooSmall(usize),
    #[error("energy {energy} is below the ground energy {ground}")]
    EnergyBelowGround { energy: f64, ground: f64 },
    #[error("point {x} lies outside [0, {length}]")]
    OutOfDomain { x: f64, length: f64 },
    #[error("agmon profile needs at least 64 grid points, got {0}")]
    ProfileGridTooSmall(usize),
    #[error("grid needs at least 32 interior points, got {0}")]
    GridTooSmall(usize),
    #[error("grid too coarse: spacing {spacing} exceeds eps/2 = {limit} at eps = {eps}")]
    GridTooCoarse { eps: f64, spacing: f64, limit: f64 },
    #[error("semiclassical parameter must be positive, got {0}")]
    NonPositiveEps(f64),
    #[error("no eigenvalue in window [{lo}, {hi}]")]
    WindowEmpty { lo: f64, hi: f64 },
    #[error("inverse iteration did not converge after {0} steps")]
    NoConvergence(usize),
    #[error("eigenvalue cluster near {0} is not simple")]
    DegenerateCluster(f64),
    #[error("Prüfer integration step fell below {min_step} at x = {x}")]
    PhaseOverflow { x: f64, min_step: f64 },
    #[error("boundary trace limit is not defined in the ground regime")]
    GroundRegimeHasNoTraceLimit,
    #[error("phase window too small: Xi^2 = {xi_sq} < E - E0 + 4 eps = {needed}")]
    PhaseWindowTooSmall { xi_sq: f64, needed: f64 },
    #[error("observation window [{0}, {1}] has empty interior")]
    EmptyObservationWindow(f64, f64),
    #[error("set {{V - E >= alpha^2}} is empty for alpha = {0}")]
    EmptyForbiddenRegion(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable short name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "Parse",
            Error::DegenerateDomain(_) => "DegenerateDomain",
            Error::NotSingleWell(_) => "NotSingleWell",
            Error::ValidationGridTooSmall(_) => "ValidationGridTooSmall",
            Error::EnergyBelowGround { .. } => "EnergyBelowGround",
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::ProfileGridTooSmall(_) => "ProfileGridTooSmall",
            Error::GridTooSmall(_) => "GridTooSmall",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::NonPositiveEps(_) => "NonPositiveEps",
            Error::WindowEmpty { .. } => "WindowEmpty",
            Error::NoConvergence(_) => "NoConvergence",
            Error::DegenerateCluster(_) => "DegenerateCluster",
            Error::PhaseOverflow { .. } => "PhaseOverflow",
            Error::GroundRegimeHasNoTraceLimit => "GroundRegimeHasNoTraceLimit",
            Error::PhaseWindowTooSmall { .. } => "PhaseWindowTooSmall",
            Error::EmptyObservationWindow(..) => "EmptyObservationWindow",
            Error::EmptyForbiddenRegion(_) => "EmptyForbiddenRegion",
            Error::Precondition(_) => "Precondition",
            Error::Config { .. } => "ConfigError",
            Error::Io(_) => "Io",
        }
    }

    pub(crate) fn config(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            location: location.into(),
            message: message.into(),
        }
    }
}
