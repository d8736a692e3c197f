use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

/// Which S-stability condition a profile failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SStabilityCondition {
    Continuity,
    FiniteEnergy,
    Monotonicity,
    Symmetry,
}

impl core::fmt::Display for SStabilityCondition {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            Self::Continuity => "(i) continuity",
            Self::FiniteEnergy => "(ii) finite energy",
            Self::Monotonicity => "(iii) monotonicity",
            Self::Symmetry => "(iv) symmetry",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("quadrature did not converge on [{a}, {b}]: error estimate {error:e} after {subdivisions} subdivisions")]
    QuadratureNotConverged {
        a: f64,
        b: f64,
        error: f64,
        subdivisions: usize,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("velocity {v} is outside the tabulated range [{lo}, {hi}] (extrapolation is forbidden)")]
    Extrapolation { v: f64, lo: f64, hi: f64 },
    #[error("profile is not S-stable: condition {condition} fails (residual {residual:e})")]
    NotSStable {
        condition: SStabilityCondition,
        residual: f64,
    },
    #[error("value {s} is outside the Casimir table range [0, {s_max}]")]
    CasimirRange { s: f64, s_max: f64 },
    #[error("Fourier mode n must be nonzero")]
    ZeroMode,
    #[error("G(zeta) is defined by the integral only for Im zeta > 0, got Im zeta = {0}")]
    LowerHalfPlane(f64),
    #[error("mean density {mean} differs from 1: the electron Poisson problem is not solvable")]
    Solvability { mean: f64 },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("perturbed initial data reaches {min:e} < 0; the profile fails the delta-condition, enable truncation")]
    NegativeInitialData { min: f64 },
    #[error("well too deep for the ion model: -2 V_min = {depth} must stay below ubar^2 = {ubar_sq}")]
    WellTooDeep { depth: f64, ubar_sq: f64 },
    #[error("invalid potential well: {0}")]
    InvalidWell(String),
    #[error("invalid boundary data: {0}")]
    InvalidBoundaryData(String),
    #[error("growth fit failed: {0}")]
    Fit(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
