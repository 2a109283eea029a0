use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the numerical pipeline can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "lattice frequency {omega} is at or too close to a resonant degeneracy (0, 2, 2*sqrt(2))"
    )]
    DegenerateFrequency { omega: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid crack layout: {0}")]
    InvalidLayout(String),

    #[error("propagation factor is ambiguous at z = {z}: the two roots coincide")]
    BranchAmbiguity { z: Complex64 },

    #[error("kernel has a pole at z = {z} (lambda = -1)")]
    PoleHit { z: Complex64 },

    #[error("node ({m}, {n}) or one of its neighbours lies outside the grid")]
    OutOfGrid { m: i64, n: i64 },

    #[error("evaluation point z = {z} is too close to a pole")]
    NearPole { z: Complex64 },

    #[error("zero-pole-gain form has repeated poles near {pole}")]
    MultipleZpkPole { pole: Complex64 },

    #[error("zero-pole-gain form has a zero coinciding with the pole {pole}")]
    ZeroPoleCollision { pole: Complex64 },

    #[error("zero and pole lists differ in length ({zeros} zeros, {poles} poles)")]
    DegreeMismatch { zeros: usize, poles: usize },

    #[error("product creates a double pole at {pole}")]
    PoleCollision { pole: Complex64 },

    #[error("pole {pole} lies on the unit circle; additive splitting is undefined")]
    PoleOnCircle { pole: Complex64 },

    #[error("rational approximation reached {support_points} support points with error {error:e}")]
    ApproximationFailed { error: f64, support_points: usize },

    #[error("approximant pole {pole} is {distance:e} from the integration contour")]
    PoleOnContour { pole: Complex64, distance: f64 },

    #[error("zero or pole {point} sits on the unit circle; factor partition is ambiguous")]
    CircleStraddle { point: Complex64 },

    #[error("semi-infinite crack is unsupported for this incidence: {0}")]
    SemiInfiniteUnsupportedAngle(String),

    #[error("quadrature not resolved: doubling the node count changed a value by {change:e}")]
    QuadratureUnresolved { change: f64 },

    #[error("linear system is numerically singular (condition number {condition:e})")]
    SingularSystem { condition: f64 },
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateFrequency { .. } => "DegenerateFrequency",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::InvalidLayout(_) => "InvalidLayout",
            Error::BranchAmbiguity { .. } => "BranchAmbiguity",
            Error::PoleHit { .. } => "PoleHit",
            Error::OutOfGrid { .. } => "OutOfGrid",
            Error::NearPole { .. } => "NearPole",
            Error::MultipleZpkPole { .. } => "MultipleZPKPole",
            Error::ZeroPoleCollision { .. } => "ZeroPoleCollision",
            Error::DegreeMismatch { .. } => "DegreeMismatch",
            Error::PoleCollision { .. } => "PoleCollision",
            Error::PoleOnCircle { .. } => "PoleOnCircle",
            Error::ApproximationFailed { .. } => "ApproximationFailed",
            Error::PoleOnContour { .. } => "PoleOnContour",
            Error::CircleStraddle { .. } => "CircleStraddle",
            Error::SemiInfiniteUnsupportedAngle(_) => "SemiInfiniteUnsupportedAngle",
            Error::QuadratureUnresolved { .. } => "QuadratureUnresolved",
            Error::SingularSystem { .. } => "SingularSystem",
        }
    }

    /// Configuration-type errors map to exit code 2 in the CLI, the rest to 1.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::DegenerateFrequency { .. }
                | Error::InvalidParameter(_)
                | Error::InvalidLayout(_)
                | Error::SemiInfiniteUnsupportedAngle(_)
        )
    }
}
