use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is outside its domain: {reason}")]
    ParameterDomain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("lattice side {side} must be even so the period-2 band pattern closes")]
    OddSide { side: usize },

    #[error("lattice side {side} is below the minimum of {min}")]
    SideTooSmall { side: usize, min: usize },

    #[error("lattice dimension must be at least 1")]
    ZeroDimension,

    #[error("lattice mismatch: operator is {expected}, other object is {actual}")]
    LatticeMismatch { expected: String, actual: String },

    #[error(
        "spectral parameter is {dist:.3e} from the unit circle (guard {guard:.1e}); \
         a priori bound on |F| is {apriori_bound:.3e}"
    )]
    Conditioning {
        dist: f64,
        guard: f64,
        apriori_bound: f64,
    },

    #[error("zero pivot in banded LU at position {position}")]
    SingularPivot { position: usize },

    #[error("solve residual {residual:.3e} exceeds {limit:.3e}")]
    Residual { residual: f64, limit: f64 },

    #[error("the identity requires z != 0")]
    ZeroSpectralParameter,

    #[error("value {modulus} is not unimodular within {tolerance:e}")]
    NotUnimodular { modulus: f64, tolerance: f64 },

    #[error("rank-one denominator 1 - eta*F_hat(j,j) = {modulus:.3e} vanishes at site {site}")]
    RankOneSingular { site: usize, modulus: f64 },

    #[error(
        "quadrature did not converge: estimated error {achieved:.3e}, requested {requested:.3e}"
    )]
    Quadrature { achieved: f64, requested: f64 },

    #[error("decay fit needs at least 3 usable points, got {points}")]
    TooFewFitPoints { points: usize },

    #[error("operator is not unitary: max |M*M - I| = {deviation:.3e}")]
    NonUnitary { deviation: f64 },

    #[error(
        "dense diagnostics refused: {sites} sites exceeds the cap of {cap}; reduce the side length"
    )]
    TooLarge { sites: usize, cap: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
}
