use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("polynomial parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("line restriction has degree 0 (leading coefficient vanishes)")]
    DegenerateLine,
    #[error("discriminant routes disagree: resultant {resultant}, root product {root_product}")]
    DiscriminantMismatch {
        resultant: String,
        root_product: String,
    },
    #[error("symbol is not a real second-order operator: {0}")]
    NotRealSecondOrder(String),
    #[error("root finding failed: {0}")]
    RootFinding(String),
    #[error("near-double root: min spacing {spacing:.3e}, min |p'| {min_deriv:.3e}")]
    NearDoubleRoot { spacing: f64, min_deriv: f64 },
    #[error("direction lies on the characteristic cone: |P_N(theta)| = {0:.3e}")]
    DirectionOnCharacteristicCone(f64),
    #[error(
        "direction budget exhausted after {tried} candidates; {uncovered} grid points uncovered"
    )]
    BudgetExhausted { tried: usize, uncovered: usize },
    #[error("direction set not certified (margin {0:.3e})")]
    UncertifiedDirections(f64),
    #[error("double characteristic: b = 0 and beta = 0")]
    DoubleCharacteristic,
    #[error("bad-set leakage on an active line: min |p'| = {min_deriv:.3e} <= eps = {eps:.3e}")]
    BadSetLeakage { min_deriv: f64, eps: f64 },
    #[error("Fourier division on the zero set: min |P| = {min_abs:.3e} <= eps = {eps:.3e}")]
    DivisionOnZeroSet { min_abs: f64, eps: f64 },
    #[error("directions are nearly parallel (sin alpha = {0:.3e})")]
    NearParallel(f64),
    #[error("matrix is not normal: ||MM* - M*M||_F = {0:.3e}")]
    NotNormal(f64),
    #[error("field is in {got} space, expected {expected}")]
    WrongSpace { expected: String, got: String },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid axis {axis} for dimension {n}")]
    InvalidAxis { axis: usize, n: usize },
    #[error("unsupported norm exponent {0}")]
    UnsupportedExponent(String),
    #[error("insufficient guard band: {0:.3e} of the energy lies outside the inner half")]
    GuardBand(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
