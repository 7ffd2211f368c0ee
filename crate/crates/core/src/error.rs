use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: asymmetry {asymmetry:e} exceeds tolerance {tolerance:e}")]
    NotHermitian { asymmetry: f64, tolerance: f64 },
    #[error("matrix is not positive semi-definite: eigenvalue {eigenvalue:e} below -{tolerance:e}")]
    NotPsd { eigenvalue: f64, tolerance: f64 },
    #[error("matrix is singular: smallest eigenvalue {min_eigenvalue:e} <= {tolerance:e}")]
    SingularMatrix { min_eigenvalue: f64, tolerance: f64 },
    #[error("weight field is not invertible")]
    NotInvertible,
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("cube family is empty")]
    EmptyCubeFamily,
    #[error("invalid cube: {0}")]
    InvalidCube(String),
    #[error("shift {0:?} is not a lattice vector of the grid")]
    OffLattice(Vec<f64>),
    #[error("dyadic scheme does not fit the grid: {0}")]
    SchemeMismatch(String),
    #[error("invalid ball scheme: {0}")]
    InvalidBall(String),
    #[error("ball around point {point} has zero measure")]
    EmptyBall { point: usize },
    #[error("norm is degenerate on the sampled sphere: {0}")]
    DegenerateNorm(String),
    #[error("modular is not finite")]
    NonFinite,
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("invalid field values: {0}")]
    InvalidField(String),
    #[error("radius {radius} exceeds the grid half-width {half_width}")]
    RadiusExceedsBox { radius: f64, half_width: f64 },
    #[error("no feasible scale on the moduli ladders: {0}")]
    ModuliTooLarge(String),
    #[error("greedy covering needed {needed} centers, cap is {cap}")]
    NotTotallyBoundedInput { needed: usize, cap: usize },
    #[error("function family is empty")]
    EmptyFamily,
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
