use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialFunctionError {
    #[error("{function}: argument {x} outside the domain x > 0")]
    Domain { function: &'static str, x: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MediaError {
    #[error("invalid medium parameter: {0}")]
    InvalidParameter(String),
    #[error("contrast-free medium (A - I vanishes identically)")]
    ContrastFree,
    #[error("Newton inversion of the diffeomorphism failed at ({}, {}) after {iterations} iterations (residual {residual:.3e})", point[0], point[1])]
    InversionFailed { point: [f64; 2], iterations: usize, residual: f64 },
    #[error("diffeomorphism is not orientation preserving at ({}, {}): det = {det}", point[0], point[1])]
    NotOrientationPreserving { point: [f64; 2], det: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IncidentError {
    #[error("point source evaluated at its singular point")]
    SingularPoint,
    #[error("least-squares system is rank deficient (sigma_min/sigma_max = {ratio:.3e}); set a positive ridge")]
    RankDeficient { ratio: f64 },
    #[error("need at least {required} boundary samples, got {got}")]
    TooFewSamples { required: usize, got: usize },
    #[error("invalid incident field parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Special(#[from] SpecialFunctionError),
    #[error("density file: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadialError {
    #[error("invalid radial problem: {0}")]
    InvalidParameter(String),
    #[error("matching system ill-conditioned at m = {m}, k = {k} (condition {condition:.3e})")]
    IllConditioned { m: i32, k: f64, condition: f64 },
    #[error(transparent)]
    Special(#[from] SpecialFunctionError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FemError {
    #[error("mesh generation: {0}")]
    Mesh(String),
    #[error("coefficient matrix not elliptic at ({}, {}): eigenvalues {eigenvalues:?}", point[0], point[1])]
    Ellipticity { point: [f64; 2], eigenvalues: [f64; 2] },
    #[error("DtN truncation M = {m} below the required ceil(kR) + 8 = {required}")]
    Truncation { m: usize, required: usize },
    #[error("DtN coefficient for mode {m} has Im <= 0 ({value})")]
    DtnSign { m: i32, value: f64 },
    #[error("sparse factorization failed: {0}")]
    Singular(String),
    #[error("relative residual {residual:.3e} exceeds the 1e-9 contract")]
    Residual { residual: f64 },
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Incident(#[from] IncidentError),
    #[error(transparent)]
    Special(#[from] SpecialFunctionError),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HodographError {
    #[error("cannot bracket w(x1, {y2}) = {y1} inside the monotone region")]
    Bracket { y1: f64, y2: f64 },
    #[error("invalid hodograph input: {0}")]
    InvalidParameter(String),
    #[error("not enough neighbours for a quadratic fit at ({}, {})", point[0], point[1])]
    Fit { point: [f64; 2] },
}

impl From<std::io::Error> for FemError {
    fn from(e: std::io::Error) -> Self {
        FemError::Io(e.to_string())
    }
}

impl From<std::io::Error> for IncidentError {
    fn from(e: std::io::Error) -> Self {
        IncidentError::Io(e.to_string())
    }
}
