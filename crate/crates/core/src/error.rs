use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M - M^H| = {deviation:e}, allowed {allowed:e})")]
    NonHermitian { deviation: f64, allowed: f64 },

    #[error("strain tensor is not symmetric (max |e_ij - e_ji| = {0:e})")]
    NonSymmetricStrain(f64),

    #[error("TX0 and TX1 eigenvalue windows overlap (TX0 top {tx0_top:e} eV >= TX1 bottom {tx1_bottom:e} eV)")]
    ManifoldOverlap { tx0_top: f64, tx1_bottom: f64 },

    #[error("magnetic field magnitude must be non-zero")]
    ZeroField,

    #[error("both spin-conserving transition rates vanish")]
    ZeroTotalRate,

    #[error("sweep axes are zero or parallel")]
    DegenerateAxes,

    #[error("direction vector must be non-zero")]
    ZeroDirection,

    #[error("invalid dielectric stack: {0}")]
    InvalidStack(String),

    #[error("unsupported data kind: {0}")]
    UnsupportedKind(String),

    #[error("unknown parameter name `{0}`")]
    UnknownParameter(String),

    #[error("unknown orientation label `{0}`")]
    UnknownOrientation(String),

    #[error("invalid fit problem: {0}")]
    InvalidProblem(String),

    #[error("ingestion error at row {row}, column `{column}`: {message}")]
    Ingestion {
        row: usize,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable identifier, used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonHermitian { .. } => "NonHermitian",
            Error::NonSymmetricStrain(_) => "NonSymmetricStrain",
            Error::ManifoldOverlap { .. } => "ManifoldOverlap",
            Error::ZeroField => "ZeroField",
            Error::ZeroTotalRate => "ZeroTotalRate",
            Error::DegenerateAxes => "DegenerateAxes",
            Error::ZeroDirection => "ZeroDirection",
            Error::InvalidStack(_) => "InvalidStack",
            Error::UnsupportedKind(_) => "UnsupportedKind",
            Error::UnknownParameter(_) => "UnknownParameter",
            Error::UnknownOrientation(_) => "UnknownOrientation",
            Error::InvalidProblem(_) => "InvalidProblem",
            Error::Ingestion { .. } => "Ingestion",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
            Error::Io(_) => "Io",
        }
    }
}
