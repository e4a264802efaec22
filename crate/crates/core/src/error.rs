use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid sector ({n_up}, {n_dn}) on {n_sites} sites: {reason}")]
    InvalidSector {
        n_sites: usize,
        n_up: usize,
        n_dn: usize,
        reason: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sector dimension {dimension} exceeds the dense limit of {limit}")]
    DimensionTooLarge { dimension: usize, limit: usize },

    #[error("eigensolver did not converge for a {size}x{size} matrix within its iteration limit")]
    NoConvergence { size: usize },

    #[error("matrix is not symmetric: max |H - H^T| = {deviation:e}")]
    NotSymmetric { deviation: f64 },

    #[error("spectra do not match the ensemble: {0}")]
    SectorMismatch(String),

    #[error("invalid extrapolation input: {0}")]
    Extrapolation(String),

    #[error("spectrum cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
