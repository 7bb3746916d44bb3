use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("quadrature did not converge: estimated error {estimate:e} exceeds tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("schedule infeasible: {addend} = {value:e} exceeds budget {budget}")]
    Schedule {
        addend: String,
        value: f64,
        budget: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("initial data error: {0}")]
    Data(String),

    #[error("density floor breached at t = {t}, r = {r}: rho = {rho:e} < {floor:e}")]
    DensityFloor { t: f64, r: f64, rho: f64, floor: f64 },

    #[error("tridiagonal solve failed: zero pivot at row {row}")]
    Tridiagonal { row: usize },

    #[error("test function not admissible for the momentum equation: |phi(t={t}, 0)| = {value:e}")]
    Admissibility { t: f64, value: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }
}
