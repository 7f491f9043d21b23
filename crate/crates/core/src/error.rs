use thiserror::Error;

pub type Result<T> = std::result::Result<T, MorError>;

#[derive(Debug, Clone, Error)]
pub enum MorError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix contains non-finite entries ({0})")]
    NonFinite(&'static str),

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("ill-posed Sylvester equation: min |λ_i(A) + λ_j(B)| = {separation:.3e}")]
    IllPosed { separation: f64 },

    #[error("matrix is not Hurwitz: eigenvalue {re:.6e}{im:+.6e}i has non-negative real part")]
    NotHurwitz { re: f64, im: f64 },

    #[error("system is not minimum phase: zero {re:.6e}{im:+.6e}i")]
    NotMinimumPhase { re: f64, im: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no stabilizing Riccati solution: {0}")]
    NoStabilizingSolution(String),

    #[error("residual check failed for {what}: {residual:.3e} > {bound:.3e}")]
    Residual { what: &'static str, residual: f64, bound: f64 },

    #[error("inconsistent norm evaluation: {0}")]
    Inconsistent(String),

    #[error("requested order {requested} exceeds achievable order {achievable}")]
    Order { requested: usize, achievable: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MorError {
    fn from(e: std::io::Error) -> Self {
        MorError::Io(e.to_string())
    }
}
