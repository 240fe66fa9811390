use thiserror::Error;

/// Errors produced by the analysis, construction and selection routines.
///
/// State, input and mode indices carried by variants are zero-based.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("index {index} out of range (size {size})")]
    IndexOutOfRange { index: usize, size: usize },

    #[error(
        "degenerate eigenvalue cluster near {re:+.6e}{im:+.6e}i: {detail}; \
         try adjusting cluster_tol or null_rel_tol"
    )]
    DegenerateCluster { re: f64, im: f64, detail: String },

    #[error("pattern is infeasible: mode {mode} (eigenvalue {re:+.6e}{im:+.6e}i) reaches only {achieved} of {required} independent matches")]
    InfeasiblePattern {
        mode: usize,
        re: f64,
        im: f64,
        achieved: usize,
        required: usize,
    },

    #[error("accessible set cannot actuate mode {mode} (eigenvalue {re:+.6e}{im:+.6e}i): rank {achieved} < {required}")]
    InaccessibleMode {
        mode: usize,
        re: f64,
        im: f64,
        achieved: usize,
        required: usize,
    },

    #[error("number of inputs {l} is below the maximum geometric multiplicity {k_max}")]
    TooFewInputs { l: usize, k_max: usize },

    #[error("(A, B) is not controllable: mode {mode} has rank {achieved} < {required}")]
    NotControllable {
        mode: usize,
        achieved: usize,
        required: usize,
    },

    #[error("numeric failure: {0}; consider a looser det_rel_tol or a different candidate value set")]
    Numeric(String),

    #[error("state matrix is not Hurwitz (max real part {max_re:.6e}); stabilize it first")]
    NotHurwitz { max_re: f64 },

    #[error("enumeration budget exceeded: {0}")]
    Budget(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
