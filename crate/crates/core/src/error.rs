use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "infeasible calibration: v_bl / target = {total_ohms:.6e} ohm does not exceed r_lrs = {r_lrs:.6e} ohm"
    )]
    InfeasibleCalibration { total_ohms: f64, r_lrs: f64 },

    #[error("cell ({row}, {col}) is outside a {rows}x{cols} array")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid bias: {0}")]
    InvalidBias(String),

    #[error(
        "read reference {read_ref:.4e} A is outside the separable window ({low:.4e} A, {high:.4e} A)"
    )]
    AmbiguousReference { read_ref: f64, low: f64, high: f64 },

    #[error("no valid reference: {0}")]
    NoValidReference(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end: 2 for configuration
    /// problems, 3 when the configuration is well-formed but the simulation
    /// cannot be carried out.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InfeasibleCalibration { .. }
            | Error::AmbiguousReference { .. }
            | Error::NoValidReference(_) => 3,
            _ => 2,
        }
    }
}
