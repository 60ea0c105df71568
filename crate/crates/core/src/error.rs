use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("requested {requested} subbands but the grid only has {available} points")]
    TooManySubbands { requested: usize, available: usize },

    #[error("eigensolver failed: {0}")]
    EigenSolver(String),

    #[error("subband {index} failed the residual check (residual {residual:.3e})")]
    Residual { index: usize, residual: f64 },

    #[error("Fermi level {fermi_mev:.4} meV lies above the highest computed subband ({top_mev:.4} meV); increase n_subbands")]
    FermiAboveBasis { fermi_mev: f64, top_mev: f64 },

    #[error("invalid occupancy: {0}")]
    InvalidOccupancy(String),

    #[error("invalid transition: {0}")]
    InvalidTransition(String),

    #[error("unstable polariton spectrum: eigenvalue {re:.6e} + {im:.6e}i meV has a non-negligible imaginary part")]
    UnstableSpectrum { re: f64, im: f64 },

    #[error("expected {expected} physical polariton branches, found {found} (near-defective matrix, condition estimate {condition:.3e})")]
    BranchSelection {
        expected: usize,
        found: usize,
        condition: f64,
    },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical pipeline (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenSolver(_)
                | Error::Residual { .. }
                | Error::UnstableSpectrum { .. }
                | Error::BranchSelection { .. }
        )
    }
}
