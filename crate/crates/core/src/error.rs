use thiserror::Error;

/// Errors raised by the solvers, the reduction pipeline and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hurwitz (spectral abscissa {abscissa:.3e})")]
    NotHurwitz { abscissa: f64 },

    #[error("mode {mode} is not Hurwitz (spectral abscissa {abscissa:.3e})")]
    ModeNotHurwitz { mode: usize, abscissa: f64 },

    #[error("Lyapunov operator is nearly singular: eigenvalue pair sum {gap:.3e}")]
    NearSingular { gap: f64 },

    #[error("dimension {n} exceeds the Kronecker solver cap {cap}")]
    DimensionTooLarge { n: usize, cap: usize },

    #[error("Kronecker system matrix is singular")]
    SingularKroneckerMatrix,

    #[error(
        "fixed-point series diverged after {iterations} iterations \
         (existence condition ||sum D_j D_j^T|| < 2 alpha / beta^2 likely violated)"
    )]
    Diverged { iterations: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("requested order {requested} exceeds numerical rank {rank} of S^T R")]
    OrderTooLarge { requested: usize, rank: usize },

    #[error("Gramian product has numerical rank 0")]
    DegenerateGramians,

    #[error("matrix is not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("projectors are not biorthogonal: ||W^T V - I||_F = {0:.3e}")]
    BiorthogonalityViolated(f64),

    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("L2 integral diverges on an infinite horizon")]
    DivergentIntegral,

    #[error("SVD did not converge: {0}")]
    SvdFailed(String),

    #[error("{count} subspace comparison(s) disagree with the closure oracle")]
    OracleMismatch { count: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable name of the variant, printed by the command line tool.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotHurwitz { .. } | Error::ModeNotHurwitz { .. } => "NotHurwitz",
            Error::NearSingular { .. } => "NearSingular",
            Error::DimensionTooLarge { .. } => "DimensionTooLarge",
            Error::SingularKroneckerMatrix => "SingularKroneckerMatrix",
            Error::Diverged { .. } => "Diverged",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::OrderTooLarge { .. } => "OrderTooLarge",
            Error::DegenerateGramians => "DegenerateGramians",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::BiorthogonalityViolated(_) => "BiorthogonalityViolated",
            Error::NonFinite { .. } => "NonFinite",
            Error::NegativeTime(_) => "NegativeTime",
            Error::DivergentIntegral => "DivergentIntegral",
            Error::SvdFailed(_) => "SvdFailed",
            Error::OracleMismatch { .. } => "OracleMismatch",
            Error::Invalid(_) => "Invalid",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

impl Error {
    /// Bad arguments or unreadable input, as opposed to a numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Invalid(_) | Error::Io(_) | Error::Json(_) | Error::ShapeMismatch(_) | Error::NegativeTime(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
