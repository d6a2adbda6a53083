use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vector is not unit length (|v| = {norm})")]
    NotUnit { norm: f64 },

    #[error("profile `{profile}` is not finite at grid node ({y1}, {y2})")]
    NonFiniteProfile { profile: String, y1: f64, y2: f64 },

    #[error("profile `{profile}` has a non-finite gradient at offset node ({y1}, {y2})")]
    NonFiniteGradient { profile: String, y1: f64, y2: f64 },

    #[error("density is not finite at point {index}")]
    NonFiniteDensity { index: usize },

    #[error("all atom weights are zero")]
    ZeroMass,

    #[error("fractal intersection is empty at stage {stage}")]
    EmptyFractalStage { stage: usize },

    #[error("invalid fractal spec: {0}")]
    InvalidFractalSpec(String),

    #[error("annulus measure vanishes at eps = {eps}; widen the window")]
    EmptyAnnulus { eps: f64 },

    #[error("points {i} and {j} coincide; Riesz energy is infinite")]
    CoincidentPoints { i: usize, j: usize },

    #[error("L2(mu) norm of the density is zero")]
    ZeroDensityNorm,

    #[error("measure file error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
