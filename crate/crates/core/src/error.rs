use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("targets are identically zero")]
    ZeroTargets,

    #[error("no certificate direction: maximum of |g| over the candidates is zero")]
    ZeroCertificate,

    #[error("dual problem is unbounded; the feature matrix is rank deficient")]
    RankDeficient,

    #[error("linear program solver failed: {0}")]
    Solver(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
