use thiserror::Error;

/// Errors raised while loading models or running the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown builtin model `{0}`")]
    UnknownBuiltin(String),

    #[error("player {player} has no rule for history {history} at depth {depth}")]
    MissingRule {
        player: u8,
        depth: usize,
        history: String,
    },

    #[error("depth mismatch: {0} vs {1}")]
    DepthMismatch(usize, usize),

    #[error("enumeration guard exceeded: {what} would need {count} items (limit {limit})")]
    ExplosionGuard {
        what: &'static str,
        count: f64,
        limit: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("history code overflow at depth {0}")]
    HistoryOverflow(usize),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
