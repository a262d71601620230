use thiserror::Error;

/// Errors raised by the estimators and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("window exhausted: coordinate {needed} requested but only {available} are reliable")]
    WindowExhausted { needed: usize, available: usize },

    #[error("enumeration cap exceeded: {count} points > cap {cap}; sample the system instead")]
    EnumerationCap { count: u128, cap: usize },

    #[error("exact search cap exceeded: {size} items > cap {cap}; use greedy mode")]
    ExactCap { size: usize, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("root bracket [{lo}, {hi}] does not straddle zero (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("valuation is constant in lambda (value {0}); no critical crossing")]
    DegenerateValuation(f64),

    #[error("candidate pool covers mass {covered} but more than {target} is required; enlarge the pool")]
    PoolInsufficient { covered: f64, target: f64 },

    #[error("no usable scale: {0}")]
    EmptyScale(String),

    #[error("infeasible optimization: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
