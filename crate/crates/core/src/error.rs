use thiserror::Error;

/// Errors surfaced by library operations.
#[derive(Error, Debug)]
pub enum Error {
    #[error("probability {0} outside (0,1)")]
    InvalidProbability(f64),

    #[error("invalid formula: {0}")]
    InvalidDnf(String),

    #[error("variable {var} has no probability (distribution covers {len} variables)")]
    MissingProbability { var: usize, len: usize },

    #[error("feature {feature} already used on the path to this leaf")]
    RepeatedFeature { feature: usize },

    #[error("no leaf with creation order {order}")]
    LeafNotFound { order: usize },

    #[error("node budget {t} outside the valid range 1..={max}")]
    BudgetOutOfRange { t: usize, max: usize },

    #[error("instance too large for exhaustive search: {literals} literals, t={t} (limits: {max_literals} literals, t<={max_t})")]
    SizeGuard {
        literals: usize,
        t: usize,
        max_literals: usize,
        max_t: usize,
    },

    #[error("tie exploration exceeded {limit} branches; use the documented tie mode for this instance")]
    TieExplosion { limit: usize },

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),
}
