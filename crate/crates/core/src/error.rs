use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "{n_d2d} D2D pairs requested for {n_cu} CUs: every D2D pair needs its own CU \
         reuse partner (M < N, or M = N with full reuse enabled)"
    )]
    TooManyD2d { n_d2d: usize, n_cu: usize },

    #[error("non-finite or non-positive gain on link {link}: {value}")]
    BadGain { link: String, value: f64 },

    #[error("could not place D2D receiver {index} inside the cell after {attempts} attempts")]
    Placement { index: usize, attempts: usize },

    #[error("brute-force matching refuses {n_d2d} D2D pairs (limit {limit})")]
    OracleTooLarge { n_d2d: usize, limit: usize },

    #[error("constraint violation in trial (seed {seed}, m = {m_d2d}): {detail}")]
    ConstraintViolation {
        seed: u64,
        m_d2d: usize,
        detail: String,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
