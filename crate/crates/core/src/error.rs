use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("the zero polynomial has no roots")]
    ZeroPolynomial,

    #[error("a constant polynomial has no roots")]
    ConstantPolynomial,

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("frequency {theta} rad/sample is at or above the Nyquist limit")]
    NyquistExceeded { theta: f64 },

    #[error("dominant root {re}{im:+}i has no continuous equivalent")]
    NonRepresentable { re: f64, im: f64 },

    #[error("unknown configuration `{0}`")]
    UnknownName(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("assembled characteristic polynomial has degree 0")]
    DegenerateModel,

    #[error("trajectory diverged at step {step} (|x| = {magnitude:e})")]
    GrowthOverflow { step: usize, magnitude: f64 },

    #[error("prediction matrix is rank deficient at order {order}")]
    RankDeficient { order: usize },

    #[error("trajectory of length {got} is too short, need {needed}")]
    InsufficientData { needed: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures that come from the mathematics of the request
    /// rather than from malformed input.
    pub fn is_domain_error(&self) -> bool {
        matches!(
            self,
            Error::ZeroPolynomial
                | Error::ConstantPolynomial
                | Error::SingularSystem(_)
                | Error::NyquistExceeded { .. }
                | Error::NonRepresentable { .. }
                | Error::DegenerateModel
                | Error::GrowthOverflow { .. }
                | Error::RankDeficient { .. }
                | Error::InsufficientData { .. }
        )
    }
}
