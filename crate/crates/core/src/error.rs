use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Chaining parameters violate `alpha > 0`, `beta > 0`, `0 <= gamma < alpha`, `delta > 0`.
    #[error("invalid chaining parameters: {0}")]
    InvalidParams(String),

    /// The entropy sum does not converge for the requested exponent.
    #[error("entropy sum diverges for gamma = {gamma}")]
    DivergentEntropy { gamma: f64 },

    /// A model could not be configured (bad intensity, kernel or truncation).
    #[error("model configuration error: {0}")]
    Model(String),

    /// A kernel violates its declared Hölder bound.
    #[error(
        "kernel misdeclared: ratio {ratio} at (s, t, omega) = ({s}, {t}, {omega}) exceeds 1"
    )]
    MisdeclaredKernel {
        ratio: f64,
        s: f64,
        t: f64,
        omega: f64,
    },

    /// A hypothesis of the chaining theorem fails for the configured model.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// A moment audit found an increment moment above its bound.
    #[error("audit failed: {0}")]
    AuditFailed(String),

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("runtime error: {0}")]
    Runtime(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
