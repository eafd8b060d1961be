use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the domain `[0, inf)` of a test function.
    #[error("domain error: x = {x} is negative")]
    Domain { x: f64 },

    /// Inverse requested below the image of `[0, inf)`.
    #[error("range error: y = {y} is below f(0) = {min}")]
    Range { y: f64, min: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("cannot parse function spec: {reason} (at `{token}`)")]
    Parse { token: String, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("kernel is not a submartingale: conditional increment {increment} < 0 at step {step}")]
    NonSubmartingale { step: usize, increment: f64 },
}
