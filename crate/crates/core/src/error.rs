use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value {value} in {context}")]
    NonFinite { context: &'static str, value: f64 },

    #[error("mass at index {index} is not positive ({mass})")]
    NonPositiveMass { index: usize, mass: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("probability level {0} outside (0, 1)")]
    LevelOutOfRange(f64),

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("invalid cdf: {0}")]
    InvalidCdf(String),

    #[error("cdf decreases between grid points {left} and {right} ({left_value} > {right_value})")]
    DecreasingCdf {
        left: f64,
        right: f64,
        left_value: f64,
        right_value: f64,
    },

    #[error("lower threshold {a} exceeds upper threshold {b}")]
    InvalidThresholds { a: f64, b: f64 },

    #[error("threshold search did not reach tolerance {epsilon} within {iterations} widenings")]
    ThresholdSearchExhausted { epsilon: f64, iterations: usize },

    #[error("inconsistent order relations: {0}")]
    InconsistentRelations(String),

    #[error("forecasts are not equal-weight ensembles of a common size; use the modified Hersbach variant")]
    NotAnEnsemble,

    #[error("{method}: component {component} = {value} is negative beyond tolerance")]
    NegativeComponent {
        method: &'static str,
        component: &'static str,
        value: f64,
    },

    #[error("reports carry different uncertainty components ({0} vs {1})")]
    MixedUncertainty(f64, f64),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
