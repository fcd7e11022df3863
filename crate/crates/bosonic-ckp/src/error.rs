use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CkpError {
    #[error("exponential of a series with nonzero constant term")]
    NonzeroConstant,
    #[error("grading error: {0}")]
    Grading(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}
