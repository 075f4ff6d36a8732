use thiserror::Error;

/// Every failure mode of the library.
///
/// Variants map onto the CLI exit-code classes through [`Error::class`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("profile queried at {x} beyond its sampled range [1, {t_max}]")]
    OutOfRange { x: f64, t_max: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("limiting case not supported: {0}")]
    LimitingCase(String),

    #[error("embedding is not compact: {0}")]
    NotCompact(String),

    #[error("formula not available: {0}")]
    UnsupportedFormula(String),

    #[error("doubling condition violated: h_k/h_2k = {ratio:.3e} at k = {k} exceeds {bound}")]
    DoublingViolation { k: u64, ratio: f64, bound: f64 },

    #[error("tail budget exceeded: {reason}; rerun with M_max >= {required_m_max}")]
    TailBudget { required_m_max: u32, reason: String },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("wrong regime: {0}")]
    WrongRegime(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),
}

/// Coarse grouping used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    NegativeVerdict,
    LimitingCase,
    Resource,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::LimitingCase(_) => ErrorClass::LimitingCase,
            Error::NotCompact(_) | Error::DoublingViolation { .. } => ErrorClass::NegativeVerdict,
            Error::TailBudget { .. } | Error::ResourceLimit(_) => ErrorClass::Resource,
            _ => ErrorClass::Usage,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
