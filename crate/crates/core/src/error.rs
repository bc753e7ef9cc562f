use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {field} {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("reconstructed density matrix is not positive: eigenvalue {min_eigenvalue:e}")]
    PhysicalityViolation { min_eigenvalue: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: &'static str },

    #[error("no frictionless solution: compression angle is zero")]
    NoSolution,

    #[error("degenerate field: {0}")]
    DegenerateField(&'static str),

    #[error("schedule infeasible: field leaves [0, inf) at t = {t}")]
    ScheduleInfeasible { t: f64 },

    #[error("cycle map has no unique limit cycle (|eigenvalue| = {modulus})")]
    NoUniqueLimitCycle { modulus: f64 },

    #[error("no sampled allocation refrigerates (best Q_c = {best_q_c:e})")]
    NoFeasibleRefrigerator { best_q_c: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

pub(crate) fn require_positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be > 0 (got {value})")))
    }
}

pub(crate) fn require_non_negative(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be >= 0 (got {value})")))
    }
}
