use alloc::string::String;

/// Errors raised by the analysis routines.
///
/// Outcomes that the theory treats as values (infinite excess, an infeasible multiplier system,
/// an empty interior) are not errors and are reported through the respective result types.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{routine} exceeded its iteration limit ({limit})")]
    IterationLimit { routine: &'static str, limit: usize },
    #[error("dimension {dim} exceeds the enumeration cap {cap}")]
    DimensionGuard { dim: usize, cap: usize },
    #[error("halfspace intersection is empty")]
    EmptyIntersection,
    #[error("point is not in the set (violation {violation:.3e})")]
    NotInSet { violation: f64 },
    #[error("mapping is not affine")]
    NotAffine,
    #[error("reference point is not a solution")]
    ReferenceNotSolution,
    #[error("F(x̄) does not meet the boundary of C")]
    BoundaryEmpty,
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
