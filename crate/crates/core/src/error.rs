use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point outside domain (distance {excess:e} beyond boundary)")]
    PointOutsideDomain { excess: f64 },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("parameter out of range: {name} = {value} ({expected})")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("objective value {value} outside ({lower}, {upper}]")]
    ValueOutOfRange { value: f64, lower: f64, upper: f64 },

    #[error("empty replication list")]
    EmptyReplicationList,

    #[error("replication count must be positive")]
    NonPositiveReplicationCount,

    #[error("rejection budget of {attempts} attempts exhausted at threshold {threshold}")]
    RejectionBudgetExhausted { threshold: f64, attempts: u64 },

    #[error("no positive kappa_q found (q = {q}, epsilon = {epsilon})")]
    DegenerateKq { q: f64, epsilon: f64 },

    #[error("quadrature did not converge (estimated error {error:e})")]
    QuadratureFailure { error: f64 },

    #[error("bettering probability must be positive, got {0} ")]
    NonPositiveBettering(f64),

    #[error("only {got} trials satisfied the confidence event (need {needed})")]
    InsufficientConditionedTrials { got: usize, needed: usize },

    #[error("populations are not comparable: {0}")]
    PopulationMismatch(String),

    #[error("{unreached} of {total} traces never reached the target {target}")]
    UnreachedTarget {
        unreached: usize,
        total: usize,
        target: f64,
    },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name,
            value,
            expected,
        })
    }
}
