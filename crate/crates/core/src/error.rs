use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A conditional expectation was requested over an interval of zero
    /// probability mass.
    #[error("zero-mass interval ({lo}, {hi}]")]
    ZeroMassInterval { lo: f64, hi: f64 },

    /// A tail-truncated quadrature failed to converge.
    #[error("integral failed to converge: {0}")]
    Divergence(String),

    /// A step of the horizon was left without an active contract. Always a
    /// policy bug; the offending stream is reported for reproduction.
    #[error("coverage violation at step {step} (seed {seed}, stream {stream})")]
    CoverageViolation { step: u64, seed: u64, stream: u64 },

    /// A table-driven policy was asked to act on a horizon it was not built for.
    #[error("table horizon {table_n} does not match requested horizon {n}")]
    TableMismatch { table_n: u64, n: u64 },

    /// A configured memory or work ceiling would be exceeded.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// A chain simulation did not absorb within the step budget.
    #[error("absorption not reached within {0} steps")]
    StepLimit(u64),

    /// Malformed structured input (duplicate slopes, unsorted samples, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
