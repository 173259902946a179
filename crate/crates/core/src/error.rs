use thiserror::Error;

use crate::states::WitnessEvent;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has dimension zero")]
    Empty,

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("eigensolver did not converge")]
    EigenFailure,

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not an orthogonal projection (defect {defect:.3e})")]
    NotIdempotent { defect: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("density matrix has trace {trace}, expected 1")]
    BadTrace { trace: f64 },

    #[error("vector has zero norm")]
    ZeroVector,

    #[error("invalid atoms: {0}")]
    InvalidAtoms(String),

    #[error("conditioning event has zero rank")]
    ZeroEvent,

    #[error("conditioning event has probability {probability:.3e} in this state")]
    ConditioningOnNull { probability: f64 },

    #[error("no conditional expectation exists: event violates compatibility by {:.3e}", .witness.violation)]
    Incompatible { witness: Box<WitnessEvent> },

    #[error("{atoms} atoms give about {bell:.3e} partitions, above the cap of {cap}; use a refinement chain")]
    TooManyPartitions { atoms: usize, bell: f64, cap: u64 },

    #[error("partitions belong to different abelian algebras")]
    DifferentBase,

    #[error("partition cells are not a set partition of the atoms: {0}")]
    InvalidPartition(String),

    #[error("operator is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("unitary does not commute with the atoms (defect {defect:.3e})")]
    NonCommutingUnitary { defect: f64 },

    #[error("commutant is not abelian; the three-way identity needs a maximal abelian algebra")]
    CommutantNotAbelian,

    #[error("unknown case '{0}'")]
    UnknownCase(String),
}
