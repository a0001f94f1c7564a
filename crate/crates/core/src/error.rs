use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gate arity {expected} does not match {got} target qubits")]
    Arity { expected: usize, got: usize },

    #[error("invalid qubit tuple {qubits:?} for a {n_qubits}-qubit state")]
    Qubits { qubits: Vec<usize>, n_qubits: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },

    #[error("matrix is not orthogonal (max deviation {0:e})")]
    NotOrthogonal(f64),

    #[error("Pauli term {0} has an odd number of Y factors")]
    OddY(String),

    #[error("{kind} expects {expected} parameters, got {got}")]
    ParamCount { kind: String, expected: usize, got: usize },

    #[error("no decomposition catalogued for {0}")]
    NoDecomposition(String),

    #[error("invalid irrep: {0}")]
    Irrep(String),

    #[error("invalid fabric: {0}")]
    Fabric(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("operator breaks sector symmetry (commutator norm {0:e})")]
    Symmetry(f64),

    #[error("shift rule: {0}")]
    ShiftRule(String),

    #[error("FCIDUMP parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
