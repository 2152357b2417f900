use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("qubit index {index} out of range for {qubits} qubits")]
    QubitRange { index: usize, qubits: usize },
    #[error("qubit index {0} used twice")]
    QubitCollision(usize),
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid measurement: {0}")]
    InvalidPvm(String),
    #[error("size guard: {0}")]
    TooLarge(String),
    #[error("invalid Pauli string: {0}")]
    Pauli(String),
    #[error("group function: {0}")]
    GroupFunction(String),
    #[error("game: {0}")]
    Game(String),
    #[error("strategy has no measurement for {side} question {question}")]
    MissingMeasurement { side: &'static str, question: String },
    #[error("Hamiltonian: {0}")]
    Hamiltonian(String),
    #[error("circuit: {0}")]
    Circuit(String),
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("adversary policy: {0}")]
    Policy(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
