use thiserror::Error;

/// Errors raised while building or executing models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state {value} at entity {index} is outside the {set} state set")]
    StateDomainViolation { index: usize, value: f64, set: &'static str },
    #[error("update produced {value} for entity {index}, outside the {set} state set")]
    UpdateDomainViolation { index: usize, value: f64, set: &'static str },
    #[error("update function does not fit the system: {0}")]
    IncompatibleUpdate(String),
    #[error("a ring lattice needs at least 3 entities, got {0}")]
    TooFewEntities(usize),
    #[error("rule number {0} is outside 0..=255")]
    OutOfRange(i64),
    #[error("unexpected character {character:?} at position {position}; states are written with '0' and '1'")]
    BadCharacter { position: usize, character: char },
    #[error("bad network dimensions: {0}")]
    BadDimensions(String),
    #[error("input to the activation function is not finite: {0}")]
    NonFiniteInput(f64),
    #[error("no reports to summarize")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
