use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("polynomial has degree {0}; degree at least 3 is required")]
    DegreeTooSmall(usize),

    #[error("polynomial is reducible over the rationals: factor {0}")]
    Reducible(String),

    #[error("zero element has no {0}")]
    ZeroElement(&'static str),

    #[error("element is not a unit: {0}")]
    NotAUnit(String),

    #[error("expected {expected} fundamental units, got {got}")]
    WrongUnitCount { expected: usize, got: usize },

    #[error("fundamental units are multiplicatively dependent (regulator indistinguishable from 0)")]
    DependentUnits,

    #[error("torsion generator: {0}")]
    Torsion(String),

    #[error("undecided at max precision ({precision} bits): {what}")]
    Undecided { what: String, precision: u32 },

    #[error("division by a ball containing zero: {0}")]
    DivisionByZeroBall(String),

    #[error("point is not on the hyperplane (residual {0:e})")]
    OffHyperplane(f64),

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn undecided(what: impl Into<String>, precision: u32) -> Self {
        Error::Undecided {
            what: what.into(),
            precision,
        }
    }

    pub fn is_undecided(&self) -> bool {
        matches!(self, Error::Undecided { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
