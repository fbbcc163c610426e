use thiserror::Error;

/// Every failure the library can report.
///
/// Variants mirror the diagnostic classes exposed on the command line; the
/// CLI maps [`Error::CapExceeded`] to its own exit code and everything else to
/// the validation code.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("size mismatch: expected universe of size {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("invalid universe size {0}: must be between 1 and 64")]
    InvalidSize(usize),

    #[error("element {element} out of range for universe of size {size}")]
    Range { element: usize, size: usize },

    #[error("operation `{name}`: table has {found} entries, expected {expected}")]
    Shape {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("duplicate operation name `{0}`")]
    DuplicateName(String),

    #[error("{what} exceeds cap: {count} > {cap}")]
    CapExceeded {
        what: &'static str,
        count: u128,
        cap: u128,
    },

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("term contains `+`; expand it with plus_substitute first")]
    UnsupportedPlus,

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("label `{0}` has no binding")]
    UnboundLabel(String),

    #[error("binding for `{0}` is not reflexive and symmetric")]
    NotReflexiveSymmetric(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("relation is not a tolerance of the algebra")]
    NotATolerance,

    #[error("witness relation is not compatible and reflexive")]
    BadWitness,

    #[error("invalid derivation: {0}")]
    InvalidDerivation(String),

    #[error("premise graph is not regular: label `{label}` has a class of {class_size} vertices")]
    RegularityViolation { label: String, class_size: usize },

    #[error("premise is not regular: {0}")]
    RegularityGate(String),

    #[error("label sets differ: {left:?} vs {right:?}")]
    LabelMismatch {
        left: Vec<String>,
        right: Vec<String>,
    },

    #[error("variable sets differ: {left:?} vs {right:?}")]
    VariableMismatch {
        left: Vec<String>,
        right: Vec<String>,
    },

    #[error("distinguished vertex counts differ: {left} vs {right}")]
    DistinguishedMismatch { left: usize, right: usize },

    #[error("no witness term for symbol `{0}`")]
    MissingSymbol(String),

    #[error("arity error: {0}")]
    Arity(String),

    #[error("unknown operation `{0}`")]
    UnknownOperation(String),

    #[error("invalid condition: {0}")]
    InvalidCondition(String),

    #[error("consistency violation: {0}")]
    Inconsistent(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
