use thiserror::Error;

use crate::fock::Polarization;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode {label}{polarization} is already registered")]
    DuplicateMode {
        label: String,
        polarization: Polarization,
    },

    #[error("mode #{0} is not registered")]
    UnknownMode(usize),

    #[error("no mode registered as {label}{polarization}")]
    UnknownLabel {
        label: String,
        polarization: Polarization,
    },

    #[error("operands are expressed over different mode registries")]
    RegistryMismatch,

    #[error("transmission {0} outside [0, 1]")]
    InvalidEta(f64),

    #[error("mode {mode} has role {actual}, expected {expected}")]
    WrongRole {
        mode: String,
        actual: String,
        expected: String,
    },

    #[error("environment mode {0} is used by more than one loss element")]
    EnvironmentReuse(String),

    #[error("polarization mismatch: {0}")]
    PolarizationMismatch(String),

    #[error("incomplete polarization pair: {0}")]
    IncompletePair(String),

    #[error("rewiring is not a bijection: {0}")]
    NotBijective(String),

    #[error("input mode {0} is mapped more than once in one stage")]
    DuplicateInput(String),

    #[error("occupied mode {0} is unmapped but also an output of this stage")]
    OutputCollision(String),

    #[error("{0} parties requested; at least 2 are required")]
    TooFewParties(usize),

    #[error("{parties} parties exceeds the oracle cap of {cap}")]
    OracleCap { parties: usize, cap: usize },

    #[error("expansion exceeded the term cap of {cap} monomials")]
    TermCapExceeded { cap: usize },

    #[error("heralding efficiency undefined at eta={eta}")]
    UndefinedEfficiency { eta: f64 },

    #[error("pattern {0} has no GHZ component, no feed-forward correction exists")]
    NoFeedforward(String),

    #[error("no sign change of the cross-over function found below {0} km")]
    NoBracket(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
