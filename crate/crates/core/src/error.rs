use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter or argument outside its admissible range.
    InvalidArgument(&'static str),
    /// Evaluation outside the domain of a function or path.
    Domain { what: &'static str, value: f64 },
    /// A monotone update was asked to move backward.
    ContractViolation(&'static str),
    /// The nearest-point search grew past its radius cap without finding a
    /// candidate.
    SearchOverflow { radius: f64 },
    /// The store would materialize more cells than its budget allows.
    ResourceExhausted { cells: usize, budget: usize },
    /// No renewal happened within the step cap.
    RenewalTimeout { steps: u64 },
    /// Not enough data to compute an estimate.
    InsufficientData(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Domain { what, value } => write!(f, "{what}: value {value} outside domain"),
            Error::ContractViolation(msg) => write!(f, "contract violation: {msg}"),
            Error::SearchOverflow { radius } => {
                write!(f, "search overflow: no candidate within radius {radius}")
            }
            Error::ResourceExhausted { cells, budget } => {
                write!(f, "store budget exceeded: {cells} cells requested, budget {budget}")
            }
            Error::RenewalTimeout { steps } => {
                write!(f, "renewal timeout: no renewal event after {steps} steps")
            }
            Error::InsufficientData(msg) => write!(f, "insufficient data: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
