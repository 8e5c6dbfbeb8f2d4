use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{kind} index {index} out of range (size {size})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        size: usize,
    },

    #[error("nodes at distance zero (transmitter {tx}, receiver {rx})")]
    CoincidentNodes { tx: usize, rx: usize },

    #[error("benchmark link has zero power; gain is undefined")]
    DegenerateBenchmark,

    #[error("SIR gain needs at least two streams, got {0}")]
    SingleStream(usize),

    #[error("stream {0} sees no interference; SIR baseline is undefined")]
    ZeroInterference(usize),

    #[error("stream {0} has an empty transmitter or receiver set")]
    EmptyStream(usize),

    #[error("invalid stream assignment: {0}")]
    InvalidAssignment(String),

    #[error("search too large: {what} needs {required} evaluations, cap is {cap}")]
    TooComplex {
        what: &'static str,
        required: u128,
        cap: u128,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),
}
