use thiserror::Error;

/// Errors produced by the grid, frame and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("chart mismatch: {0}")]
    ChartMismatch(String),

    #[error("field length {got} does not match chart sample count {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value in {what} at node {node}")]
    NonFinite { what: &'static str, node: usize },

    #[error("node index {0:?} is outside the chart")]
    NodeOutOfRange(Vec<usize>),

    #[error("potential path residual {residual:e} exceeds tolerance {tolerance:e}; input form is not closed")]
    NotClosed { residual: f64, tolerance: f64 },

    #[error("rotation field is not orthogonal: max |L L^t - I| = {residual:e}")]
    NotOrthogonal { residual: f64 },

    #[error("structure gate failed: res1 = {res1:e}, res2 = {res2:e}, limit = {limit:e}")]
    StructureGate { res1: f64, res2: f64, limit: f64 },

    #[error("frame is degenerate at {count} node(s), first at node {first}")]
    Degenerate { count: usize, first: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("series order mismatch: {0}")]
    OrderMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time step violates stability bound: {0}")]
    StepBound(String),

    #[error("solution blew up at t = {time}: max |u| = {max_abs:e}")]
    BlowUp { time: f64, max_abs: f64 },

    #[error("no periodic solution found: {0}")]
    NoPeriodicSolution(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
