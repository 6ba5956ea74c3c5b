use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A primitive received operands of incompatible shapes.
    ShapeMismatch {
        op: &'static str,
        lhs: [usize; 2],
        rhs: [usize; 2],
    },
    /// `backward` was called on a tensor that is not 1×1.
    NonScalarRoot([usize; 2]),
    /// Normalization of a graph whose adjacency is identically zero.
    DegenerateGraph,
    /// Graph construction failed validation.
    InvalidGraph(String),
    /// A configuration value violates its invariant.
    InvalidConfig(String),
    /// An operation that needs at least one element got none.
    EmptyInput(&'static str),
    /// The subject lacks the label or score the task needs.
    MissingTarget(&'static str),
    /// Parameter set does not match the model layout.
    ParamMismatch(String),
    /// Saliency requested on a regression model.
    NotClassification,
    /// Validation loss became NaN or infinite at the given epoch.
    Diverged(usize),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { op, lhs, rhs } => write!(
                f,
                "shape mismatch in {op}: {}x{} vs {}x{}",
                lhs[0], lhs[1], rhs[0], rhs[1]
            ),
            Error::NonScalarRoot(s) => {
                write!(f, "backward root must be a scalar, got {}x{}", s[0], s[1])
            }
            Error::DegenerateGraph => f.write_str("degenerate graph"),
            Error::InvalidGraph(msg) => write!(f, "invalid graph: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::EmptyInput(what) => write!(f, "empty input: {what}"),
            Error::MissingTarget(what) => write!(f, "subject has no {what}"),
            Error::ParamMismatch(msg) => write!(f, "parameter mismatch: {msg}"),
            Error::NotClassification => {
                f.write_str("saliency maps require a classification model")
            }
            Error::Diverged(epoch) => write!(f, "training diverged at epoch {epoch}"),
        }
    }
}

impl core::error::Error for Error {}
