//! Error categories and their process exit codes.

use std::fmt;

use hfhe::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// Unreadable or invalid run configuration or arguments.
    Config,
    /// Missing or malformed input data.
    Data,
    /// Parameter outside its domain.
    Parameter,
    /// A solver failed or hit a limit.
    Solver,
    /// Writing outputs failed.
    Output,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Config => 2,
            Category::Data => 3,
            Category::Parameter => 4,
            Category::Solver => 5,
            Category::Output => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Data => "data",
            Category::Parameter => "parameter",
            Category::Solver => "solver",
            Category::Output => "output",
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub category: Category,
    pub message: String,
}

impl Failure {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        Self {
            category,
            message: message.into(),
        }
    }

    /// Library error with a context prefix such as the strategy name.
    pub fn from_core(context: &str, err: Error) -> Self {
        let category = categorize(&err);
        let message = if context.is_empty() {
            err.to_string()
        } else {
            format!("{context}: {err}")
        };
        Self { category, message }
    }

    pub fn output(err: impl fmt::Display) -> Self {
        Self::new(Category::Output, err.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error [{}]: {}", self.category.name(), self.message)
    }
}

fn categorize(err: &Error) -> Category {
    match err {
        Error::Window { source, .. } => categorize(source),
        Error::MissingFile(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Header(_)
        | Error::NonNumeric { .. }
        | Error::NonPositivePrice { .. }
        | Error::RaggedRow { .. }
        | Error::DatesNotIncreasing { .. }
        | Error::InsufficientObservations { .. }
        | Error::NoOutOfSample { .. }
        | Error::InvalidLottery(_)
        | Error::NegativeLottery
        | Error::Json(_)
        | Error::Table(_)
        | Error::WealthAnnihilated { .. }
        | Error::SeriesTooShort(_) => Category::Data,
        Error::InvalidWindow(_)
        | Error::NonPositiveQ(_)
        | Error::InvalidParameter(_)
        | Error::InvalidWeights(_)
        | Error::DimensionMismatch { .. }
        | Error::NotSymmetric { .. }
        | Error::MilpRegime { .. } => Category::Parameter,
        Error::MalformedLp(_) | Error::SolverFailed(_) => Category::Solver,
    }
}
