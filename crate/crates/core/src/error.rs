use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("invalid variable name `{0}`")]
    InvalidName(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("directed cycle through `{0}`")]
    Cycle(String),
    #[error("line {line}: {message} (at `{token}`)")]
    Parse { line: usize, token: String, message: String },
    #[error("overlapping variable sets: {0}")]
    Overlap(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("{nodes} nodes exceeds the limit of {limit} for {operation}; use it at oracle scale only")]
    ScaleGuard { operation: &'static str, nodes: usize, limit: usize },
    #[error("positivity violation: {0}")]
    Positivity(String),
    #[error("model: {0}")]
    Model(String),
    #[error("joint table needs {cells} cells, over the budget of {budget}")]
    TableBudget { cells: u128, budget: u128 },
    #[error("expression: {0}")]
    Expr(String),
    #[error("{0}")]
    Io(String),
    #[error("internal invariant breach: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn parse(line: usize, token: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { line, token: token.into(), message: message.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
