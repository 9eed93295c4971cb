use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Document(String),
    #[error("malformed number `{0}`")]
    MalformedNumber(String),
    #[error("duplicate node label `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(String, String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("edge ({0}, {1}) does not exist")]
    UnknownEdge(String, String),
    #[error("negative {what} {value}")]
    Negative { what: &'static str, value: String },
    #[error("graph is not connected")]
    Disconnected,
    #[error("agent `{0}` has no valuation")]
    MissingValuation(String),
    #[error("valuation given for non-agent `{0}`")]
    UnexpectedValuation(String),
    #[error("agent `{0}` has no report")]
    MissingReport(String),
    #[error("agent `{agent}` declares edge ({u}, {v}) it does not own")]
    InvalidReport { agent: String, u: String, v: String },
    #[error("{what}: {actual} exceeds the limit of {limit}")]
    SizeCap {
        what: &'static str,
        limit: usize,
        actual: usize,
    },
    #[error("agent `{0}` is not selected")]
    NotSelected(String),
    #[error("contraction set must contain the source")]
    MissingSource,
    #[error("no entry for the requested subset")]
    SubsetNotInTable,
    #[error("pair ({0}, {1}) does not meet the hypothesis: {2}")]
    Hypothesis(String, String, String),
    #[error("ratio undefined: {0}")]
    Undefined(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("could not generate a connected graph within {0} attempts")]
    RetriesExhausted(usize),
}

impl Error {
    pub fn is_size_cap(&self) -> bool {
        matches!(self, Error::SizeCap { .. })
    }
}
