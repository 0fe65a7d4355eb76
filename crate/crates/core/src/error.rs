use thiserror::Error;

/// Errors raised by the automata library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unsupported JSON value kind `{kind}` at {path}")]
    UnsupportedValue { kind: &'static str, path: String },

    #[error("array member at {path} is not a single-key object")]
    BadArrayMember { path: String },

    /// A construction exceeded a configured size guard. Distinct from a negative answer.
    #[error("resource limit exceeded: {what} (limit {limit})")]
    ResourceLimit { what: &'static str, limit: usize },

    /// A bounded search ran out of budget before reaching an answer.
    #[error("search budget of {budget} exhausted during {what}")]
    BudgetExceeded { what: &'static str, budget: u64 },

    #[error("syntax error at offset {offset} in `{input}`: {message}")]
    Syntax {
        input: String,
        offset: usize,
        message: String,
    },

    #[error("invalid automaton: {0}")]
    Invalid(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn syntax(input: &str, offset: usize, message: impl Into<String>) -> Self {
        Error::Syntax {
            input: input.to_string(),
            offset,
            message: message.into(),
        }
    }
}
