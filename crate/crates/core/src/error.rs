use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report, grouped so that the command line can
/// map them onto stable exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("lexical error at offset {offset}: {message}")]
    Lex { offset: usize, message: String },

    #[error("syntax error at offset {offset}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },

    #[error("unbound variable ${0}")]
    Bind(String),

    #[error("type error: {0}")]
    Type(String),

    /// Casts and arithmetic that fail on a well-typed value (bad lexical
    /// form, division by zero, overflow).
    #[error("dynamic error: {0}")]
    Dynamic(String),

    #[error("translation error: {0}")]
    Translation(String),

    #[error("plan syntax error on line {line}: {message}")]
    PlanSyntax { line: usize, message: String },

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("rule {rule} produced an invalid plan: {message}")]
    Rule { rule: String, message: String },

    #[error("no physical mapping: {0}")]
    PhysicalPlan(String),

    #[error("XML parse error in {} at byte {offset}: {message}", path.display())]
    Parse {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("tuple of {tuple_bytes} bytes exceeds the frame capacity of {capacity} bytes")]
    FrameOverflow { tuple_bytes: usize, capacity: usize },

    #[error("spill file error: {0}")]
    SpillIo(String),

    #[error("partition {partition}: {source}")]
    InPartition {
        partition: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn type_err(msg: impl Into<String>) -> Self {
        Error::Type(msg.into())
    }

    pub fn dynamic(msg: impl Into<String>) -> Self {
        Error::Dynamic(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// The innermost error, looking through partition wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::InPartition { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code: 2 for malformed query text, 3 for static or
    /// dynamic type failures, 4 for everything that happens while running.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Lex { .. } | Error::Syntax { .. } => 2,
            Error::Bind(_) | Error::Type(_) | Error::Translation(_) => 3,
            _ => 4,
        }
    }
}
