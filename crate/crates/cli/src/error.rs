use furstenberg_core::boundary::BoundaryError;
use furstenberg_core::divergence::DivergenceError;
use furstenberg_core::free_group::FreeGroupError;
use furstenberg_core::majorant::MajorantError;
use furstenberg_core::walk::WalkError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("payload of `{0}` has no tabular form; use --format json")]
    UnsupportedPayloadForCsv(String),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
    #[error("internal error: {0}")]
    Internal(String),
}

/// Machine-readable error document written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorPayload {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub exit_code: i32,
}

impl CliError {
    pub fn validation(field: &str, message: impl ToString) -> Self {
        CliError::Validation {
            field: field.to_string(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. }
            | CliError::Validation { .. }
            | CliError::UnsupportedPayloadForCsv(_) => 2,
            CliError::BudgetExceeded(_) => 3,
            CliError::Io { .. } | CliError::Internal(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "ParseError",
            CliError::Validation { .. } => "ValidationError",
            CliError::BudgetExceeded(_) => "BudgetExceeded",
            CliError::UnsupportedPayloadForCsv(_) => "UnsupportedPayloadForCsv",
            CliError::Io { .. } => "IoError",
            CliError::Internal(_) => "InternalError",
        }
    }

    pub fn payload(&self) -> ErrorPayload {
        let field = match self {
            CliError::Parse { path, .. } => Some(path.clone()),
            CliError::Validation { field, .. } => Some(field.clone()),
            CliError::Io { path, .. } => Some(path.clone()),
            _ => None,
        };
        ErrorPayload {
            kind: self.kind(),
            message: self.to_string(),
            field,
            exit_code: self.exit_code(),
        }
    }

    /// Attaches the offending command-line field to a core error.
    pub fn from_core(field: &str, err: impl Into<CoreError>) -> Self {
        match err.into() {
            CoreError::Budget(message) => CliError::BudgetExceeded(message),
            CoreError::Internal(message) => CliError::Internal(message),
            CoreError::Invalid(message) => CliError::validation(field, message),
        }
    }
}

/// Coarse classification of library errors by exit status.
pub enum CoreError {
    Invalid(String),
    Budget(String),
    Internal(String),
}

impl From<DivergenceError> for CoreError {
    fn from(e: DivergenceError) -> Self {
        CoreError::Invalid(e.to_string())
    }
}

impl From<FreeGroupError> for CoreError {
    fn from(e: FreeGroupError) -> Self {
        CoreError::Invalid(e.to_string())
    }
}

impl From<BoundaryError> for CoreError {
    fn from(e: BoundaryError) -> Self {
        match e {
            BoundaryError::NoConvergence { .. } => CoreError::Internal(e.to_string()),
            BoundaryError::Divergence(inner) => inner.into(),
            BoundaryError::FreeGroup(inner) => inner.into(),
            other => CoreError::Invalid(other.to_string()),
        }
    }
}

impl From<WalkError> for CoreError {
    fn from(e: WalkError) -> Self {
        match e {
            WalkError::BudgetExceeded { .. } => CoreError::Budget(e.to_string()),
            WalkError::Boundary(inner) => inner.into(),
            WalkError::FreeGroup(inner) => inner.into(),
            other => CoreError::Invalid(other.to_string()),
        }
    }
}

impl From<MajorantError> for CoreError {
    fn from(e: MajorantError) -> Self {
        match e {
            MajorantError::Divergence(inner) => inner.into(),
            other => CoreError::Invalid(other.to_string()),
        }
    }
}
