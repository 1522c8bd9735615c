use gwrc::conductance::CondError;
use gwrc::laws::LawError;
use gwrc::speed::SpeedError;
use gwrc::tree::TreeError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{field}: {message} (line {line}, column {column})")]
    Parse {
        field: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {source}")]
    Law { field: String, source: LawError },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Speed(#[from] SpeedError),
    #[error(transparent)]
    Conductance(#[from] CondError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "ParseError",
            CliError::Law { source, .. } => match source {
                LawError::ZeroNotAllowed(_) => "ZeroNotAllowed",
                LawError::NotSupercritical(_) => "NotSupercritical",
                LawError::NotNormalized(_) => "NotNormalized",
                LawError::InvalidProbability { .. } => "InvalidProbability",
                LawError::InvalidConductanceLaw(_) => "InvalidConductanceLaw",
            },
            CliError::InvalidConfig(_) => "InvalidConfig",
            CliError::Io { .. } => "IoError",
            CliError::Speed(e) => match e {
                SpeedError::InfiniteGamma => "InfiniteGamma",
                SpeedError::UnequalMeans(_) => "UnequalMeans",
                SpeedError::DegenerateLaw => "DegenerateLaw",
                SpeedError::InvalidConfig(_) => "InvalidConfig",
                SpeedError::Conductance(_) => "ConductanceError",
                SpeedError::Tree(_) => "TreeError",
            },
            CliError::Conductance(_) => "ConductanceError",
            CliError::Tree(e) => match e {
                TreeError::BudgetExceeded { .. } => "BudgetExceeded",
                TreeError::NodeUnknown(_) => "NodeUnknown",
                TreeError::Malformed(_) => "MalformedTree",
            },
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut error = json!({
            "kind": self.kind(),
            "message": self.to_string(),
        });
        match self {
            CliError::Parse { field, line, column, .. } => {
                error["field"] = json!(field);
                error["line"] = json!(line);
                error["column"] = json!(column);
            }
            CliError::Law { field, .. } => error["field"] = json!(field),
            _ => {}
        }
        json!({ "schema": crate::SCHEMA, "error": error })
    }
}
