use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Core(#[from] spinlab_core::Error),
    #[error("dump format: {0}")]
    Dump(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

/// One-line error report written to stderr (and `error.json` when possible).
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl LabError {
    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Schema(_) => "schema",
            LabError::Core(spinlab_core::Error::Capacity { .. }) => "capacity",
            LabError::Core(_) => "numerical",
            LabError::Dump(_) => "dump",
            LabError::Io(_) | LabError::Csv(_) | LabError::Json(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "schema" => 2,
            "capacity" => 3,
            "numerical" => 4,
            _ => 1,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            kind: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        }
    }
}
