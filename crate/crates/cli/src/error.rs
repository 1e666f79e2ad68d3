use serde_json::json;
use vacuumlab_core::ErrorKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("unknown command `{name}`; available: {available}")]
    UnknownCommand { name: String, available: String },
    #[error("missing parameter `{0}`")]
    Missing(&'static str),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] vacuumlab_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.kind() == ErrorKind::Numerical => EXIT_NUMERICAL,
            _ => EXIT_INVALID,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::UnknownCommand { .. } => "unknown-command",
            CliError::Missing(_) => "missing-parameter",
            CliError::Config(_) => "invalid-config",
            CliError::Io(_) => "io-error",
            CliError::Core(e) => e.label(),
        }
    }

    /// Machine-readable error object, written to stderr.
    pub fn to_json(&self, command: Option<&str>) -> serde_json::Value {
        let kind = if self.exit_code() == EXIT_NUMERICAL {
            "numerical"
        } else {
            "invalid-input"
        };
        json!({
            "error": {
                "code": self.label(),
                "kind": kind,
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            },
            "command": command,
        })
    }
}
