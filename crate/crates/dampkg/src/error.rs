use dampkg_core::Error as CoreError;
use serde_json::{json, Value};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}{message}", path.as_deref().map(|p| format!("{p}: ")).unwrap_or_default())]
    Validation { path: Option<String>, message: String },
    #[error("io: {0}")]
    Io(String),
    #[error("{source}")]
    Core {
        path: Option<String>,
        #[source]
        source: CoreError,
    },
}

impl From<CoreError> for CliError {
    fn from(source: CoreError) -> Self {
        CliError::Core { path: None, source }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    /// Attaches a config path to errors that do not carry one yet.
    pub fn at(self, at: &str) -> Self {
        match self {
            CliError::Validation { path: None, message } => CliError::Validation { path: Some(at.into()), message },
            CliError::Core { path: None, source } => CliError::Core { path: Some(at.into()), source },
            e => e,
        }
    }

    /// Config path the error refers to, when known.
    pub fn path(&self) -> Option<&str> {
        match self {
            CliError::Validation { path, .. } | CliError::Core { path, .. } => path.as_deref(),
            CliError::Io(_) => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation { .. } | CliError::Io(_) => "validation",
            CliError::Core { source, .. } => match source {
                CoreError::NumericDomain(_) | CoreError::NumericFailure { .. } | CoreError::Pole { .. } => "numeric",
                CoreError::Convergence { .. } => "convergence",
                _ => "validation",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "numeric" => EXIT_NUMERIC,
            "convergence" => EXIT_CONVERGENCE,
            _ => EXIT_VALIDATION,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let Some(p) = self.path() {
            v["path"] = json!(p);
        }
        if let CliError::Core { source, .. } = self {
            match source {
                CoreError::NumericFailure { step, .. } => v["step"] = json!(step),
                CoreError::Convergence { iterations, residual } => {
                    v["iterations"] = json!(iterations);
                    v["residual"] = json!(residual);
                }
                CoreError::Pole { lambda, mode } => {
                    v["lambda"] = json!(lambda);
                    v["mode"] = json!(mode);
                }
                _ => {}
            }
        }
        v
    }
}
