use std::fmt;
use std::path::Path;

use songwriter_core::corpus::CorpusError;
use songwriter_core::metrics::MetricsError;
use songwriter_core::midi::MidiError;
use songwriter_core::model::ModelError;
use songwriter_core::score::ScoreError;

/// Failure classes, each with its own exit code. Argument errors exit
/// with 2 from the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Io,
    Input,
    Model,
    CheckFailed,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Io => "io",
            Kind::Input => "invalid-input",
            Kind::Model => "model",
            Kind::CheckFailed => "check-failed",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::new(Kind::Io, format!("{}: {e}", path.display()))
    }

    pub fn code(&self) -> u8 {
        match self.kind {
            Kind::Io => 3,
            Kind::Input => 4,
            Kind::Model => 5,
            Kind::CheckFailed => 6,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind.name(),
            "code": self.code(),
            "message": self.message,
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.name(), self.message)
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        CliError::new(Kind::Input, e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::new(Kind::Input, e.to_string())
    }
}

impl From<MidiError> for CliError {
    fn from(e: MidiError) -> Self {
        CliError::new(Kind::Input, e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let kind = match e {
            ModelError::Corpus(_) | ModelError::EmptyLine | ModelError::EmptyTrainingSet => Kind::Input,
            _ => Kind::Model,
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Model(m) => m.into(),
            other => CliError::new(Kind::Input, other.to_string()),
        }
    }
}
