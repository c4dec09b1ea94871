use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = PersonaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PersonaError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("input is not valid UTF-8 (byte offset {offset})")]
    Encoding { offset: usize },
    #[error("row {row}, column {column}: unrecognized label {value:?}")]
    Label {
        row: usize,
        column: String,
        value: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Msf(#[from] persona_core::msf::MsfError),
    #[error(transparent)]
    Annotation(#[from] persona_core::annotation::AnnotationError),
    #[error(transparent)]
    Agreement(#[from] persona_core::agreement::AgreementError),
    #[error(transparent)]
    Format(#[from] persona_core::formats::FormatError),
    #[error(transparent)]
    Cv(#[from] persona_core::cv::CvError),
    #[error(transparent)]
    Classify(#[from] persona_core::classify::ClassifyError),
    #[error("model file line {line}: {message}")]
    ModelFile { line: usize, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
}

impl PersonaError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        PersonaError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PersonaError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 3 for configuration problems, 2 for everything
    /// that is wrong with the data.
    pub fn exit_code(&self) -> i32 {
        use persona_core::cv::CvError;
        use persona_core::msf::MsfError;
        match self {
            PersonaError::Config(_)
            | PersonaError::Msf(MsfError::InvalidConfig(_))
            | PersonaError::Cv(CvError::BadK { .. }) => 3,
            _ => 2,
        }
    }
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| PersonaError::io(path, e))
}

pub(crate) fn write_file(path: &std::path::Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| PersonaError::io(path, e))
}
