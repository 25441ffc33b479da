use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config field `{key}`: {message}")]
    Field { key: String, message: String },
    #[error("initial data: {0}")]
    Data(String),
    #[error("experiment {experiment} (config {hash}): {source}")]
    Core {
        experiment: &'static str,
        hash: String,
        #[source]
        source: nls_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
