use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("input is not valid {encoding} text (first bad byte near offset {offset})")]
    Undecodable { encoding: &'static str, offset: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("block list is malformed: {0}")]
    Structure(String),

    #[error("population must be at least 1")]
    EmptyPopulation,

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
