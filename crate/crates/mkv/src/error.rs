use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid error: {0}")]
    Grid(String),
    #[error("grids do not match")]
    GridMismatch,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("under-resolved: {0}; smallest admissible N is {1}")]
    Resolution(String, usize),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("numerical failure at s = {0}: {1}")]
    Numerical(f64, String),
    #[error("well-posedness conditions fail: {0}")]
    Conditions(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
