use thiserror::Error;

/// Failure of a CLI verb, carrying its exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

/// Sorts a library error into the exit-status buckets.
pub fn classify(e: dtr_core::Error) -> CliError {
    use dtr_core::Error as E;
    match e {
        E::InvalidConfig(_) | E::InvalidShares(_) | E::InvalidWeights(_) => {
            CliError::Config(e.to_string())
        }
        E::Schema(_)
        | E::Parse { .. }
        | E::DuplicateDate(_)
        | E::IncompleteMonth { .. }
        | E::InvalidSeries(_)
        | E::InsufficientData(_)
        | E::Csv(_)
        | E::Snapshot(_) => CliError::Data(e.to_string()),
        _ => CliError::Runtime(e.to_string()),
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
