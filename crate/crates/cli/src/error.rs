use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] bhcache::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Short machine-readable tag printed as `error[<category>]`.
    pub fn category(&self) -> &'static str {
        use bhcache::Error as E;
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Model(E::EnumerationCap { .. }) => "refused",
            CliError::Model(E::InvalidScenario(_) | E::InvalidConfig(_) | E::Domain { .. }) => {
                "config"
            }
            CliError::Model(E::Infeasible(_)) => "infeasible",
            CliError::Model(E::Parse { .. }) => "parse",
            CliError::Model(E::SlotCap { .. }) => "simulation",
            CliError::Model(_) => "solver",
        }
    }

    /// Process exit code; 2 is left to argument parsing.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 3,
            "io" => 4,
            "refused" => 5,
            "infeasible" => 6,
            "parse" => 7,
            "simulation" => 8,
            _ => 9,
        }
    }
}
