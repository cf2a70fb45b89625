use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Numerical {
        stage: &'static str,
        #[source]
        source: magnon_ghz::Error,
    },
    #[error("writing {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical { .. } => 3,
            RunError::Output { .. } => 1,
        }
    }

    /// Sorts a library error into bad input (exit 2) or a failed computation (exit 3).
    pub fn from_core(stage: &'static str, err: magnon_ghz::Error) -> Self {
        use magnon_ghz::Error as E;
        match err {
            E::Positivity { .. }
            | E::StepUnderflow { .. }
            | E::StepBudget(_)
            | E::NoPeak(_)
            | E::Numerical(_)
            | E::Truncation(_)
            | E::NotHermitian(_) => RunError::Numerical { stage, source: err },
            other => RunError::Config(format!("{stage}: {other}")),
        }
    }
}

pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, RunError>;
}

impl<T> Stage<T> for magnon_ghz::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, RunError> {
        self.map_err(|e| RunError::from_core(stage, e))
    }
}
