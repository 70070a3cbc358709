//! Runs fitting and training experiments and writes their results to disk.

pub mod experiment;
pub mod report;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] ratnet_core::Error),

    #[error("invalid experiment: {0}")]
    Invalid(String),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub const EXIT_OUTPUT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

impl RunError {
    /// Bad input is a usage error; failures inside the optimizers are numerical.
    pub fn exit_code(&self) -> i32 {
        use ratnet_core::Error as E;
        match self {
            RunError::Invalid(_) => EXIT_USAGE,
            RunError::Core(
                E::InvalidArgument(_)
                | E::UnknownFunction(_)
                | E::Parse { .. }
                | E::Domain { .. }
                | E::Dimension(_)
                | E::Io(_),
            ) => EXIT_USAGE,
            RunError::Core(_) => EXIT_NUMERICAL,
            RunError::Output { .. } | RunError::Csv(_) | RunError::Json(_) => EXIT_OUTPUT,
        }
    }

    pub fn kind(&self) -> &'static str {
        use ratnet_core::Error as E;
        match self {
            RunError::Invalid(_) => "invalid_experiment",
            RunError::Core(e) => match e {
                E::Domain { .. } => "domain",
                E::Pole { .. } => "pole",
                E::Dimension(_) => "dimension",
                E::InvalidArgument(_) => "invalid_argument",
                E::SolverStalled { .. } | E::FeasibilityStalled { .. } => "solver_stalled",
                E::Invariant(_) => "invariant",
                E::DegenerateFit(_) => "degenerate_fit",
                E::Bracket(_) => "bracket",
                E::Numerical(_) => "numerical",
                E::UnknownFunction(_) => "unknown_function",
                E::Parse { .. } => "parse",
                E::Io(_) => "io",
            },
            RunError::Output { .. } => "output",
            RunError::Csv(_) => "csv",
            RunError::Json(_) => "json",
        }
    }

    /// The machine-readable form printed on stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

pub type Result<T, E = RunError> = std::result::Result<T, E>;

#[cfg(test)]
mod tests {
    use super::*;
    use ratnet_core::Error as E;

    #[test]
    fn exit_codes_by_failure_class() {
        assert_eq!(RunError::Invalid("x".into()).exit_code(), EXIT_USAGE);
        assert_eq!(RunError::from(E::UnknownFunction("f".into())).exit_code(), EXIT_USAGE);
        let numerical = [
            E::Numerical("x".into()),
            E::SolverStalled { iterations: 3 },
            E::Pole {
                point: vec![0.0],
                denominator: 0.0,
            },
        ];
        for e in numerical {
            assert_eq!(RunError::from(e).exit_code(), EXIT_NUMERICAL);
        }
    }

    #[test]
    fn error_json_is_machine_readable() {
        let e = RunError::from(E::SolverStalled { iterations: 7 });
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["error"], "solver_stalled");
        assert_eq!(v["exit_code"], 3);
        assert!(v["message"].as_str().unwrap().contains('7'));
    }
}
