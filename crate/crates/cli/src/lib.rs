//! Job-spec driven front end for `infogeo-core`: parse and validate a JSON
//! job spec, run it, and write a JSON report or a CSV sweep.

pub mod export;
pub mod models;
pub mod report;
pub mod run;
pub mod spec;

pub use report::{parse_report, ErrorObject, Report};
pub use run::{exit_code, run};
pub use spec::{parse, Command, JobSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Spec(#[from] spec::SpecErrors),
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error(transparent)]
    Model(#[from] infogeo_core::Error),
}

impl CliError {
    pub fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Field { path: path.into(), message: message.into() }
    }

    /// Machine-readable form: one object per offending field.
    pub fn to_objects(&self) -> Vec<ErrorObject> {
        match self {
            CliError::Spec(errs) => errs
                .0
                .iter()
                .map(|e| ErrorObject { kind: "spec".into(), path: Some(e.path.clone()), message: e.message.clone() })
                .collect(),
            CliError::Field { path, message } => {
                vec![ErrorObject { kind: "spec".into(), path: Some(path.clone()), message: message.clone() }]
            }
            CliError::Model(e) => vec![ErrorObject { kind: "model".into(), path: None, message: e.to_string() }],
        }
    }
}
