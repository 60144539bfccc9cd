//! Exit statuses and the mapping from library errors onto them.

use anonet_core::analysis::AnalysisError;
use anonet_core::registry::{ExperimentError, RegistryError};
use anonet_core::{AdversaryError, RunError};

pub const OK: u8 = 0;
pub const OTHER: u8 = 1;
pub const FALSE: u8 = 2;
pub const UNSETTLED: u8 = 3;
pub const USAGE: u8 = 64;
pub const PARSE: u8 = 65;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Failure::new(OTHER, format!("{}: {e}", path.display()))
    }
}

fn adversary_code(e: &AdversaryError) -> u8 {
    match e {
        AdversaryError::Exhausted { .. } => UNSETTLED,
        AdversaryError::Construction(_) => USAGE,
        _ => PARSE,
    }
}

impl From<RegistryError> for Failure {
    fn from(e: RegistryError) -> Self {
        let code = match &e {
            RegistryError::Io { .. } => OTHER,
            RegistryError::Adversary(a) => adversary_code(a),
            _ => USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        let code = match &e {
            RunError::Adversary(a) => adversary_code(a),
            RunError::Protocol { .. } => OTHER,
            RunError::UnsupportedMode { .. } | RunError::Config(_) => USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Registry(e) => e.into(),
            ExperimentError::Run(e) => e.into(),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        let code = match &e {
            AnalysisError::Run(_) => OTHER,
            AnalysisError::Undefined | AnalysisError::PreconditionBroken(_) => UNSETTLED,
            AnalysisError::Refused(_) | AnalysisError::Inapplicable(_) | AnalysisError::TooFewPoints(_) => USAGE,
        };
        match e {
            AnalysisError::Run(run) => run.into(),
            other => Failure::new(code, other.to_string()),
        }
    }
}
