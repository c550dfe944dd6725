use qorpilot_core::codegraph::GraphError;
use qorpilot_core::docmaker::DocError;
use qorpilot_core::executor::ExecError;
use qorpilot_core::flowsim::FlowError;
use qorpilot_core::localizer::LocalizeError;
use qorpilot_core::planner::PlanError;
use qorpilot_core::retrieval::RetrievalError;

/// A failed command, classified by the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// Inputs were readable but rejected.
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error("missing artifact {0}")]
    MissingArtifact(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Runtime(_) | CliError::MissingArtifact(_) => 3,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingArtifact(path.display().to_string())
        } else {
            CliError::Runtime(format!("{}: {e}", path.display()))
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Io { .. } | GraphError::Parser(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<DocError> for CliError {
    fn from(e: DocError) -> Self {
        match e {
            DocError::Io { .. } | DocError::SynthesizerUnavailable(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<RetrievalError> for CliError {
    fn from(e: RetrievalError) -> Self {
        match e {
            RetrievalError::Io { .. } | RetrievalError::EmbedderUnavailable(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::SynthesizerUnavailable(_) => CliError::Runtime(e.to_string()),
            PlanError::Retrieval(inner) => inner.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<LocalizeError> for CliError {
    fn from(e: LocalizeError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Io { .. } | FlowError::RunnerUnavailable(_) | FlowError::FlowCrash { .. } => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ExecError> for CliError {
    fn from(e: ExecError) -> Self {
        match e {
            ExecError::MalformedPatch(_)
            | ExecError::PatchOutsideSurface { .. }
            | ExecError::InvalidModel(_)
            | ExecError::MissingMetric(_)
            | ExecError::EmptyBisect
            | ExecError::PredicateInconsistent { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}
