use std::path::PathBuf;

use pilotwave_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ConfigRead { path: PathBuf, source: std::io::Error },

    #[error("config does not parse: {0}")]
    ConfigParse(String),

    #[error("invalid config field `{field}`: {reason}")]
    ConfigInvalid { field: String, reason: String },

    #[error("unknown experiment `{name}`{}", suggestion.as_ref().map(|s| format!("; did you mean `{s}`?")).unwrap_or_default())]
    UnknownExperiment { name: String, suggestion: Option<String> },

    #[error("{experiment} failed: {source}")]
    ExperimentFailed { experiment: &'static str, source: CoreError },

    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigRead { .. }
            | CliError::ConfigParse(_)
            | CliError::ConfigInvalid { .. }
            | CliError::UnknownExperiment { .. } => 2,
            CliError::ExperimentFailed { .. } | CliError::Output { .. } => 3,
        }
    }

    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::ConfigInvalid { field: field.into(), reason: reason.into() }
    }
}

/// Core errors raised while turning a config block into core inputs are
/// config errors; the field is qualified by the block name.
pub fn config_error(block: &str, e: CoreError) -> CliError {
    match e {
        CoreError::InvalidParameter { name, reason } => CliError::invalid(format!("{block}.{name}"), reason),
        CoreError::InvalidGrid(reason) => CliError::invalid(format!("{block}.grid"), reason),
        CoreError::PacketClipped { tail_mass } => {
            CliError::invalid(format!("{block}.grid"), format!("packet loses {tail_mass:.3e} of its mass outside the grid"))
        }
        CoreError::StabilityWarning { phase_per_step } => {
            CliError::invalid(format!("{block}.dt"), format!("potential phase per step {phase_per_step:.3} rad exceeds 0.5"))
        }
        CoreError::HbarDependentPreparation => {
            CliError::invalid(format!("{block}.sigma0"), "initial width depends on hbar")
        }
        other => CliError::invalid(block, other.to_string()),
    }
}

pub fn failed(experiment: &'static str) -> impl Fn(CoreError) -> CliError {
    move |source| CliError::ExperimentFailed { experiment, source }
}
