//! One module per experiment: `check` validates a block and returns
//! warnings, `run` produces the artifacts.

pub mod coherent;
pub mod eprb;
pub mod gaussian_linear;
pub mod hopf_lax;
pub mod jonsson;
pub mod stern_gerlach;
pub mod sweep;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliError;
use crate::io::Artifacts;

#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Artifacts,
    /// Key results printed after a run.
    pub table: Vec<(String, String)>,
}

macro_rules! dispatch {
    ($cfg:expr, $f:ident) => {{
        let cfg = $cfg;
        // `kind` has already checked that exactly the matching block is set.
        match cfg.kind()? {
            ExperimentKind::HopfLax => hopf_lax::$f(cfg.hopf_lax.as_ref().unwrap()),
            ExperimentKind::GaussianLinear => gaussian_linear::$f(cfg.gaussian_linear.as_ref().unwrap()),
            ExperimentKind::Jonsson => jonsson::$f(cfg.jonsson.as_ref().unwrap()),
            ExperimentKind::SternGerlach => stern_gerlach::$f(cfg.stern_gerlach.as_ref().unwrap()),
            ExperimentKind::Eprb => eprb::$f(cfg.eprb.as_ref().unwrap()),
            ExperimentKind::Coherent => coherent::$f(cfg.coherent.as_ref().unwrap()),
            ExperimentKind::Sweep => sweep::$f(cfg.sweep.as_ref().unwrap()),
        }
    }};
}

pub fn check(cfg: &ExperimentConfig) -> Result<Vec<String>, CliError> {
    dispatch!(cfg, check)
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    dispatch!(cfg, run)
}
