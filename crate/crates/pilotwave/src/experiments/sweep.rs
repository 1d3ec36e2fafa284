use pilotwave_core::semiclassical::{run_sweep, SweepExperiment, SweepSpec};

use super::Outcome;
use crate::config::{SweepBlock, SweepKind};
use crate::error::{config_error, failed, CliError};
use crate::io;

pub fn spec(b: &SweepBlock) -> Result<SweepSpec, CliError> {
    let experiment = match b.kind {
        SweepKind::GaussianLinear => SweepExperiment::GaussianLinear(b.gaussian_linear.clone()),
        SweepKind::DoubleSlit => SweepExperiment::DoubleSlit(b.double_slit.clone()),
        SweepKind::CoherentOscillator => SweepExperiment::CoherentOscillator(b.coherent_oscillator.clone()),
    };
    let spec = SweepSpec { experiment, hbar_divisors: b.divisors.clone() };
    spec.validate().map_err(|e| config_error(&format!("sweep.{}", spec.experiment.name()), e))?;
    Ok(spec)
}

pub fn check(b: &SweepBlock) -> Result<Vec<String>, CliError> {
    spec(b)?;
    let mut warnings = Vec::new();
    if b.divisors.len() < 3 {
        warnings.push(format!("{} divisors give a poorly determined convergence slope", b.divisors.len()));
    }
    Ok(warnings)
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map_or("n/a".into(), |r| format!("{r:.3}"))
}

pub fn run(b: &SweepBlock) -> Result<Outcome, CliError> {
    let spec = spec(b)?;
    let run = run_sweep(&spec).map_err(failed("sweep"))?;
    let mut out = Outcome::default();
    let rates = &run.report.rates;
    out.table.push(("experiment".into(), run.report.experiment.clone()));
    for d in &run.report.divisors {
        out.table.push((format!("hbar/{}", d.divisor), format!("median deviation {:.3e}, max {:.3e}", d.median_deviation, d.max_deviation)));
    }
    out.table.push(("rate median deviation".into(), fmt_rate(rates.median_deviation)));
    out.table.push(("rate density L1".into(), fmt_rate(rates.density_l1)));
    out.table.push(("rate gauge".into(), fmt_rate(rates.action_gauge)));
    out.table.push(("rate width".into(), fmt_rate(rates.width_error)));
    out.artifacts.json("report.json", &run.report);
    for (div, ens) in &run.quantum {
        out.artifacts.push(&format!("trajectories_d{div}.csv"), io::trajectories(ens));
    }
    out.artifacts.push("classical.csv", io::trajectories(&run.classical));
    Ok(out)
}
