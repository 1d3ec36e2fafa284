use pilotwave_core::eprb::{chsh_experiment, correlation, records_at, run_pairs, ChshResult, SingletSpec};
use pilotwave_core::spin_dynamics::SternGerlachSetup;
use serde::Serialize;

use super::Outcome;
use crate::config::EprbBlock;
use crate::error::{config_error, failed, CliError};

const BLOCK: &str = "eprb";

pub fn spec(b: &EprbBlock) -> Result<SingletSpec, CliError> {
    if b.deltas.is_empty() {
        return Err(CliError::invalid("eprb.deltas", "needs at least one offset"));
    }
    if b.n_pairs == 0 {
        return Err(CliError::invalid("eprb.n_pairs", "must be at least 1"));
    }
    for (name, v) in [("hbar", b.hbar), ("mass", b.mass)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::invalid(format!("{BLOCK}.{name}"), "must be positive"));
        }
    }
    let grid = b.grid.build(BLOCK)?;
    if grid.dims() != 1 {
        return Err(CliError::invalid("eprb.grid", "the pair devices use a one-dimensional z line"));
    }
    let spec = SingletSpec {
        sigma0: b.sigma0,
        setup: SternGerlachSetup {
            grid,
            sigma0: b.sigma0,
            hbar: b.hbar,
            mass: b.mass,
            magnet: b.magnet,
            dt: b.dt,
            record_every: 8,
            bins: 100,
        },
    };
    spec.device().map_err(|e| config_error(BLOCK, e))?;
    Ok(spec)
}

pub fn check(b: &EprbBlock) -> Result<Vec<String>, CliError> {
    let s = spec(b)?;
    let mut warnings = Vec::new();
    let spot = s.setup.magnet.impulse_offset(s.setup.mass);
    let zmax = s.setup.grid.axis(0).max;
    if spot > 0.8 * zmax {
        warnings.push(format!("spots at +-{spot:.3} come close to the grid edge {zmax}"));
    }
    if spot < 4.0 * s.sigma0 {
        warnings.push(format!("spot offset {spot:.3} is under four packet widths; outcomes may be unresolved"));
    }
    Ok(warnings)
}

#[derive(Serialize)]
struct Counts {
    #[serde(rename = "++")]
    pp: usize,
    #[serde(rename = "+-")]
    pm: usize,
    #[serde(rename = "-+")]
    mp: usize,
    #[serde(rename = "--")]
    mm: usize,
}

#[derive(Serialize)]
struct CorrelationSummary {
    delta: f64,
    e: f64,
    se: f64,
    expected: f64,
    n: usize,
    counts: Counts,
}

#[derive(Serialize)]
struct Summary {
    n_pairs: usize,
    seed: u64,
    correlations: Vec<CorrelationSummary>,
    chsh: Option<ChshResult>,
}

pub fn run(b: &EprbBlock) -> Result<Outcome, CliError> {
    let spec = spec(b)?;
    let fail = failed("eprb");
    let deltas: Vec<f64> = b.deltas.iter().map(|a| a.0).collect();
    let records = run_pairs(&spec, &deltas, b.n_pairs, b.seed, b.order).map_err(&fail)?;
    let mut correlations = Vec::new();
    let mut out = Outcome::default();
    let mut seen = Vec::new();
    for &d in &deltas {
        // Repeated offsets share one summary entry.
        if seen.contains(&d) {
            continue;
        }
        seen.push(d);
        let at = records_at(&records, d);
        let (e, se) = correlation(&at).map_err(&fail)?;
        let count = |a: i8, bb: i8| at.iter().filter(|r| r.outcome_a == a && r.outcome_b == bb).count();
        out.table.push((format!("E({d:.4})"), format!("{e:+.4} +- {se:.4} (-cos {:+.4})", -d.cos())));
        correlations.push(CorrelationSummary {
            delta: d,
            e,
            se,
            expected: -d.cos(),
            n: at.len(),
            counts: Counts { pp: count(1, 1), pm: count(1, -1), mp: count(-1, 1), mm: count(-1, -1) },
        });
    }
    let chsh = match &b.chsh {
        Some(s) => {
            let settings = [s[0].0, s[1].0, s[2].0, s[3].0];
            let r = chsh_experiment(&spec, settings, b.n_pairs, b.seed.wrapping_add(1), b.order).map_err(&fail)?;
            out.table.push(("CHSH S".into(), format!("{:.4} +- {:.4}", r.s, r.s_error)));
            Some(r)
        }
        None => None,
    };
    out.artifacts.csv("records.csv", &records);
    out.artifacts.json("summary.json", &Summary { n_pairs: b.n_pairs, seed: b.seed, correlations, chsh });
    Ok(out)
}
