use pilotwave_core::pilot::jonsson::{jonsson_experiment, JonssonConfig};
use pilotwave_core::pilot::Impact;
use serde::Serialize;

use super::Outcome;
use crate::error::{config_error, failed, CliError};
use crate::io;

const BLOCK: &str = "jonsson";

pub fn check(cfg: &JonssonConfig) -> Result<Vec<String>, CliError> {
    cfg.validate().map_err(|e| config_error(BLOCK, e))?;
    cfg.initial_field().map_err(|e| config_error(BLOCK, e))?;
    // The longitudinal carrier rides in the packet frame; the transverse
    // axis has to resolve the fringe structure, whose scale is lambda.
    let lambda = 2.0 * std::f64::consts::PI * cfg.hbar / (cfg.mass * cfg.velocity);
    let hy = 2.0 * cfg.grid.half_y / (cfg.grid.ny - 1) as f64;
    let mut warnings = Vec::new();
    if lambda < 8.0 * hy {
        warnings.push(format!("de Broglie wavelength {lambda:.4} spans {:.1} transverse cells; at least 8 are recommended", lambda / hy));
    }
    let spacing = cfg.predicted_fringe_spacing();
    if spacing < 8.0 * hy {
        warnings.push(format!("fringe spacing {spacing:.4} spans only {:.1} transverse cells", spacing / hy));
    }
    Ok(warnings)
}

#[derive(Serialize)]
struct ImpactRow {
    traj_id: usize,
    screen_coordinate: f64,
}

#[derive(Serialize)]
struct MarginalRow {
    t: f64,
    /// Lab longitudinal position of the packet center.
    x_center: f64,
    y: f64,
    density: f64,
}

#[derive(Serialize)]
struct Summary {
    predicted_fringe_spacing: f64,
    fringe_spacing: Option<f64>,
    fringe_relative_error: Option<f64>,
    impacts: usize,
    all_equivariant: bool,
    equivariance_snapshots: usize,
    bundle_min_separation: Option<f64>,
    bundle_min_separation_time: Option<f64>,
    grid_cell: f64,
}

fn impact_rows(impacts: &[Impact]) -> Vec<ImpactRow> {
    impacts.iter().map(|i| ImpactRow { traj_id: i.traj_id, screen_coordinate: i.position[1] }).collect()
}

pub fn run(cfg: &JonssonConfig) -> Result<Outcome, CliError> {
    check(cfg)?;
    let run = jonsson_experiment(&JonssonConfig { keep_fields: false, ..cfg.clone() }).map_err(failed("jonsson"))?;
    let grid = cfg.grid().map_err(|e| config_error(BLOCK, e))?;
    let sep = run.bundle.min_pairwise_separation();
    let summary = Summary {
        predicted_fringe_spacing: run.predicted_spacing,
        fringe_spacing: run.fringe_spacing,
        fringe_relative_error: run.fringe_spacing.map(|s| (s - run.predicted_spacing).abs() / run.predicted_spacing),
        impacts: run.impacts.len(),
        all_equivariant: run.equivariance.iter().all(|s| s.passed),
        equivariance_snapshots: run.equivariance.len(),
        bundle_min_separation: sep.map(|s| s.0),
        bundle_min_separation_time: sep.map(|s| s.1),
        grid_cell: grid.min_spacing(),
    };
    let mut out = Outcome::default();
    out.table.push((
        "fringe spacing".into(),
        match run.fringe_spacing {
            Some(s) => format!("{s:.4} (predicted {:.4})", run.predicted_spacing),
            None => format!("unresolved (predicted {:.4})", run.predicted_spacing),
        },
    ));
    out.table.push(("screen impacts".into(), run.impacts.len().to_string()));
    out.table.push((
        "equivariance".into(),
        format!("{}/{} snapshots pass", run.equivariance.iter().filter(|s| s.passed).count(), run.equivariance.len()),
    ));
    if let Some((d, _)) = sep {
        out.table.push(("bundle min separation".into(), format!("{d:.4} (cell {:.4})", summary.grid_cell)));
    }
    let marginals = run.marginals.iter().flat_map(|m| {
        let xc = cfg.velocity * m.time;
        m.y.iter().zip(&m.density).map(move |(&y, &d)| MarginalRow { t: m.time, x_center: xc, y, density: d })
    });
    out.artifacts.csv("marginals.csv", marginals);
    out.artifacts.push("trajectories.csv", io::trajectories(&run.bundle));
    out.artifacts.csv("impacts.csv", impact_rows(&run.impacts));
    out.artifacts.csv("bundle_impacts.csv", impact_rows(&run.bundle_impacts));
    out.artifacts.push("equivariance.csv", io::equivariance(&run.equivariance));
    out.artifacts.json("summary.json", &summary);
    Ok(out)
}
