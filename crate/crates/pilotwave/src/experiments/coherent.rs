use std::f64::consts::PI;

use pilotwave_core::classical_hj::PotentialSpec;
use pilotwave_core::pilot::{evolve_guided, quantile_positions, PiecewiseLinear, Sampling, Tracker};
use pilotwave_core::semiclassical::require_resolved;
use pilotwave_core::wavefields::{coherent_state_in_frame, harmonic_orbit, ComplexField};
use pilotwave_core::{Axis, Boundary, Grid, Position};
use serde::Serialize;

use super::Outcome;
use crate::config::CoherentBlock;
use crate::error::{config_error, failed, CliError};
use crate::io;

const BLOCK: &str = "coherent";

struct Inputs {
    psi0: ComplexField,
    potential: PotentialSpec,
    x0: Position,
    v0: Position,
    sigma: f64,
    dt: f64,
}

fn vec2(v: &[f64], dims: usize, field: &str) -> Result<Position, CliError> {
    if v.len() != dims {
        return Err(CliError::invalid(field, format!("needs {dims} components to match x0")));
    }
    Ok([v[0], if dims == 2 { v[1] } else { 0.0 }])
}

fn build(b: &CoherentBlock) -> Result<Inputs, CliError> {
    for (name, v) in [("hbar", b.hbar), ("mass", b.mass), ("omega", b.omega), ("periods", b.periods), ("half_width_sigmas", b.half_width_sigmas)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::invalid(format!("{BLOCK}.{name}"), "must be positive"));
        }
    }
    let dims = b.x0.len();
    if !(1..=2).contains(&dims) {
        return Err(CliError::invalid("coherent.x0", "needs one or two components"));
    }
    let x0 = vec2(&b.x0, dims, "coherent.x0")?;
    let v0 = vec2(&b.v0, dims, "coherent.v0")?;
    if b.steps == 0 {
        return Err(CliError::invalid("coherent.steps", "must be at least 1"));
    }
    if b.record_every == 0 || b.record_every > b.steps {
        return Err(CliError::invalid("coherent.record_every", "must lie in [1, steps]"));
    }
    if b.n_traj == 0 {
        return Err(CliError::invalid("coherent.n_traj", "must be at least 1"));
    }
    let sigma = (b.hbar / (2.0 * b.mass * b.omega)).sqrt();
    let axis = Axis::centered(b.half_width_sigmas * sigma, b.nodes).map_err(|e| config_error(BLOCK, e))?;
    let grid = if dims == 1 { Grid::line(axis, Boundary::Periodic) } else { Grid::plane(axis.clone(), axis, Boundary::Periodic) }
        .map_err(|e| config_error(BLOCK, e))?;
    let potential = PotentialSpec::harmonic(b.mass, b.omega).map_err(|e| config_error(BLOCK, e))?;
    let psi0 = coherent_state_in_frame(b.omega, x0, v0, b.hbar, b.mass, 0.0, &grid).map_err(|e| config_error(BLOCK, e))?;
    require_resolved(&psi0).map_err(|e| config_error(BLOCK, e))?;
    let dt = b.periods * 2.0 * PI / b.omega / b.steps as f64;
    pilotwave_core::wavefields::Propagator::new(&psi0, &potential, dt).map_err(|e| config_error(BLOCK, e))?;
    Ok(Inputs { psi0, potential, x0, v0, sigma, dt })
}

pub fn check(b: &CoherentBlock) -> Result<Vec<String>, CliError> {
    build(b)?;
    let mut warnings = Vec::new();
    if b.steps as f64 / b.periods < 200.0 {
        warnings.push(format!("{:.0} steps per period; at least 200 are recommended", b.steps as f64 / b.periods));
    }
    Ok(warnings)
}

#[derive(Serialize)]
struct OrbitRow {
    t: f64,
    center_x: f64,
    center_y: f64,
    xi_x: f64,
    xi_y: f64,
    width_x: f64,
    width_y: f64,
    interquartile_x: f64,
}

#[derive(Serialize)]
struct ClassicalRow {
    traj_id: usize,
    t: f64,
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct Summary {
    sigma: f64,
    /// Interquartile range of the exact Gaussian, `2 * 0.6745 sigma`.
    interquartile_exact: f64,
    orbit_radius: f64,
    duration: f64,
    max_center_error: f64,
    max_center_error_rel: f64,
    max_width_error: f64,
    max_width_error_rel: f64,
    max_interquartile_error_rel: f64,
    /// `max |X(t) - X(0) - (xi(t) - xi(0))|` over the bundle.
    max_rigidity: f64,
    max_rigidity_rel: f64,
}

fn interquartile(grid: &Grid, rho: &[f64]) -> f64 {
    let [n0, n1] = grid.shape();
    let marginal: Vec<f64> = (0..n0).map(|i| (0..n1).map(|j| rho[grid.index(i, j)]).sum()).collect();
    let line = PiecewiseLinear::new(grid.axis(0).coords(), marginal);
    line.inverse(0.75 * line.total()) - line.inverse(0.25 * line.total())
}

pub fn run(b: &CoherentBlock) -> Result<Outcome, CliError> {
    let inp = build(b)?;
    let fail = failed("coherent");
    let dims = inp.psi0.grid().dims();
    let levels: Vec<Position> = (0..b.n_traj).map(|i| [(i as f64 + 0.5) / b.n_traj as f64, 0.5]).collect();
    let start = quantile_positions(&inp.psi0, &levels);
    let mut trackers = [Tracker::scalar(&start, inp.psi0.origin(), 0.0, b.record_every)];
    let radius = (inp.x0[0].powi(2) + inp.x0[1].powi(2) + (inp.v0[0].powi(2) + inp.v0[1].powi(2)) / b.omega.powi(2)).sqrt();
    let iqr_exact = 2.0 * 0.674_489_750_196_081_7 * inp.sigma;
    let mut orbit = Vec::new();
    let psi = evolve_guided(&inp.psi0, &inp.potential, inp.dt, b.steps, b.record_every, &mut trackers, |_, psi, _| {
        let lab = psi.to_lab();
        let rho = lab.density();
        let (xi, _) = harmonic_orbit(b.omega, inp.x0, inp.v0, psi.time());
        let w = |k: usize| if k < dims { rho.variance(k).sqrt() } else { 0.0 };
        orbit.push(OrbitRow {
            t: psi.time(),
            center_x: rho.mean(0),
            center_y: if dims == 2 { rho.mean(1) } else { 0.0 },
            xi_x: xi[0],
            xi_y: xi[1],
            width_x: w(0),
            width_y: w(1),
            interquartile_x: interquartile(lab.grid(), rho.values()),
        });
        Ok(())
    })
    .map_err(&fail)?;
    require_resolved(&psi).map_err(&fail)?;
    let [tr] = trackers;
    let ens = tr.finish(Sampling::Quantile);

    let mut max_rigidity = 0.0f64;
    let mut classical = Vec::new();
    for (id, t) in ens.trajectories.iter().enumerate() {
        let p0 = t.positions[0];
        for (&time, p) in t.times.iter().zip(&t.positions) {
            let (xi, _) = harmonic_orbit(b.omega, inp.x0, inp.v0, time);
            let c = [p0[0] + xi[0] - inp.x0[0], p0[1] + xi[1] - inp.x0[1]];
            max_rigidity = max_rigidity.max(((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt());
            classical.push(ClassicalRow { traj_id: id, t: time, x: c[0], y: c[1] });
        }
    }
    let center_err = orbit
        .iter()
        .map(|o| ((o.center_x - o.xi_x).powi(2) + (o.center_y - o.xi_y).powi(2)).sqrt())
        .fold(0.0, f64::max);
    let width_err = orbit
        .iter()
        .map(|o| (o.width_x - inp.sigma).abs().max(if dims == 2 { (o.width_y - inp.sigma).abs() } else { 0.0 }))
        .fold(0.0, f64::max);
    let iqr_err = orbit.iter().map(|o| (o.interquartile_x - iqr_exact).abs()).fold(0.0, f64::max) / iqr_exact;
    let scale = radius.max(inp.sigma);
    let summary = Summary {
        sigma: inp.sigma,
        interquartile_exact: iqr_exact,
        orbit_radius: radius,
        duration: psi.time(),
        max_center_error: center_err,
        max_center_error_rel: center_err / scale,
        max_width_error: width_err,
        max_width_error_rel: width_err / inp.sigma,
        max_interquartile_error_rel: iqr_err,
        max_rigidity,
        max_rigidity_rel: max_rigidity / inp.sigma,
    };
    let mut out = Outcome::default();
    out.table.push(("sigma".into(), format!("{:.6}", inp.sigma)));
    out.table.push(("max center error / radius".into(), format!("{:.3e}", summary.max_center_error_rel)));
    out.table.push(("max width error / sigma".into(), format!("{:.3e}", summary.max_width_error_rel)));
    out.table.push(("max rigidity / sigma".into(), format!("{:.3e}", summary.max_rigidity_rel)));
    out.artifacts.csv("orbit.csv", orbit);
    out.artifacts.push("trajectories.csv", io::trajectories(&ens));
    out.artifacts.csv("classical.csv", classical);
    out.artifacts.push("fields/psi_final.csv", io::field_snapshot(&psi));
    out.artifacts.json("summary.json", &summary);
    Ok(out)
}
