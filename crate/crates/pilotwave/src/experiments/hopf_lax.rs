use pilotwave_core::classical_hj::{
    classical_transport, euler_lagrange_action, gaussian_linear_density, hopf_lax_field, hopf_lax_field_monotone,
    hopf_lax_linear, linear_phase_action, velocity_field, ActionField, ClassicalEnsembleState, DensityField,
    PotentialSpec,
};
use pilotwave_core::{Grid, Position};
use serde::Serialize;

use super::Outcome;
use crate::config::{HopfLaxBlock, HopfLaxMethod, InitialAction};
use crate::error::{config_error, failed, CliError};

const BLOCK: &str = "hopf_lax";
const NAME: &str = "hopf-lax";

struct Inputs {
    grid: Grid,
    potential: PotentialSpec,
    s0: ActionField,
    initial: Initial,
}

#[derive(Clone, Copy)]
enum Initial {
    Linear(Position),
    DeltaMin(Position),
}

fn vec2(v: &[f64], dims: usize, field: &str) -> Result<Position, CliError> {
    if v.len() != dims {
        return Err(CliError::invalid(field, format!("needs {dims} components")));
    }
    Ok([v[0], if dims == 2 { v[1] } else { 0.0 }])
}

fn build(b: &HopfLaxBlock) -> Result<Inputs, CliError> {
    if !(b.time.is_finite() && b.time > 0.0) {
        return Err(CliError::invalid("hopf_lax.time", "must be positive"));
    }
    let grid = b.grid.build(BLOCK)?;
    let dims = grid.dims();
    let potential = b.potential.build(BLOCK, b.mass, dims)?;
    let (s0, initial) = match &b.initial {
        InitialAction::Linear { velocity } => {
            let v = vec2(velocity, dims, "hopf_lax.initial.velocity")?;
            (ActionField::linear(grid.clone(), b.mass, v), Initial::Linear(v))
        }
        InitialAction::DeltaMin { x0 } => {
            let x0 = vec2(x0, dims, "hopf_lax.initial.x0")?;
            (ActionField::delta_min(grid.clone(), x0), Initial::DeltaMin(x0))
        }
    };
    let s0 = s0.map_err(|e| config_error(BLOCK, e))?;
    match (b.method, initial) {
        (HopfLaxMethod::ClosedForm, Initial::DeltaMin(_)) => {
            return Err(CliError::invalid("hopf_lax.method", "closed_form needs a linear initial action"));
        }
        (HopfLaxMethod::Monotone, _) if dims != 1 => {
            return Err(CliError::invalid("hopf_lax.method", "monotone is one-dimensional"));
        }
        _ => {}
    }
    if let Some(t) = &b.transport {
        if !matches!(initial, Initial::Linear(_)) {
            return Err(CliError::invalid("hopf_lax.transport", "needs a linear initial action"));
        }
        if !(t.sigma0.is_finite() && t.sigma0 > 0.0) {
            return Err(CliError::invalid("hopf_lax.transport.sigma0", "must be positive"));
        }
        if t.steps == 0 {
            return Err(CliError::invalid("hopf_lax.transport.steps", "must be at least 1"));
        }
    }
    Ok(Inputs { grid, potential, s0, initial })
}

/// Whether the minimizer for `x` lies inside the grid, so a bounded
/// search can find it. The flows here are affine in the start point.
fn foot_on_grid(inp: &Inputs, x: Position, t: f64) -> bool {
    let Initial::Linear(v) = inp.initial else {
        return true;
    };
    let (Some((b, _)), Some((e, _))) = (inp.potential.flow([0.0; 2], v, t), inp.potential.flow([1.0; 2], v, t)) else {
        return false;
    };
    (0..inp.grid.dims()).all(|k| {
        let a = e[k] - b[k];
        let axis = inp.grid.axis(k);
        a.abs() > 1e-12 && {
            let y = (x[k] - b[k]) / a;
            y >= axis.min && y <= axis.max
        }
    })
}

pub fn check(b: &HopfLaxBlock) -> Result<Vec<String>, CliError> {
    build(b).map(|_| Vec::new())
}

#[derive(Serialize)]
struct ActionRow {
    x: f64,
    y: f64,
    s: f64,
    s_reference: f64,
}

#[derive(Serialize)]
struct VelocityRow {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
}

#[derive(Serialize)]
struct DensityRow {
    x: f64,
    y: f64,
    rho: f64,
    rho_reference: f64,
}

#[derive(Serialize)]
struct TransportSummary {
    center: [f64; 2],
    center_reference: [f64; 2],
    width: [f64; 2],
    width_reference: f64,
}

#[derive(Serialize)]
struct Summary {
    method: HopfLaxMethod,
    time: f64,
    nodes: usize,
    finite_nodes: usize,
    /// Finite nodes whose characteristic starts on the grid.
    compared_nodes: usize,
    /// Largest `|S - S_reference|` over the compared nodes.
    max_abs_error: f64,
    transport: Option<TransportSummary>,
}

pub fn run(b: &HopfLaxBlock) -> Result<Outcome, CliError> {
    let inp = build(b)?;
    let fail = failed(NAME);
    let s = match b.method {
        HopfLaxMethod::Exhaustive => hopf_lax_field(&inp.s0, &inp.potential, b.time),
        HopfLaxMethod::Monotone => hopf_lax_field_monotone(&inp.s0, &inp.potential, b.time),
        HopfLaxMethod::ClosedForm => hopf_lax_linear(&inp.s0, &inp.potential, b.time),
    }
    .map_err(&fail)?;
    let reference = inp
        .grid
        .nodes()
        .map(|x| match inp.initial {
            Initial::Linear(v) => linear_phase_action(&inp.potential, v, x, b.time),
            Initial::DeltaMin(x0) => euler_lagrange_action(&inp.potential, x, b.time, x0),
        })
        .collect::<Result<Vec<f64>, _>>()
        .map_err(&fail)?;
    let mut err = 0.0f64;
    let mut finite = 0;
    let mut compared = 0;
    let rows: Vec<ActionRow> = inp
        .grid
        .nodes()
        .zip(s.values().iter().zip(&reference))
        .map(|(x, (&v, &r))| {
            if v.is_finite() && r.is_finite() {
                finite += 1;
                if foot_on_grid(&inp, x, b.time) {
                    err = err.max((v - r).abs());
                    compared += 1;
                }
            }
            ActionRow { x: x[0], y: x[1], s: v, s_reference: r }
        })
        .collect();
    let vel = velocity_field(&s, b.mass).map_err(&fail)?;
    let vrows: Vec<VelocityRow> = inp
        .grid
        .nodes()
        .zip(vel.values.iter().zip(&vel.valid))
        .filter(|(_, (_, ok))| **ok)
        .map(|(x, (v, _))| VelocityRow { x: x[0], y: x[1], vx: v[0], vy: v[1] })
        .collect();

    let mut out = Outcome::default();
    let mut transport = None;
    if let (Some(t), Initial::Linear(v)) = (&b.transport, inp.initial) {
        let dims = inp.grid.dims();
        let center = [t.center.first().copied().unwrap_or(0.0), t.center.get(1).copied().unwrap_or(0.0)];
        let rho0 = DensityField::from_fn(inp.grid.clone(), 0.0, |x| {
            gaussian_linear_density(dims, t.sigma0, center, [0.0; 2], [0.0; 2], b.mass, x, 0.0)
        })
        .map_err(&fail)?;
        let st = ClassicalEnsembleState::new(rho0, inp.s0.clone(), inp.potential.clone()).map_err(&fail)?;
        let end = classical_transport(&st, b.time, t.steps).map_err(&fail)?;
        let force = inp.potential.force([0.0, 0.0]);
        let reference = |x: Position| gaussian_linear_density(dims, t.sigma0, center, v, force, b.mass, x, b.time);
        let drows: Vec<DensityRow> = inp
            .grid
            .nodes()
            .zip(end.rho.values())
            .map(|(x, &r)| DensityRow { x: x[0], y: x[1], rho: r, rho_reference: reference(x) })
            .collect();
        out.artifacts.csv("density.csv", drows);
        let c = |k: usize| center[k] + v[k] * b.time + 0.5 * force[k] * b.time * b.time / b.mass;
        let width = |k: usize| if k < dims { end.rho.variance(k).sqrt() } else { 0.0 };
        transport = Some(TransportSummary {
            center: [end.rho.mean(0), if dims == 2 { end.rho.mean(1) } else { 0.0 }],
            center_reference: [c(0), if dims == 2 { c(1) } else { 0.0 }],
            width: [width(0), width(1)],
            width_reference: t.sigma0,
        });
    }
    let summary = Summary { method: b.method, time: b.time, nodes: inp.grid.len(), finite_nodes: finite, compared_nodes: compared, max_abs_error: err, transport };
    out.table.push(("max |S - S_ref|".into(), format!("{err:.3e}")));
    out.table.push(("finite nodes".into(), format!("{finite}/{}", inp.grid.len())));
    out.table.push(("compared nodes".into(), compared.to_string()));
    if let Some(t) = &summary.transport {
        out.table.push(("transport center".into(), format!("{:.6} (ref {:.6})", t.center[0], t.center_reference[0])));
        out.table.push(("transport width".into(), format!("{:.6} (ref {:.6})", t.width[0], t.width_reference)));
    }
    out.artifacts.csv("action.csv", rows);
    out.artifacts.csv("velocity.csv", vrows);
    out.artifacts.json("summary.json", &summary);
    Ok(out)
}
