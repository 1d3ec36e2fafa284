use pilotwave_core::classical_hj::{Potential, PotentialSpec};
use pilotwave_core::fft::FftNd;
use pilotwave_core::pilot::{
    evolve_guided, field_equivariance, quantile_positions, sample_initial_positions, EquivarianceStat, Sampling, Tracker,
};
use pilotwave_core::wavefields::{
    analytic_gaussian_linear, init_packet, madelung_decompose, ComplexField, GaussianPacketSpec, Propagator,
};
use pilotwave_core::Position;
use serde::Serialize;

use super::Outcome;
use crate::config::GaussianLinearBlock;
use crate::error::{config_error, failed, CliError};
use crate::io;

const BLOCK: &str = "gaussian_linear";
const NAME: &str = "gaussian-linear";

struct Inputs {
    psi0: ComplexField,
    spec: GaussianPacketSpec,
    potential: PotentialSpec,
    force: Position,
}

fn build(b: &GaussianLinearBlock) -> Result<Inputs, CliError> {
    for (name, v) in [("hbar", b.hbar), ("mass", b.mass)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::invalid(format!("{BLOCK}.{name}"), "must be positive"));
        }
    }
    let grid = b.grid.build(BLOCK)?;
    let potential = b.potential.build(BLOCK, b.mass, grid.dims())?;
    let force = match potential.kind() {
        Potential::Free => [0.0, 0.0],
        Potential::Linear { force } => *force,
        _ => return Err(CliError::invalid(format!("{BLOCK}.potential.kind"), "must be free or linear")),
    };
    let spec = b.packet.build(BLOCK, grid.dims())?;
    b.integrator.validate(BLOCK)?;
    if b.sampling.bins == 0 {
        return Err(CliError::invalid(format!("{BLOCK}.sampling.bins"), "must be at least 1"));
    }
    let psi0 = init_packet(&spec, &grid, b.hbar, b.mass).map_err(|e| config_error(BLOCK, e))?;
    Propagator::new(&psi0, &potential, b.integrator.dt).map_err(|e| config_error(&format!("{BLOCK}.integrator"), e))?;
    Ok(Inputs { psi0, spec, potential, force })
}

/// Largest classical speed over the run and the wavelength it implies.
pub fn de_broglie(b: &GaussianLinearBlock, spec: &GaussianPacketSpec, force: Position) -> (f64, f64) {
    let t = b.integrator.dt * b.integrator.steps as f64;
    let speed = |v: Position| (v[0] * v[0] + v[1] * v[1]).sqrt();
    let vmax = speed(spec.velocity) + speed(force) * t / b.mass;
    (vmax, 2.0 * std::f64::consts::PI * b.hbar / (b.mass * vmax))
}

pub fn check(b: &GaussianLinearBlock) -> Result<Vec<String>, CliError> {
    let inp = build(b)?;
    let (vmax, lambda) = de_broglie(b, &inp.spec, inp.force);
    let h = inp.psi0.grid().min_spacing();
    let mut warnings = Vec::new();
    if vmax > 0.0 && lambda < 8.0 * h {
        warnings.push(format!(
            "de Broglie wavelength 2 pi hbar / m v = {lambda:.4} at v = {vmax:.4} spans {:.1} cells; at least 8 are recommended",
            lambda / h
        ));
    }
    Ok(warnings)
}

#[derive(Serialize, Clone)]
pub struct SnapshotSummary {
    pub t: f64,
    /// `max |rho - rho_exact| / max rho_exact`.
    pub rho_rel_linf: f64,
    /// `max |S - S_exact - C|` on `rho > 1e-3 max rho`, `C` the median offset.
    pub action_linf: f64,
    pub action_max: f64,
    pub center: f64,
    pub width: f64,
    pub equivariance_p: f64,
    pub equivariance_passed: bool,
}

#[derive(Serialize)]
struct Summary {
    snapshots: Vec<SnapshotSummary>,
    max_rho_rel_linf: f64,
    max_action_rel: f64,
    all_equivariant: bool,
    n_particles: usize,
}

#[derive(Serialize)]
struct VelocityRow {
    t: f64,
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
}

#[derive(Serialize)]
struct FinalRow {
    traj_id: usize,
    x: f64,
    y: f64,
    flag: &'static str,
}

fn closed_form_errors(psi: &ComplexField, spec: &GaussianPacketSpec, force: Position) -> (f64, f64, f64) {
    let mad = madelung_decompose(psi);
    let t = psi.time();
    let exact: Vec<(f64, f64)> =
        mad.rho.grid().nodes().map(|x| analytic_gaussian_linear(spec, force, psi.hbar(), psi.mass(), x, t)).collect();
    let rmax = exact.iter().map(|e| e.0).fold(0.0, f64::max);
    let rho_err = mad.rho.values().iter().zip(&exact).map(|(r, e)| (r - e.0).abs()).fold(0.0, f64::max) / rmax;
    let mut offsets = Vec::new();
    let mut smax = 0.0f64;
    for (i, e) in exact.iter().enumerate() {
        if e.0 > 1e-3 * rmax {
            offsets.push(mad.action.values()[i] - e.1);
            smax = smax.max(e.1.abs());
        }
    }
    offsets.sort_by(f64::total_cmp);
    let c = offsets[offsets.len() / 2];
    (rho_err, offsets.iter().map(|o| (o - c).abs()).fold(0.0, f64::max), smax)
}

pub fn run(b: &GaussianLinearBlock) -> Result<Outcome, CliError> {
    let inp = build(b)?;
    let fail = failed(NAME);
    let psi0 = &inp.psi0;
    let s = &b.sampling;
    let start = sample_initial_positions(psi0, s.n, s.seed).map_err(&fail)?;
    let levels: Vec<Position> = (0..s.bundle).map(|i| [(i as f64 + 0.5) / s.bundle as f64, 0.5]).collect();
    let bundle_start = quantile_positions(psi0, &levels);
    let mut trackers = [
        Tracker::scalar(&start, psi0.origin(), 0.0, b.integrator.steps),
        Tracker::scalar(&bundle_start, psi0.origin(), 0.0, 1),
    ];
    let fft = FftNd::new(psi0.grid().shape());
    let mut out = Outcome::default();
    let mut snapshots = Vec::new();
    let mut stats: Vec<EquivarianceStat> = Vec::new();
    let mut velocity = Vec::new();
    let mut k = 0;
    evolve_guided(psi0, &inp.potential, b.integrator.dt, b.integrator.steps, b.integrator.snapshot_every, &mut trackers, |_, psi, trs| {
        let stat = field_equivariance(&trs[0].active_positions(psi.origin()), psi, s.bins)?;
        let (rho_err, s_err, smax) = closed_form_errors(psi, &inp.spec, inp.force);
        let dens = psi.density();
        let (rho, j) = psi.current(&fft);
        let rmax = rho.iter().cloned().fold(0.0, f64::max);
        for (idx, (r, j)) in rho.iter().zip(&j).enumerate() {
            if *r > 1e-6 * rmax {
                let x = psi.grid().node(idx);
                velocity.push(VelocityRow { t: psi.time(), x: x[0], y: x[1], vx: j[0] / r, vy: j[1] / r });
            }
        }
        snapshots.push(SnapshotSummary {
            t: psi.time(),
            rho_rel_linf: rho_err,
            action_linf: s_err,
            action_max: smax,
            center: dens.mean(0),
            width: dens.variance(0).sqrt(),
            equivariance_p: stat.p_value,
            equivariance_passed: stat.passed,
        });
        stats.push(stat);
        out.artifacts.push(&format!("fields/psi_{k:04}.csv"), io::field_snapshot(psi));
        k += 1;
        Ok(())
    })
    .map_err(&fail)?;
    let [ens, bundle] = trackers;
    let ens = ens.finish(Sampling::Equilibrium { seed: s.seed });
    let bundle = bundle.finish(Sampling::Quantile);

    let summary = Summary {
        max_rho_rel_linf: snapshots.iter().map(|s| s.rho_rel_linf).fold(0.0, f64::max),
        max_action_rel: snapshots.iter().map(|s| s.action_linf / s.action_max.max(f64::MIN_POSITIVE)).fold(0.0, f64::max),
        all_equivariant: stats.iter().all(|s| s.passed),
        n_particles: s.n,
        snapshots,
    };
    out.table.push(("max rho rel error".into(), format!("{:.3e}", summary.max_rho_rel_linf)));
    out.table.push(("max S rel error".into(), format!("{:.3e}", summary.max_action_rel)));
    out.table.push(("equivariance".into(), format!("{}/{} snapshots pass", stats.iter().filter(|s| s.passed).count(), stats.len())));
    out.artifacts.push("trajectories.csv", io::trajectories(&bundle));
    out.artifacts.csv(
        "final_positions.csv",
        ens.trajectories.iter().enumerate().map(|(id, tr)| {
            let p = tr.positions.last().copied().unwrap_or([f64::NAN; 2]);
            FinalRow { traj_id: id, x: p[0], y: p[1], flag: tr.flag.as_str() }
        }),
    );
    out.artifacts.csv("velocity.csv", velocity);
    out.artifacts.push("equivariance.csv", io::equivariance(&stats));
    out.artifacts.json("summary.json", &summary);
    Ok(out)
}
