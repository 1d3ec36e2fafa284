use std::f64::consts::PI;

use pilotwave_core::spin_dynamics::{stern_gerlach_run, z_axis, SternGerlachDevice, SternGerlachSetup};
use serde::Serialize;

use super::Outcome;
use crate::config::SternGerlachBlock;
use crate::error::{config_error, failed, CliError};
use crate::io;
const BLOCK: &str = "stern_gerlach";

pub fn setup(b: &SternGerlachBlock) -> Result<SternGerlachSetup, CliError> {
    let grid = b.grid.build(BLOCK)?;
    if !(0.0..=PI).contains(&b.theta0.0) {
        return Err(CliError::invalid(format!("{BLOCK}.theta0"), "must lie in [0, pi]"));
    }
    if b.n_atoms == 0 {
        return Err(CliError::invalid(format!("{BLOCK}.n_atoms"), "must be at least 1"));
    }
    for (name, v) in [("hbar", b.hbar), ("mass", b.mass)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::invalid(format!("{BLOCK}.{name}"), "must be positive"));
        }
    }
    if b.record_every == 0 {
        return Err(CliError::invalid(format!("{BLOCK}.record_every"), "must be at least 1"));
    }
    let setup = SternGerlachSetup {
        grid,
        sigma0: b.sigma0,
        hbar: b.hbar,
        mass: b.mass,
        magnet: b.magnet,
        dt: b.dt,
        record_every: b.record_every,
        bins: b.bins,
    };
    SternGerlachDevice::new(setup.clone()).map_err(|e| config_error(BLOCK, e))?;
    Ok(setup)
}

pub fn check(b: &SternGerlachBlock) -> Result<Vec<String>, CliError> {
    let s = setup(b)?;
    let mut warnings = Vec::new();
    // The magnet imparts momentum F T on each spot.
    let v = s.magnet.force().abs() * s.magnet.magnet_time() / s.mass;
    let lambda = 2.0 * PI * s.hbar / (s.mass * v);
    let h = s.grid.axis(z_axis(&s.grid)).spacing();
    if lambda < 8.0 * h {
        warnings.push(format!("de Broglie wavelength {lambda:.4} of the deflected spots spans {:.1} z cells", lambda / h));
    }
    let spots = 2.0 * s.magnet.impulse_offset(s.mass);
    let zmax = s.grid.axis(z_axis(&s.grid)).max;
    if spots / 2.0 > 0.8 * zmax {
        warnings.push(format!("spots at +-{:.3} come close to the grid edge {zmax}", spots / 2.0));
    }
    Ok(warnings)
}

#[derive(Serialize)]
struct ImpactRow {
    atom_id: usize,
    z0: f64,
    z_impact: f64,
    sign: i8,
}

#[derive(Serialize)]
struct OrientationRow {
    traj_id: usize,
    t: f64,
    z: f64,
    theta: f64,
}

#[derive(Serialize)]
struct TrajRow {
    traj_id: usize,
    t: f64,
    x: f64,
    z: f64,
    flag: &'static str,
}

#[derive(Serialize)]
struct DensityRow {
    t: f64,
    z: f64,
    density: f64,
}

#[derive(Serialize)]
struct Summary {
    theta0: f64,
    n_atoms: usize,
    fraction_plus: f64,
    born_plus: f64,
    binomial_sigma: f64,
    z_score: f64,
    separation_sigma: f64,
    /// Outcome sign changes along the atoms sorted by initial z.
    sign_changes: usize,
    all_equivariant: bool,
    equivariance_snapshots: usize,
}

pub fn run(b: &SternGerlachBlock) -> Result<Outcome, CliError> {
    let s = setup(b)?;
    let r = stern_gerlach_run(&s, b.theta0.0, b.phi0.0, b.n_atoms, b.seed).map_err(failed("stern-gerlach"))?;
    let mut order: Vec<usize> = (0..r.initial_z.len()).collect();
    order.sort_by(|&i, &j| r.initial_z[i].total_cmp(&r.initial_z[j]));
    let sign_changes = order.windows(2).filter(|w| r.impacts[w[0]].sign != r.impacts[w[1]].sign).count();
    let sigma = (r.born_plus * (1.0 - r.born_plus) / b.n_atoms as f64).sqrt();
    let summary = Summary {
        theta0: b.theta0.0,
        n_atoms: b.n_atoms,
        fraction_plus: r.fraction_plus,
        born_plus: r.born_plus,
        binomial_sigma: sigma,
        z_score: if sigma > 0.0 { (r.fraction_plus - r.born_plus) / sigma } else { 0.0 },
        separation_sigma: r.separation_sigma,
        sign_changes,
        all_equivariant: r.equivariance.iter().all(|e| e.passed),
        equivariance_snapshots: r.equivariance.len(),
    };
    let mut out = Outcome::default();
    out.table.push(("fraction +1".into(), format!("{:.4} (Born {:.4}, sigma {:.4})", r.fraction_plus, r.born_plus, sigma)));
    out.table.push(("spot separation".into(), format!("{:.2} sigma", r.separation_sigma)));
    out.table.push(("sign changes in z0".into(), sign_changes.to_string()));
    out.table.push((
        "equivariance".into(),
        format!("{}/{} snapshots pass", r.equivariance.iter().filter(|e| e.passed).count(), r.equivariance.len()),
    ));
    let ax = z_axis(&s.grid);
    let zs = s.grid.axis(ax).coords();
    out.artifacts.csv("impacts.csv", r.impacts.iter().map(|i| ImpactRow { atom_id: i.atom_id, z0: r.initial_z[i.atom_id], z_impact: i.z, sign: i.sign }));
    out.artifacts.csv(
        "orientation.csv",
        r.orientation.iter().map(|o| OrientationRow { traj_id: o.traj_id, t: o.t, z: o.z, theta: o.theta }),
    );
    out.artifacts.csv(
        "density.csv",
        r.density_profiles.iter().flat_map(|(t, rho)| zs.iter().zip(rho).map(move |(&z, &d)| DensityRow { t: *t, z, density: d })),
    );
    out.artifacts.csv(
        "trajectories.csv",
        r.trajectories.trajectories.iter().enumerate().flat_map(|(id, tr)| {
            tr.times.iter().zip(&tr.positions).map(move |(&t, p)| TrajRow {
                traj_id: id,
                t,
                x: if ax == 1 { p[0] } else { 0.0 },
                z: p[ax],
                flag: tr.flag.as_str(),
            })
        }),
    );
    out.artifacts.push("equivariance.csv", io::equivariance(&r.equivariance));
    out.artifacts.json("summary.json", &summary);
    Ok(out)
}
