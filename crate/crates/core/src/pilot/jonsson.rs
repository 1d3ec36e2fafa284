//! Double-slit electron interference in the Jonsson geometry.
//!
//! An incident Gaussian packet moving along +x is cut by two slits at the
//! lab plane x = 0 and then flies freely to a screen at x = D. The field is
//! stored in the frame of the incident packet, so the longitudinal carrier
//! `exp(i m v0 x / hbar)` never has to be resolved. The slit transmission is
//! a product of tanh edges, applied once at t = 0.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use num_complex::Complex64;

use super::{
    evolve_guided, field_equivariance, quantile_positions, sample_initial_positions, Ensemble, EquivarianceStat, Impact,
    Sampling, Tracker,
};
use crate::classical_hj::PotentialSpec;
use crate::error::{invalid, require_positive, Error, Result};
use crate::grid::{Axis, Boundary, Grid, Position};
use crate::stats;
use crate::wavefields::{gaussian_density, ComplexField, MovingFrame, CLIP_TOLERANCE};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SlitGrid {
    pub nx: usize,
    pub ny: usize,
    /// Half extent of the longitudinal (comoving) axis.
    pub half_x: f64,
    pub half_y: f64,
    pub absorbing_width: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct JonssonConfig {
    pub hbar: f64,
    pub mass: f64,
    /// Longitudinal speed of the incident packet.
    pub velocity: f64,
    pub slit_width: f64,
    /// Center-to-center distance of the two slits.
    pub slit_separation: f64,
    /// Length scale of the tanh slit edges.
    pub edge_width: f64,
    /// Longitudinal width of the incident packet.
    pub source_sigma_x: f64,
    /// Transverse width of the incident packet at the slits.
    pub source_sigma_y: f64,
    pub screen_distance: f64,
    pub grid: SlitGrid,
    pub dt: f64,
    /// Total simulated time; must let the whole packet reach the screen.
    pub duration: f64,
    /// Steps between stored snapshots.
    pub record_every: usize,
    pub n_particles: usize,
    pub bundle_size: usize,
    pub bins: usize,
    pub seed: u64,
    /// Keep the stored snapshots in the result.
    pub keep_fields: bool,
}

impl Default for SlitGrid {
    fn default() -> Self {
        Self { nx: 16, ny: 4096, half_x: 48.0, half_y: 64.0, absorbing_width: 8.0 }
    }
}

impl Default for JonssonConfig {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            velocity: 10.0,
            slit_width: 4.0,
            slit_separation: 16.0,
            edge_width: 0.4,
            source_sigma_x: 8.0,
            source_sigma_y: 16.0,
            screen_distance: 400.0,
            grid: SlitGrid::default(),
            dt: 0.1,
            duration: 44.0,
            record_every: 40,
            n_particles: 10_000,
            bundle_size: 100,
            bins: 100,
            seed: 1961,
            keep_fields: true,
        }
    }
}

impl JonssonConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("hbar", self.hbar),
            ("mass", self.mass),
            ("velocity", self.velocity),
            ("slit_width", self.slit_width),
            ("slit_separation", self.slit_separation),
            ("edge_width", self.edge_width),
            ("source_sigma_x", self.source_sigma_x),
            ("source_sigma_y", self.source_sigma_y),
            ("screen_distance", self.screen_distance),
            ("dt", self.dt),
            ("duration", self.duration),
        ] {
            require_positive(name, v)?;
        }
        if self.slit_separation <= self.slit_width {
            return Err(invalid("slit_separation", "slits overlap; separation must exceed the width"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be at least 1"));
        }
        if self.duration * self.velocity < self.screen_distance {
            return Err(invalid("duration", "the packet center never reaches the screen"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = &self.grid;
        Grid::plane(Axis::centered(g.half_x, g.nx)?, Axis::centered(g.half_y, g.ny)?, Boundary::Absorbing { width: g.absorbing_width })
    }

    /// Slit transmission at transverse coordinate `y`.
    pub fn transmission(&self, y: f64) -> f64 {
        let (a, w) = (0.5 * self.slit_width, self.edge_width);
        let one = |c: f64| 0.5 * (((y - c + a) / w).tanh() - ((y - c - a) / w).tanh());
        let c = 0.5 * self.slit_separation;
        one(c) + one(-c)
    }

    /// Far-field fringe spacing `lambda D / d` with `lambda = 2 pi hbar / m v`.
    pub fn predicted_fringe_spacing(&self) -> f64 {
        2.0 * core::f64::consts::PI * self.hbar / (self.mass * self.velocity) * self.screen_distance / self.slit_separation
    }

    pub fn screen_time(&self) -> f64 {
        self.screen_distance / self.velocity
    }

    /// Field just behind the slits, in the incident packet's frame.
    pub fn initial_field(&self) -> Result<ComplexField> {
        let grid = self.grid()?;
        let tail = 2.0 * stats::normal_cdf(-self.grid.half_x / self.source_sigma_x);
        if tail > CLIP_TOLERANCE {
            return Err(Error::PacketClipped { tail_mass: tail });
        }
        let amps = grid
            .nodes()
            .map(|p| {
                let a = gaussian_density(1, self.source_sigma_x, [0.0, 0.0], [p[0], 0.0]).sqrt()
                    * gaussian_density(1, self.source_sigma_y, [0.0, 0.0], [p[1], 0.0]).sqrt()
                    * self.transmission(p[1]);
                Complex64::new(a, 0.0)
            })
            .collect();
        let frame = MovingFrame::launched([0.0, 0.0], [self.velocity, 0.0], self.mass);
        let mut psi = ComplexField::new(grid, amps, 0.0, self.hbar, self.mass)?.with_frame(frame);
        psi.normalize();
        Ok(psi)
    }

    /// Bundle start points: the longitudinal median and evenly spaced
    /// transverse quantiles.
    pub fn bundle_levels(&self) -> Vec<Position> {
        (0..self.bundle_size).map(|i| [0.5, (i as f64 + 0.5) / self.bundle_size as f64]).collect()
    }
}

/// `int |Psi|^2 dx` on the transverse nodes.
pub fn transverse_marginal(psi: &ComplexField) -> (Vec<f64>, Vec<f64>) {
    let grid = psi.grid();
    let [n0, n1] = grid.shape();
    let rho = psi.density_values();
    let hx = grid.spacing()[0];
    let ys: Vec<f64> = (0..n1).map(|i| grid.axis(1).coord(i) + psi.origin()[1]).collect();
    let m = (0..n1).map(|i1| (0..n0).map(|i0| rho[grid.index(i0, i1)]).sum::<f64>() * hx).collect();
    (ys, m)
}

/// Mean spacing between the bright fringes (maxima above 20% of the peak)
/// of a transverse profile, with parabolic peak refinement.
pub fn fringe_spacing(ys: &[f64], profile: &[f64]) -> Option<f64> {
    let peak = profile.iter().cloned().fold(0.0, f64::max);
    let mut maxima = Vec::new();
    for i in 1..profile.len() - 1 {
        let (a, b, c) = (profile[i - 1], profile[i], profile[i + 1]);
        if b > a && b >= c && b > 0.2 * peak {
            let denom = a - 2.0 * b + c;
            let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            maxima.push(ys[i] + shift * (ys[i + 1] - ys[i]));
        }
    }
    if maxima.len() < 3 {
        return None;
    }
    let gaps: Vec<f64> = maxima.windows(2).map(|w| w[1] - w[0]).collect();
    Some(stats::median(&gaps))
}

#[derive(Clone, Debug)]
pub struct MarginalRecord {
    pub time: f64,
    pub y: Vec<f64>,
    pub density: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct JonssonRun {
    pub snapshots: Vec<ComplexField>,
    pub marginals: Vec<MarginalRecord>,
    pub ensemble: Ensemble,
    pub bundle: Ensemble,
    pub impacts: Vec<Impact>,
    pub bundle_impacts: Vec<Impact>,
    pub equivariance: Vec<EquivarianceStat>,
    pub fringe_spacing: Option<f64>,
    pub predicted_spacing: f64,
}

/// Full double-slit pipeline: propagation, a random ensemble of
/// `n_particles`, a quantile bundle of `bundle_size`, screen impacts and
/// equivariance at every stored snapshot.
pub fn jonsson_experiment(cfg: &JonssonConfig) -> Result<JonssonRun> {
    cfg.validate()?;
    let psi0 = cfg.initial_field()?;
    let potential = PotentialSpec::free(cfg.mass)?;
    let origin = psi0.origin();
    let mut trackers = Vec::new();
    if cfg.n_particles > 0 {
        let start = sample_initial_positions(&psi0, cfg.n_particles, cfg.seed)?;
        trackers.push(Tracker::scalar(&start, origin, 0.0, cfg.record_every).with_screen(0, cfg.screen_distance));
    }
    let bundle_start = quantile_positions(&psi0, &cfg.bundle_levels());
    trackers.push(Tracker::scalar(&bundle_start, origin, 0.0, 1).with_screen(0, cfg.screen_distance));

    let screen_step = (cfg.screen_time() / cfg.dt).round() as usize;
    let mut snapshots = Vec::new();
    let mut marginals = Vec::new();
    let mut equivariance = Vec::new();
    let mut screen_profile = None;
    let n_particles = cfg.n_particles;
    evolve_guided(&psi0, &potential, cfg.dt, cfg.steps(), 1, &mut trackers, |step, psi, trs| {
        if step == screen_step {
            screen_profile = Some(transverse_marginal(psi));
        }
        if step % cfg.record_every != 0 {
            return Ok(());
        }
        let (y, density) = transverse_marginal(psi);
        marginals.push(MarginalRecord { time: psi.time(), y, density });
        if n_particles > 0 {
            equivariance.push(field_equivariance(&trs[0].active_positions(psi.origin()), psi, cfg.bins)?);
        }
        if cfg.keep_fields {
            snapshots.push(psi.clone());
        }
        Ok(())
    })?;
    let fringe = screen_profile.and_then(|(y, m)| fringe_spacing(&y, &m));
    let bundle_tr = trackers.pop().unwrap();
    let bundle_impacts = bundle_tr.impacts();
    let bundle = bundle_tr.finish(Sampling::Quantile);
    let (ensemble, impacts) = match trackers.pop() {
        Some(t) => {
            let i = t.impacts();
            (t.finish(Sampling::Equilibrium { seed: cfg.seed }), i)
        }
        None => (Ensemble { trajectories: Vec::new(), sampling: Sampling::Equilibrium { seed: cfg.seed } }, Vec::new()),
    };
    Ok(JonssonRun {
        snapshots,
        marginals,
        ensemble,
        bundle,
        impacts,
        bundle_impacts,
        equivariance,
        fringe_spacing: fringe,
        predicted_spacing: cfg.predicted_fringe_spacing(),
    })
}
