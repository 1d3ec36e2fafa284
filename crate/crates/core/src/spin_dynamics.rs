//! Pauli spinors in a Stern-Gerlach magnet.
//!
//! The magnet couples only `sigma_z` to a field growing linearly along z,
//! so the components see `V = -/+ mu B' z`. The last grid axis is z: a plane
//! grid is (x, z) and a line grid is z alone.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, require_positive, Error, Result};
use crate::fft::FftNd;
use crate::grid::{Grid, Position};
use crate::pilot::{
    density_equivariance, integrate_snapshots, quantile_positions, sample_density, Ensemble, EquivarianceStat,
    GuidanceSnapshot, Sampling, Tracker, TrajectoryFlag,
};
use crate::wavefields::{gaussian_density, gaussian_tail_outside, half_potential_phases, ComplexField, KineticStep, CLIP_TOLERANCE, NODE_FLOOR};

pub fn z_axis(grid: &Grid) -> usize {
    grid.dims() - 1
}

/// `(cos^2(theta/2), sin^2(theta/2))`, exact at the poles.
pub fn half_angle_weights(theta: f64) -> (f64, f64) {
    let c = theta.cos();
    (0.5 * (1.0 + c), 0.5 * (1.0 - c))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    grid: Grid,
    plus: Vec<Complex64>,
    minus: Vec<Complex64>,
    time: f64,
    hbar: f64,
    mass: f64,
}

impl SpinorField {
    pub fn new(grid: Grid, plus: Vec<Complex64>, minus: Vec<Complex64>, time: f64, hbar: f64, mass: f64) -> Result<Self> {
        require_positive("hbar", hbar)?;
        require_positive("mass", mass)?;
        if plus.len() != grid.len() || minus.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, plus, minus, time, hbar, mass })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn plus(&self) -> &[Complex64] {
        &self.plus
    }

    pub fn minus(&self) -> &[Complex64] {
        &self.minus
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `(int |Psi+|^2, int |Psi-|^2)`.
    pub fn component_norms(&self) -> (f64, f64) {
        let p: Vec<f64> = self.plus.iter().map(|z| z.norm_sqr()).collect();
        let m: Vec<f64> = self.minus.iter().map(|z| z.norm_sqr()).collect();
        (self.grid.integrate(&p), self.grid.integrate(&m))
    }

    pub fn norm_sqr(&self) -> f64 {
        let (p, m) = self.component_norms();
        p + m
    }

    pub fn density_values(&self) -> Vec<f64> {
        self.plus.iter().zip(&self.minus).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect()
    }

    /// Component densities and currents for spinor guidance.
    pub fn guidance(&self, fft: &FftNd) -> GuidanceSnapshot {
        let comp = |amps: &[Complex64]| {
            ComplexField::new(self.grid.clone(), amps.to_vec(), self.time, self.hbar, self.mass).unwrap().current(fft)
        };
        GuidanceSnapshot::from_components(self.grid.clone(), self.time, [0.0, 0.0], vec![comp(&self.plus), comp(&self.minus)])
    }

    /// Mean and standard deviation of the z coordinate of one component.
    pub fn component_spread(&self, plus: bool) -> (f64, f64) {
        let amps = if plus { &self.plus } else { &self.minus };
        spread(&self.grid, &amps.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>())
    }
}

fn spread(grid: &Grid, rho: &[f64]) -> (f64, f64) {
    let w = grid.quadrature_weights();
    let ax = z_axis(grid);
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for ((p, r), w) in grid.nodes().zip(rho).zip(&w) {
        let z = p[ax];
        m0 += r * w;
        m1 += r * w * z;
        m2 += r * w * z * z;
    }
    let mean = m1 / m0;
    (mean, (m2 / m0 - mean * mean).max(0.0).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpinOrientation {
    pub theta: f64,
    pub phi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MagnetConfig {
    /// Field gradient `B'`.
    pub gradient: f64,
    /// Magnetic moment `mu`.
    pub moment: f64,
    pub length: f64,
    /// Transit speed through the magnet, which sets its duration.
    pub speed: f64,
    pub flight_time: f64,
}

impl Default for MagnetConfig {
    fn default() -> Self {
        Self { gradient: 2.0, moment: 1.0, length: 2.0, speed: 1.0, flight_time: 6.0 }
    }
}

impl MagnetConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("gradient", self.gradient.abs())?;
        require_positive("moment", self.moment.abs())?;
        require_positive("length", self.length)?;
        require_positive("speed", self.speed)?;
        require_positive("flight_time", self.flight_time)
    }

    pub fn magnet_time(&self) -> f64 {
        self.length / self.speed
    }

    /// `mu B'`, the force on the up component.
    pub fn force(&self) -> f64 {
        self.moment * self.gradient
    }

    /// Classical z offset of the up component at the screen; the two spots
    /// are twice this apart.
    pub fn impulse_offset(&self, mass: f64) -> f64 {
        let tm = self.magnet_time();
        self.force() / mass * tm * (0.5 * tm + self.flight_time)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    InsideMagnet,
    FreeFlight,
}

fn tail_check(grid: &Grid, sigma0: f64) -> Result<()> {
    let tail = gaussian_tail_outside(grid, [sigma0; 2], [0.0, 0.0]);
    if tail > CLIP_TOLERANCE {
        return Err(Error::PacketClipped { tail_mass: tail });
    }
    Ok(())
}

/// Real Gaussian envelope `f` centered at the origin, normalized on `grid`.
pub fn envelope(grid: &Grid, sigma0: f64) -> Result<Vec<Complex64>> {
    require_positive("sigma0", sigma0)?;
    tail_check(grid, sigma0)?;
    let mut f: Vec<Complex64> =
        grid.nodes().map(|p| Complex64::new(gaussian_density(grid.dims(), sigma0, [0.0, 0.0], p).sqrt(), 0.0)).collect();
    let n = grid.integrate(&f.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>()).sqrt();
    for z in &mut f {
        *z /= n;
    }
    Ok(f)
}

/// `f(r) (cos(theta0/2) e^{i phi0/2}, sin(theta0/2) e^{-i phi0/2})`.
pub fn init_spinor(theta0: f64, phi0: f64, sigma0: f64, grid: &Grid, hbar: f64, mass: f64) -> Result<SpinorField> {
    if !(0.0..=core::f64::consts::PI).contains(&theta0) {
        return Err(invalid("theta0", "must lie in [0, pi]"));
    }
    let f = envelope(grid, sigma0)?;
    let (c2, s2) = half_angle_weights(theta0);
    let up = Complex64::from_polar(c2.sqrt(), 0.5 * phi0);
    let down = Complex64::from_polar(s2.sqrt(), -0.5 * phi0);
    SpinorField::new(grid.clone(), f.iter().map(|z| z * up).collect(), f.iter().map(|z| z * down).collect(), 0.0, hbar, mass)
}

/// Strang stepper for both components; the kinetic step is shared.
#[derive(Clone, Debug)]
pub struct PauliStepper {
    kinetic: KineticStep,
    half: Option<(Vec<Complex64>, Vec<Complex64>)>,
    dt: f64,
}

impl PauliStepper {
    pub fn new(grid: &Grid, hbar: f64, mass: f64, magnet: &MagnetConfig, stage: Stage, dt: f64) -> Result<Self> {
        require_positive("dt", dt)?;
        let half = match stage {
            Stage::FreeFlight => None,
            Stage::InsideMagnet => {
                let ax = z_axis(grid);
                let f = magnet.force();
                let vp: Vec<f64> = grid.nodes().map(|p| -f * p[ax]).collect();
                let vm: Vec<f64> = vp.iter().map(|v| -v).collect();
                Some((half_potential_phases(&vp, hbar, dt)?, half_potential_phases(&vm, hbar, dt)?))
            }
        };
        Ok(Self { kinetic: KineticStep::new(grid, hbar, mass, dt), half, dt })
    }

    pub fn fft(&self) -> &FftNd {
        self.kinetic.fft()
    }

    /// One step of a single component (`plus` selects the sign).
    pub fn step_component(&self, amps: &mut [Complex64], plus: bool) {
        let phases = self.half.as_ref().map(|(p, m)| if plus { p } else { m });
        if let Some(ph) = phases {
            for (z, p) in amps.iter_mut().zip(ph) {
                *z *= p;
            }
        }
        self.kinetic.apply(amps);
        if let Some(ph) = phases {
            for (z, p) in amps.iter_mut().zip(ph) {
                *z *= p;
            }
        }
        self.kinetic.absorb(amps);
    }

    pub fn step(&self, psi: &mut SpinorField) {
        self.step_component(&mut psi.plus, true);
        self.step_component(&mut psi.minus, false);
        psi.time += self.dt;
    }
}

pub fn pauli_propagate(psi: &SpinorField, magnet: &MagnetConfig, stage: Stage, dt: f64, steps: usize) -> Result<SpinorField> {
    if steps == 0 {
        return Ok(psi.clone());
    }
    magnet.validate()?;
    let st = PauliStepper::new(&psi.grid, psi.hbar, psi.mass, magnet, stage, dt)?;
    let mut out = psi.clone();
    for _ in 0..steps {
        st.step(&mut out);
    }
    Ok(out)
}

/// Local spin direction: `theta = 2 atan2(|Psi-|, |Psi+|)`, `phi` from the
/// relative phase, with bilinearly interpolated component densities.
pub fn spin_orientation(psi: &SpinorField, x: Position) -> Result<SpinOrientation> {
    let s = psi.grid.stencil(x).ok_or(Error::VelocityUndefined)?;
    let (mut rp, mut rm, mut cross) = (0.0, 0.0, Complex64::new(0.0, 0.0));
    for (i, w) in s.iter() {
        rp += w * psi.plus[i].norm_sqr();
        rm += w * psi.minus[i].norm_sqr();
        cross += psi.plus[i] * psi.minus[i].conj() * w;
    }
    let rmax = psi.density_values().iter().cloned().fold(0.0, f64::max);
    if rp + rm < NODE_FLOOR * rmax || rp + rm <= 0.0 {
        return Err(Error::VelocityUndefined);
    }
    Ok(SpinOrientation { theta: 2.0 * rm.sqrt().atan2(rp.sqrt()), phi: cross.arg() })
}

/// Trajectories through a stored spinor history with the total-current
/// velocity law.
pub fn integrate_trajectories_spinor(start: &[Position], history: &[SpinorField]) -> Result<Ensemble> {
    let first = history.first().ok_or(invalid("history", "is empty"))?;
    let fft = FftNd::new(first.grid.shape());
    let snaps: Vec<GuidanceSnapshot> = history.iter().map(|f| f.guidance(&fft)).collect();
    integrate_snapshots(start, &snaps, vec![vec![1.0, 1.0]; start.len()])
}

/// Geometry and numerics of one Stern-Gerlach device.
#[derive(Clone, Debug, PartialEq)]
pub struct SternGerlachSetup {
    pub grid: Grid,
    pub sigma0: f64,
    pub hbar: f64,
    pub mass: f64,
    pub magnet: MagnetConfig,
    /// Guidance step; both stage durations must be multiples of it.
    pub dt: f64,
    /// Steps between recorded trajectory points.
    pub record_every: usize,
    pub bins: usize,
}

impl SternGerlachSetup {
    pub fn validate(&self) -> Result<()> {
        self.magnet.validate()?;
        require_positive("sigma0", self.sigma0)?;
        require_positive("dt", self.dt)?;
        self.stage_steps()?;
        Ok(())
    }

    fn stage_steps(&self) -> Result<(usize, usize)> {
        let count = |name: &'static str, t: f64| -> Result<usize> {
            let n = (t / self.dt).round();
            if n < 1.0 || (n * self.dt - t).abs() > 1e-9 * t {
                return Err(invalid(name, "must be a whole number of guidance steps dt"));
            }
            Ok(n as usize)
        };
        Ok((count("magnet_time", self.magnet.magnet_time())?, count("flight_time", self.magnet.flight_time)?))
    }

    /// Field substeps per guidance step inside the magnet, keeping the
    /// potential phase per substep at or below 0.45 rad.
    pub fn magnet_substeps(&self) -> usize {
        let ax = z_axis(&self.grid);
        let zmax = self.grid.axis(ax).min.abs().max(self.grid.axis(ax).max.abs());
        let phase = self.dt * self.magnet.force().abs() * zmax / self.hbar;
        ((phase / 0.45).ceil() as usize).max(1)
    }

    pub fn screen_time(&self) -> f64 {
        self.magnet.magnet_time() + self.magnet.flight_time
    }
}

fn z_profile(grid: &Grid, rho: &[f64]) -> Vec<f64> {
    if grid.dims() == 1 {
        return rho.to_vec();
    }
    let [n0, n1] = grid.shape();
    let h = grid.spacing()[0];
    (0..n1).map(|j| (0..n0).map(|i| rho[grid.index(i, j)]).sum::<f64>() * h).collect()
}

/// A particle entering the device: spin polar angle and lab start point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinParticle {
    pub theta: f64,
    pub start: Position,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrientationSample {
    pub traj_id: usize,
    pub t: f64,
    pub z: f64,
    pub theta: f64,
}

#[derive(Clone, Debug)]
pub struct DeviceRun {
    /// +1 or -1 from the sign of z at the screen.
    pub outcomes: Vec<i8>,
    pub final_positions: Vec<Position>,
    pub flags: Vec<TrajectoryFlag>,
    pub ensemble: Ensemble,
    pub orientation: Vec<OrientationSample>,
    pub equivariance: Vec<EquivarianceStat>,
    /// Spot separation over the larger spot width at the screen.
    pub separation_sigma: f64,
    /// `int |psi_+|^2` weight of the up spot, i.e. the basis up-field mass
    /// above z = 0 at the screen.
    pub basis_up_above: f64,
    /// `(t, rho(z))` at every record when `equivariance_theta` is set: the
    /// density of that spin state integrated over the other axis.
    pub density_profiles: Vec<(f64, Vec<f64>)>,
}

/// Options for [`SternGerlachDevice::run`].
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Record trajectories and spin orientation for these particle ids.
    pub track: Vec<usize>,
    /// Check equivariance at every record for a common spin angle.
    pub equivariance_theta: Option<f64>,
}

/// One Stern-Gerlach device. By linearity the evolved field of any incoming
/// spinor is `c psi_up + s psi_down`, where `psi_up` (`psi_down`) is the
/// envelope evolved as a pure up (down) component, so the two basis fields
/// are propagated once and every particle is guided by its own weights.
#[derive(Clone, Debug)]
pub struct SternGerlachDevice {
    setup: SternGerlachSetup,
    f: Vec<Complex64>,
}

impl SternGerlachDevice {
    pub fn new(setup: SternGerlachSetup) -> Result<Self> {
        setup.validate()?;
        let f = envelope(&setup.grid, setup.sigma0)?;
        Ok(Self { setup, f })
    }

    pub fn setup(&self) -> &SternGerlachSetup {
        &self.setup
    }

    pub fn initial_density(&self) -> Vec<f64> {
        self.f.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Equilibrium start points (independent of the spin state).
    pub fn sample_starts(&self, n: usize, seed: u64) -> Result<Vec<Position>> {
        sample_density(&self.setup.grid, &self.initial_density(), n, seed)
    }

    pub fn quantile_starts(&self, levels: &[Position]) -> Result<Vec<Position>> {
        let s = &self.setup;
        let psi = ComplexField::new(s.grid.clone(), self.f.clone(), 0.0, s.hbar, s.mass)?;
        Ok(quantile_positions(&psi, levels))
    }

    pub fn run(&self, particles: &[SpinParticle], opts: &RunOptions) -> Result<DeviceRun> {
        let s = &self.setup;
        let (n_magnet, n_flight) = s.stage_steps()?;
        let sub = s.magnet_substeps();
        let inside = PauliStepper::new(&s.grid, s.hbar, s.mass, &s.magnet, Stage::InsideMagnet, s.dt / sub as f64)?;
        let flight = PauliStepper::new(&s.grid, s.hbar, s.mass, &s.magnet, Stage::FreeFlight, s.dt)?;
        let fft = flight.fft().clone();
        let mut up = self.f.clone();
        let mut down = self.f.clone();
        let current = |amps: &[Complex64], t: f64| {
            ComplexField::new(s.grid.clone(), amps.to_vec(), t, s.hbar, s.mass).unwrap().current(&fft)
        };
        let weights: Vec<Vec<f64>> = particles
            .iter()
            .map(|p| {
                let (c2, s2) = half_angle_weights(p.theta);
                vec![c2, s2]
            })
            .collect();
        let starts: Vec<Position> = particles.iter().map(|p| p.start).collect();
        let mut all = Tracker::new(&starts, [0.0, 0.0], 0.0, weights.clone(), usize::MAX);
        let tracked: Vec<Position> = opts.track.iter().map(|&i| starts[i]).collect();
        let tracked_w: Vec<Vec<f64>> = opts.track.iter().map(|&i| weights[i].clone()).collect();
        let mut bundle = Tracker::new(&tracked, [0.0, 0.0], 0.0, tracked_w.clone(), s.record_every);

        let snapshot = |up: &[Complex64], down: &[Complex64], t: f64| {
            GuidanceSnapshot::from_components(s.grid.clone(), t, [0.0, 0.0], vec![current(up, t), current(down, t)])
        };
        let mut orientation = Vec::new();
        let mut equivariance = Vec::new();
        let mut density_profiles = Vec::new();
        let mut observe = |snap: &GuidanceSnapshot, all: &Tracker, bundle: &Tracker| -> Result<()> {
            let ax = z_axis(&s.grid);
            for (k, (y, flag)) in bundle.states().into_iter().enumerate() {
                if flag != TrajectoryFlag::Active {
                    continue;
                }
                if let Some(st) = s.grid.stencil(y) {
                    let (mut rp, mut rm) = (0.0, 0.0);
                    for (i, w) in st.iter() {
                        rp += w * snap.rho[0][i];
                        rm += w * snap.rho[1][i];
                    }
                    let (c2, s2) = (tracked_w[k][0], tracked_w[k][1]);
                    let theta = 2.0 * (s2 * rm).sqrt().atan2((c2 * rp).sqrt());
                    orientation.push(OrientationSample { traj_id: opts.track[k], t: snap.time, z: y[ax], theta });
                }
            }
            if let Some(theta) = opts.equivariance_theta {
                let (c2, s2) = half_angle_weights(theta);
                let rho = snap.density(&[c2, s2]);
                density_profiles.push((snap.time, z_profile(&s.grid, &rho)));
                equivariance.push(density_equivariance(&all.active_positions([0.0, 0.0]), &s.grid, rho, s.bins, snap.time)?);
            }
            Ok(())
        };

        let mut prev = snapshot(&up, &down, 0.0);
        observe(&prev, &all, &bundle)?;
        for step in 1..=(n_magnet + n_flight) {
            if step <= n_magnet {
                for _ in 0..sub {
                    inside.step_component(&mut up, true);
                    inside.step_component(&mut down, false);
                }
            } else {
                flight.step_component(&mut up, true);
                flight.step_component(&mut down, false);
            }
            let next = snapshot(&up, &down, step as f64 * s.dt);
            all.advance(&prev, &next);
            bundle.advance(&prev, &next);
            if step % s.record_every == 0 {
                observe(&next, &all, &bundle)?;
            }
            prev = next;
        }

        let ax = z_axis(&s.grid);
        let (mu, su) = spread(&s.grid, &up.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>());
        let (md, sd) = spread(&s.grid, &down.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>());
        let separation_sigma = (mu - md).abs() / su.max(sd);
        let up_rho: Vec<f64> = up.iter().zip(s.grid.nodes()).map(|(z, p)| if p[ax] > 0.0 { z.norm_sqr() } else { 0.0 }).collect();
        let basis_up_above = s.grid.integrate(&up_rho);

        let states = all.states();
        let outcomes = states.iter().map(|(y, _)| if y[ax] > 0.0 { 1 } else { -1 }).collect();
        let final_positions = states.iter().map(|(y, _)| *y).collect();
        let flags = states.iter().map(|(_, f)| *f).collect();
        Ok(DeviceRun {
            outcomes,
            final_positions,
            flags,
            ensemble: bundle.finish(Sampling::Given),
            orientation,
            equivariance,
            separation_sigma,
            basis_up_above,
            density_profiles,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SgImpact {
    pub atom_id: usize,
    pub z: f64,
    pub sign: i8,
}

#[derive(Clone, Debug)]
pub struct SternGerlachOutcome {
    pub impacts: Vec<SgImpact>,
    pub fraction_plus: f64,
    /// Born weight `cos^2(theta0/2)` of the up spot at the screen.
    pub born_plus: f64,
    pub initial_z: Vec<f64>,
    pub trajectories: Ensemble,
    pub orientation: Vec<OrientationSample>,
    pub equivariance: Vec<EquivarianceStat>,
    pub separation_sigma: f64,
    pub density_profiles: Vec<(f64, Vec<f64>)>,
}

/// Full single-device pipeline: `n_atoms` equilibrium atoms with spin
/// `(theta0, phi0)`, impacts classified by the sign of z, and a 10-atom
/// quantile bundle with spin orientation along it. The azimuth `phi0` drops
/// out of the guidance law; it only enters the initial spinor.
pub fn stern_gerlach_run(
    setup: &SternGerlachSetup,
    theta0: f64,
    phi0: f64,
    n_atoms: usize,
    seed: u64,
) -> Result<SternGerlachOutcome> {
    if !(0.0..=core::f64::consts::PI).contains(&theta0) {
        return Err(invalid("theta0", "must lie in [0, pi]"));
    }
    let _ = phi0;
    let device = SternGerlachDevice::new(setup.clone())?;
    let ax = z_axis(&setup.grid);
    let mut starts = device.sample_starts(n_atoms, seed)?;
    let levels: Vec<Position> = (0..10)
        .map(|i| {
            let q = (i as f64 + 0.5) / 10.0;
            if ax == 1 { [0.5, q] } else { [q, 0.5] }
        })
        .collect();
    starts.extend(device.quantile_starts(&levels)?);
    let particles: Vec<SpinParticle> = starts.iter().map(|&p| SpinParticle { theta: theta0, start: p }).collect();
    // The equivariance check must only see the equilibrium atoms.
    let run = device.run(&particles[..n_atoms], &RunOptions { track: Vec::new(), equivariance_theta: Some(theta0) })?;
    let bundle = device.run(&particles[n_atoms..], &RunOptions { track: (0..10).collect(), equivariance_theta: None })?;
    if run.separation_sigma <= 4.0 {
        return Err(Error::UnresolvedSpots { separation_sigma: run.separation_sigma });
    }
    let impacts: Vec<SgImpact> = run
        .final_positions
        .iter()
        .zip(&run.outcomes)
        .enumerate()
        .map(|(i, (p, &s))| SgImpact { atom_id: i, z: p[ax], sign: s })
        .collect();
    let plus = impacts.iter().filter(|i| i.sign > 0).count();
    Ok(SternGerlachOutcome {
        fraction_plus: plus as f64 / n_atoms.max(1) as f64,
        born_plus: half_angle_weights(theta0).0,
        initial_z: starts[..n_atoms].iter().map(|p| p[ax]).collect(),
        impacts,
        trajectories: bundle.ensemble,
        orientation: bundle.orientation,
        equivariance: run.equivariance,
        separation_sigma: run.separation_sigma,
        density_profiles: run.density_profiles,
    })
}

/// Dimensionless default device on an (x, z) plane.
pub fn default_setup() -> Result<SternGerlachSetup> {
    use crate::grid::{Axis, Boundary};
    Ok(SternGerlachSetup {
        grid: Grid::plane(Axis::centered(8.0, 32)?, Axis::centered(64.0, 512)?, Boundary::Absorbing { width: 1.5 })?,
        sigma0: 1.0,
        hbar: 1.0,
        mass: 1.0,
        magnet: MagnetConfig::default(),
        dt: 0.025,
        record_every: 8,
        bins: 100,
    })
}
