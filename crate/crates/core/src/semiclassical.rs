//! The hbar -> 0 harness: quantum runs at hbar / divisor against the
//! classical density, action and characteristics built from the same
//! hbar-free initial data.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::classical_hj::{gaussian_linear_density, linear_phase_action, PotentialSpec};
use crate::error::{invalid, require_positive, Error, Result};
use crate::fft::FftNd;
use crate::grid::{Axis, Boundary, Grid, Position};
use crate::pilot::jonsson::{jonsson_experiment, JonssonConfig};
use crate::pilot::{evolve_guided, quantile_positions, Ensemble, Sampling, Tracker, Trajectory, TrajectoryFlag};
use crate::stats;
use crate::wavefields::{
    coherent_state_in_frame, harmonic_orbit, init_packet_in_frame, madelung_decompose,
    spreading_width, ComplexField, GaussianPacketSpec,
};

pub const DEFAULT_DIVISORS: [f64; 5] = [1.0, 10.0, 100.0, 1000.0, 10000.0];

/// Initial packet width. A width tied to hbar (`coefficient * sqrt(hbar)`)
/// makes the initial data hbar-dependent and is refused by the statistical
/// sweeps.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InitialWidth {
    Fixed(f64),
    HbarScaled(f64),
}

impl InitialWidth {
    fn fixed(self) -> Result<f64> {
        match self {
            InitialWidth::Fixed(s) => {
                require_positive("sigma0", s)?;
                Ok(s)
            }
            InitialWidth::HbarScaled(_) => Err(Error::HbarDependentPreparation),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GaussianLinearSweep {
    pub hbar: f64,
    pub mass: f64,
    pub sigma0: InitialWidth,
    pub center: f64,
    pub velocity: f64,
    pub force: f64,
    pub duration: f64,
    pub steps: usize,
    /// Envelope grid half-width and node count.
    pub half_width: f64,
    pub nodes: usize,
    pub n_traj: usize,
}

impl Default for GaussianLinearSweep {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            sigma0: InitialWidth::Fixed(1.0),
            center: 0.0,
            velocity: 1.0,
            force: 0.5,
            duration: 2.0,
            steps: 200,
            half_width: 16.0,
            nodes: 256,
            n_traj: 26,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DoubleSlitSweep {
    pub config: JonssonConfig,
    pub source_width: InitialWidth,
    pub n_traj: usize,
}

impl Default for DoubleSlitSweep {
    fn default() -> Self {
        let config = JonssonConfig { n_particles: 0, keep_fields: false, ..JonssonConfig::default() };
        Self { source_width: InitialWidth::Fixed(config.source_sigma_y), config, n_traj: 26 }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CoherentSweep {
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
    pub x0: f64,
    pub v0: f64,
    pub periods: f64,
    pub steps: usize,
    /// Envelope grid half-width in units of the packet width.
    pub half_width_sigmas: f64,
    pub nodes: usize,
    pub n_traj: usize,
}

impl Default for CoherentSweep {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0, omega: 1.0, x0: 1.0, v0: 0.0, periods: 2.0, steps: 2000, half_width_sigmas: 10.0, nodes: 128, n_traj: 26 }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SweepExperiment {
    GaussianLinear(GaussianLinearSweep),
    DoubleSlit(DoubleSlitSweep),
    CoherentOscillator(CoherentSweep),
}

impl SweepExperiment {
    pub fn name(&self) -> &'static str {
        match self {
            SweepExperiment::GaussianLinear(_) => "gaussian_linear",
            SweepExperiment::DoubleSlit(_) => "double_slit",
            SweepExperiment::CoherentOscillator(_) => "coherent_oscillator",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub experiment: SweepExperiment,
    pub hbar_divisors: Vec<f64>,
}

impl SweepSpec {
    pub fn new(experiment: SweepExperiment) -> Self {
        Self { experiment, hbar_divisors: DEFAULT_DIVISORS.to_vec() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hbar_divisors.is_empty() {
            return Err(invalid("hbar_divisors", "must not be empty"));
        }
        if self.hbar_divisors.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(invalid("hbar_divisors", "must be positive"));
        }
        if self.hbar_divisors.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("hbar_divisors", "must be strictly ascending"));
        }
        match &self.experiment {
            SweepExperiment::GaussianLinear(g) => {
                g.sigma0.fixed()?;
                require_positive("duration", g.duration)?;
                if g.steps == 0 {
                    return Err(invalid("steps", "must be at least 1"));
                }
            }
            SweepExperiment::DoubleSlit(d) => {
                let s = d.source_width.fixed()?;
                if s != d.config.source_sigma_y {
                    return Err(invalid("source_width", "must equal the slit config source_sigma_y"));
                }
                d.config.validate()?;
            }
            SweepExperiment::CoherentOscillator(c) => {
                require_positive("omega", c.omega)?;
                require_positive("periods", c.periods)?;
                if c.steps == 0 {
                    return Err(invalid("steps", "must be at least 1"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DivisorReport {
    pub divisor: f64,
    pub hbar: f64,
    pub density_l1: Option<f64>,
    pub density_linf: Option<f64>,
    /// `L_inf` of `S_hbar - S - C` on the region `rho > 1e-3 max rho`.
    pub action_linf: Option<f64>,
    /// The fitted global constant `C` (median offset on that region).
    pub action_gauge: Option<f64>,
    /// Packet width and its deviation from the classical or analytic one.
    pub width: Option<f64>,
    pub width_error: Option<f64>,
    pub interquartile: Option<f64>,
    /// Center offset from the classical orbit.
    pub center_error: Option<f64>,
    /// Per-trajectory `max_t |X_hbar(t) - X_cl(t)|`.
    pub deviations: Vec<f64>,
    pub median_deviation: f64,
    pub max_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceRates {
    pub density_l1: Option<f64>,
    pub action_gauge: Option<f64>,
    pub width_error: Option<f64>,
    pub interquartile: Option<f64>,
    pub median_deviation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceReport {
    pub experiment: alloc::string::String,
    pub divisors: Vec<DivisorReport>,
    /// Log-log slopes against hbar over the whole ladder.
    pub rates: ConvergenceRates,
}

impl ConvergenceReport {
    /// `true` when `f` never increases along the ladder by more than `slack`.
    pub fn non_increasing(&self, f: impl Fn(&DivisorReport) -> Option<f64>, slack: f64) -> bool {
        let v: Vec<f64> = self.divisors.iter().filter_map(f).collect();
        v.windows(2).all(|w| w[1] <= w[0] + slack)
    }
}

#[derive(Clone, Debug)]
pub struct SweepRun {
    pub report: ConvergenceReport,
    /// Quantum trajectories per divisor.
    pub quantum: Vec<(f64, Ensemble)>,
    /// Classical characteristics from the same start points, sampled at the
    /// quantum record times of the first divisor.
    pub classical: Ensemble,
}

/// Local de Broglie wavelength `2 pi hbar / m |v|` of the fastest guidance
/// velocity component on `rho > 1e-3 max rho`, per axis of the stored grid.
pub fn de_broglie_wavelength(psi: &ComplexField, fft: &FftNd) -> Position {
    let (rho, j) = psi.current(fft);
    let rmax = rho.iter().cloned().fold(0.0, f64::max);
    let mut vmax = [0.0f64; 2];
    for (r, j) in rho.iter().zip(&j) {
        if *r > 1e-3 * rmax {
            vmax[0] = vmax[0].max((j[0] / r).abs());
            vmax[1] = vmax[1].max((j[1] / r).abs());
        }
    }
    let h = 2.0 * core::f64::consts::PI * psi.hbar() / psi.mass();
    [h / vmax[0], h / vmax[1]]
}

/// Refuses a field whose local de Broglie wavelength spans fewer than four
/// cells on any axis.
pub fn require_resolved(psi: &ComplexField) -> Result<()> {
    let fft = FftNd::new(psi.grid().shape());
    let lambda = de_broglie_wavelength(psi, &fft);
    for ax in 0..psi.grid().dims() {
        let h = psi.grid().axis(ax).spacing();
        if lambda[ax] < 4.0 * h {
            return Err(Error::GridTooCoarse { hbar: psi.hbar(), wavelength: lambda[ax], spacing: h });
        }
    }
    Ok(())
}

/// `max_t |X_q(t) - X_cl(t)|` over the active part of each trajectory.
fn deviations(quantum: &Ensemble, classical: impl Fn(usize, f64) -> Position) -> Vec<f64> {
    quantum
        .trajectories
        .iter()
        .enumerate()
        .map(|(k, tr)| {
            tr.times
                .iter()
                .zip(&tr.positions)
                .map(|(&t, p)| {
                    let c = classical(k, t);
                    ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

fn classical_ensemble(quantum: &Ensemble, classical: impl Fn(usize, f64) -> Position) -> Ensemble {
    Ensemble {
        trajectories: quantum
            .trajectories
            .iter()
            .enumerate()
            .map(|(k, tr)| Trajectory {
                initial_seed_index: k,
                times: tr.times.clone(),
                positions: tr.times.iter().map(|&t| classical(k, t)).collect(),
                flag: TrajectoryFlag::Active,
                exit_time: None,
            })
            .collect(),
        sampling: Sampling::Quantile,
    }
}

fn fill_deviation(r: &mut DivisorReport, dev: Vec<f64>) {
    r.median_deviation = stats::median(&dev);
    r.max_deviation = dev.iter().cloned().fold(0.0, f64::max);
    r.deviations = dev;
}

fn levels_1d(n: usize) -> Vec<Position> {
    (0..n).map(|i| [(i as f64 + 0.5) / n as f64, 0.5]).collect()
}

fn gaussian_linear(g: &GaussianLinearSweep, divisors: &[f64]) -> Result<SweepRun> {
    let sigma0 = g.sigma0.fixed()?;
    let spec = GaussianPacketSpec { dims: 1, sigma0, center: [g.center, 0.0], velocity: [g.velocity, 0.0] };
    let potential = PotentialSpec::linear(g.mass, [g.force, 0.0])?;
    let grid = Grid::line(Axis::centered(g.half_width, g.nodes)?, Boundary::Periodic)?;
    let dt = g.duration / g.steps as f64;
    let mut out = Vec::new();
    let mut quantum = Vec::new();
    let mut classical_starts: Vec<Position> = Vec::new();
    for &div in divisors {
        let hbar = g.hbar / div;
        let psi0 = init_packet_in_frame(&spec, &grid, hbar, g.mass)?;
        require_resolved(&psi0)?;
        let start = quantile_positions(&psi0, &levels_1d(g.n_traj));
        if classical_starts.is_empty() {
            classical_starts = start.clone();
        }
        let mut trackers = [Tracker::scalar(&start, psi0.origin(), 0.0, 1)];
        let psi = evolve_guided(&psi0, &potential, dt, g.steps, 0, &mut trackers, |_, _, _| Ok(()))?;
        require_resolved(&psi)?;
        let [tr] = trackers;
        let ens = tr.finish(Sampling::Quantile);

        let t = psi.time();
        let mad = madelung_decompose(&psi);
        let rho = mad.rho.values();
        let lab = mad.rho.grid().clone();
        let rmax = rho.iter().cloned().fold(0.0, f64::max);
        let (mut l1, mut linf) = (0.0, 0.0f64);
        let w = lab.quadrature_weights();
        let mut offsets = Vec::new();
        let mut r2 = Vec::new();
        for (i, x) in lab.nodes().enumerate() {
            let rc = gaussian_linear_density(1, sigma0, spec.center, spec.velocity, potential_force(&potential), g.mass, x, t);
            let d = (rho[i] - rc).abs();
            l1 += d * w[i];
            linf = linf.max(d);
            if rho[i] > 1e-3 * rmax {
                let s_cl = linear_phase_action(&potential, spec.velocity, x, t)?;
                offsets.push(mad.action.values()[i] - s_cl);
                r2.push((x[0] - psi.origin()[0]).powi(2));
            }
        }
        let median = stats::median(&offsets);
        let action_linf = offsets.iter().map(|o| (o - median).abs()).fold(0.0, f64::max);
        // The offset is exactly a constant plus a term in (x - center)^2;
        // the constant is the gauge.
        let gauge = stats::linear_fit(&r2, &offsets).1;
        let width = mad.rho.variance(0).sqrt();
        let mut r = DivisorReport {
            divisor: div,
            hbar,
            density_l1: Some(l1),
            density_linf: Some(linf),
            action_linf: Some(action_linf),
            action_gauge: Some(gauge),
            width: Some(width),
            width_error: Some(width - sigma0),
            center_error: Some((mad.rho.mean(0) - psi.origin()[0]).abs()),
            ..Default::default()
        };
        let flow = |k: usize, t: f64| potential.flow(classical_starts[k], spec.velocity, t).map_or([f64::NAN; 2], |f| f.0);
        fill_deviation(&mut r, deviations(&ens, flow));
        out.push(r);
        quantum.push((div, ens));
    }
    let flow = |k: usize, t: f64| potential.flow(classical_starts[k], spec.velocity, t).map_or([f64::NAN; 2], |f| f.0);
    let classical = classical_ensemble(&quantum[0].1, flow);
    Ok(SweepRun { report: report("gaussian_linear", out), quantum, classical })
}

fn potential_force(p: &PotentialSpec) -> Position {
    p.force([0.0, 0.0])
}

fn double_slit(d: &DoubleSlitSweep, divisors: &[f64]) -> Result<SweepRun> {
    let mut out = Vec::new();
    let mut quantum = Vec::new();
    let mut starts: Vec<Position> = Vec::new();
    let velocity = [d.config.velocity, 0.0];
    let free = PotentialSpec::free(d.config.mass)?;
    for &div in divisors {
        let cfg = JonssonConfig {
            hbar: d.config.hbar / div,
            bundle_size: d.n_traj,
            n_particles: 0,
            keep_fields: false,
            ..d.config.clone()
        };
        let psi0 = cfg.initial_field()?;
        require_resolved(&psi0)?;
        let run = jonsson_experiment(&cfg)?;
        let first: Vec<Position> = run.bundle.trajectories.iter().map(|t| t.positions[0]).collect();
        if starts.is_empty() {
            starts = first;
        } else if starts.iter().zip(&first).any(|(a, b)| (a[0] - b[0]).abs() + (a[1] - b[1]).abs() > 1e-9) {
            return Err(invalid("initial positions", "quantile bundle changed with hbar"));
        }
        let flow = |k: usize, t: f64| free.flow(starts[k], velocity, t).map_or([f64::NAN; 2], |f| f.0);
        let mut r = DivisorReport { divisor: div, hbar: cfg.hbar, ..Default::default() };
        fill_deviation(&mut r, deviations(&run.bundle, flow));
        out.push(r);
        quantum.push((div, run.bundle));
    }
    let flow = |k: usize, t: f64| free.flow(starts[k], velocity, t).map_or([f64::NAN; 2], |f| f.0);
    let classical = classical_ensemble(&quantum[0].1, flow);
    Ok(SweepRun { report: report("double_slit", out), quantum, classical })
}

fn coherent(c: &CoherentSweep, divisors: &[f64]) -> Result<SweepRun> {
    let potential = PotentialSpec::harmonic(c.mass, c.omega)?;
    let duration = c.periods * 2.0 * core::f64::consts::PI / c.omega;
    let dt = duration / c.steps as f64;
    let mut out = Vec::new();
    let mut quantum = Vec::new();
    let (x0, v0) = ([c.x0, 0.0], [c.v0, 0.0]);
    for &div in divisors {
        let hbar = c.hbar / div;
        let sigma = (hbar / (2.0 * c.mass * c.omega)).sqrt();
        let grid = Grid::line(Axis::centered(c.half_width_sigmas * sigma, c.nodes)?, Boundary::Periodic)?;
        let psi0 = coherent_state_in_frame(c.omega, x0, v0, hbar, c.mass, 0.0, &grid)?;
        require_resolved(&psi0)?;
        let start = quantile_positions(&psi0, &levels_1d(c.n_traj));
        let mut trackers = [Tracker::scalar(&start, psi0.origin(), 0.0, 10)];
        let psi = evolve_guided(&psi0, &potential, dt, c.steps, 0, &mut trackers, |_, _, _| Ok(()))?;
        require_resolved(&psi)?;
        let [tr] = trackers;
        let ens = tr.finish(Sampling::Quantile);
        let rho = psi.density();
        let (xi, _) = harmonic_orbit(c.omega, x0, v0, psi.time());
        let width = rho.variance(0).sqrt();
        let ys: Vec<f64> = rho.grid().axis(0).coords();
        let line = crate::pilot::PiecewiseLinear::new(ys, rho.values().to_vec());
        let iqr = line.inverse(0.75 * line.total()) - line.inverse(0.25 * line.total());
        let mut r = DivisorReport {
            divisor: div,
            hbar,
            width: Some(width),
            width_error: Some((width - sigma).abs()),
            interquartile: Some(iqr),
            center_error: Some((rho.mean(0) - xi[0]).abs()),
            ..Default::default()
        };
        let classical = |k: usize, t: f64| {
            let (xi_t, _) = harmonic_orbit(c.omega, x0, v0, t);
            [start[k][0] + xi_t[0] - x0[0], 0.0]
        };
        fill_deviation(&mut r, deviations(&ens, classical));
        out.push(r);
        quantum.push((div, ens));
    }
    // The start points scale with the packet width; the classical reference
    // is reported for the first divisor.
    let first = &quantum[0].1;
    let starts: Vec<Position> = first.trajectories.iter().map(|t| t.positions[0]).collect();
    let classical = classical_ensemble(first, |k, t| {
        let (xi_t, _) = harmonic_orbit(c.omega, x0, v0, t);
        [starts[k][0] + xi_t[0] - x0[0], 0.0]
    });
    Ok(SweepRun { report: report("coherent_oscillator", out), quantum, classical })
}

fn rate(divs: &[DivisorReport], f: impl Fn(&DivisorReport) -> Option<f64>) -> Option<f64> {
    let (mut h, mut v) = (Vec::new(), Vec::new());
    for d in divs {
        let y = f(d)?.abs();
        if !(y > 0.0) {
            return None;
        }
        h.push(d.hbar);
        v.push(y);
    }
    (h.len() >= 2).then(|| stats::loglog_slope(&h, &v))
}

fn report(name: &str, divisors: Vec<DivisorReport>) -> ConvergenceReport {
    let rates = ConvergenceRates {
        density_l1: rate(&divisors, |d| d.density_l1),
        action_gauge: rate(&divisors, |d| d.action_gauge),
        width_error: rate(&divisors, |d| d.width_error),
        interquartile: rate(&divisors, |d| d.interquartile),
        median_deviation: rate(&divisors, |d| Some(d.median_deviation)),
    };
    ConvergenceReport { experiment: name.into(), divisors, rates }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepRun> {
    spec.validate()?;
    match &spec.experiment {
        SweepExperiment::GaussianLinear(g) => gaussian_linear(g, &spec.hbar_divisors),
        SweepExperiment::DoubleSlit(d) => double_slit(d, &spec.hbar_divisors),
        SweepExperiment::CoherentOscillator(c) => coherent(c, &spec.hbar_divisors),
    }
}

/// Per-divisor trajectory deviations of [`run_sweep`].
pub fn trajectory_convergence(spec: &SweepSpec) -> Result<Vec<(f64, Vec<f64>)>> {
    Ok(run_sweep(spec)?.report.divisors.into_iter().map(|d| (d.divisor, d.deviations)).collect())
}

/// Analytic gauge `-(d hbar / 2) atan(hbar t / 2 m sigma0^2)` of the
/// spreading packet and the width excess `sigma_hbar(t) - sigma0`.
pub fn gaussian_gauge_and_width(dims: usize, sigma0: f64, hbar: f64, mass: f64, t: f64) -> (f64, f64) {
    let a = hbar * t / (2.0 * mass * sigma0 * sigma0);
    (-0.5 * dims as f64 * hbar * a.atan(), spreading_width(sigma0, hbar, mass, t) - sigma0)
}
