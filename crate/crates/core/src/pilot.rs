//! de Broglie-Bohm guidance: sampling from `|Psi|^2`, trajectory integration
//! and equivariance statistics. The double-slit experiment lives in
//! [`jonsson`].

pub mod jonsson;

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::classical_hj::PotentialSpec;
use crate::error::{invalid, Error, Result};
use crate::fft::FftNd;
use crate::grid::{Grid, Position, Stencil};
use crate::par;
use crate::rng;
use crate::stats;
use crate::wavefields::{ComplexField, Propagator, NODE_FLOOR};

/// Piecewise-linear density on sorted abscissae.
#[derive(Clone, Debug)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
    cum: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let mut cum = Vec::with_capacity(xs.len());
        cum.push(0.0);
        for i in 0..xs.len() - 1 {
            let c = cum[i] + 0.5 * (xs[i + 1] - xs[i]) * (ys[i] + ys[i + 1]);
            cum.push(c);
        }
        Self { xs, ys, cum }
    }

    pub fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        let n = self.xs.len();
        if x >= self.xs[n - 1] {
            return self.total();
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let s = x - self.xs[i];
        let slope = (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i]);
        self.cum[i] + self.ys[i] * s + 0.5 * slope * s * s
    }

    /// Abscissa where the cumulative mass reaches `target`.
    pub fn inverse(&self, target: f64) -> f64 {
        let n = self.xs.len();
        let target = target.clamp(0.0, self.total());
        let mut i = self.cum.partition_point(|&c| c < target).max(1) - 1;
        i = i.min(n - 2);
        // Skip empty cells so the result lands inside the support.
        while i + 1 < n - 1 && self.cum[i + 1] <= target && self.cum[i + 1] == self.cum[i] {
            i += 1;
        }
        let r = target - self.cum[i];
        let h = self.xs[i + 1] - self.xs[i];
        let (a, b) = (self.ys[i], self.ys[i + 1]);
        let slope = (b - a) / h;
        let disc = (a * a + 2.0 * slope * r).max(0.0);
        let denom = a + disc.sqrt();
        let s = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        self.xs[i] + s.clamp(0.0, h)
    }
}

fn row(grid: &Grid, rho: &[f64], i1: usize) -> Vec<f64> {
    (0..grid.shape()[0]).map(|i0| rho[grid.index(i0, i1)]).collect()
}

/// `int rho(x, y) dy` at each axis-0 node (exact for bilinear densities).
fn marginal0(grid: &Grid, rho: &[f64]) -> PiecewiseLinear {
    let xs = grid.axis(0).coords();
    if grid.dims() == 1 {
        return PiecewiseLinear::new(xs, rho.to_vec());
    }
    let [n0, n1] = grid.shape();
    let ys = grid.axis(1).coords();
    let m = (0..n0)
        .map(|i0| PiecewiseLinear::new(ys.clone(), rho[i0 * n1..(i0 + 1) * n1].to_vec()).total())
        .collect();
    PiecewiseLinear::new(xs, m)
}

/// `int_a^b rho(x, y) dx` at each axis-1 node.
fn slab_profile(grid: &Grid, rho: &[f64], a: f64, b: f64) -> PiecewiseLinear {
    let xs = grid.axis(0).coords();
    let profile = (0..grid.shape()[1])
        .map(|i1| {
            let line = PiecewiseLinear::new(xs.clone(), row(grid, rho, i1));
            line.cdf(b) - line.cdf(a)
        })
        .collect();
    PiecewiseLinear::new(grid.axis(1).coords(), profile)
}

/// `n` draws from the interpolated density `rho` on `grid` (grid
/// coordinates). Draw `i` uses random stream `(seed, i)`.
pub fn sample_density(grid: &Grid, rho: &[f64], n: usize, seed: u64) -> Result<Vec<Position>> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if grid.dims() == 1 {
        let line = PiecewiseLinear::new(grid.axis(0).coords(), rho.to_vec());
        if !(line.total() > 0.0) {
            return Err(invalid("density", "has no mass"));
        }
        return Ok(par::map_range(n, |i| {
            let mut r = rng::stream(seed, i as u64);
            [line.inverse(rng::uniform(&mut r) * line.total()), 0.0]
        }));
    }
    let rmax = rho.iter().cloned().fold(0.0, f64::max);
    if !(rmax > 0.0) {
        return Err(invalid("density", "has no mass"));
    }
    let (a0, a1) = (*grid.axis(0), *grid.axis(1));
    Ok(par::map_range(n, |i| {
        let mut r = rng::stream(seed, i as u64);
        loop {
            let p = [a0.min + rng::uniform(&mut r) * a0.extent(), a1.min + rng::uniform(&mut r) * a1.extent()];
            let u = rng::uniform(&mut r) * rmax;
            if u < grid.interpolate(rho, p).unwrap_or(0.0) {
                return p;
            }
        }
    }))
}

/// Quantum-equilibrium initial positions in lab coordinates.
pub fn sample_initial_positions(psi0: &ComplexField, n: usize, seed: u64) -> Result<Vec<Position>> {
    let o = psi0.origin();
    let pts = sample_density(psi0.grid(), &psi0.density_values(), n, seed)?;
    Ok(pts.into_iter().map(|p| [p[0] + o[0], p[1] + o[1]]).collect())
}

/// Deterministic positions at fixed quantile levels: axis 0 from the
/// marginal, axis 1 from the conditional at that abscissa. Levels are in
/// `(0, 1)`; returns lab coordinates.
pub fn quantile_positions(psi0: &ComplexField, levels: &[Position]) -> Vec<Position> {
    let grid = psi0.grid();
    let rho = psi0.density_values();
    let o = psi0.origin();
    let m = marginal0(grid, &rho);
    levels
        .iter()
        .map(|l| {
            let x = m.inverse(l[0] * m.total());
            let y = if grid.dims() == 2 {
                let (i0, f) = grid.axis(0).locate(x).unwrap();
                let n1 = grid.shape()[1];
                let cond: Vec<f64> = (0..n1)
                    .map(|i1| (1.0 - f) * rho[grid.index(i0, i1)] + f * rho[grid.index(i0 + 1, i1)])
                    .collect();
                let c = PiecewiseLinear::new(grid.axis(1).coords(), cond);
                c.inverse(l[1] * c.total())
            } else {
                0.0
            };
            [x + o[0], y + o[1]]
        })
        .collect()
}

/// Densities and currents of one or more components at one instant, on the
/// stored (envelope) grid.
#[derive(Clone, Debug)]
pub struct GuidanceSnapshot {
    pub grid: Grid,
    pub time: f64,
    /// Frame center (lab position of envelope coordinate 0).
    pub origin: Position,
    pub rho: Vec<Vec<f64>>,
    pub current: Vec<Vec<Position>>,
    rho_max: Vec<f64>,
    /// Nodal velocities of a single-component snapshot, NaN below the floor.
    nodal: Option<Vec<Position>>,
}

impl GuidanceSnapshot {
    pub fn from_components(grid: Grid, time: f64, origin: Position, comps: Vec<(Vec<f64>, Vec<Position>)>) -> Self {
        let mut rho = Vec::new();
        let mut current = Vec::new();
        let mut rho_max = Vec::new();
        for (r, j) in comps {
            rho_max.push(r.iter().cloned().fold(0.0, f64::max));
            rho.push(r);
            current.push(j);
        }
        let mut snap = Self { grid, time, origin, rho, current, rho_max, nodal: None };
        if snap.rho.len() == 1 {
            let nodal = (0..snap.grid.len()).map(|i| snap.node_velocity(i, &[1.0]).unwrap_or([f64::NAN; 2])).collect();
            snap.nodal = Some(nodal);
        }
        snap
    }

    pub fn from_field(psi: &ComplexField, fft: &FftNd) -> Self {
        let (r, j) = psi.current(fft);
        Self::from_components(psi.grid().clone(), psi.time(), psi.origin(), vec![(r, j)])
    }

    fn node_velocity(&self, i: usize, w: &[f64]) -> Option<Position> {
        let mut r = 0.0;
        let mut j = [0.0, 0.0];
        let mut floor = 0.0;
        for c in 0..self.rho.len() {
            if w[c] == 0.0 {
                continue;
            }
            r += w[c] * self.rho[c][i];
            j[0] += w[c] * self.current[c][i][0];
            j[1] += w[c] * self.current[c][i][1];
            floor += w[c] * self.rho_max[c];
        }
        if r < NODE_FLOOR * floor || r <= 0.0 {
            return None;
        }
        Some([j[0] / r, j[1] / r])
    }

    /// Bilinear interpolation of nodal velocities for component weights `w`.
    pub fn velocity(&self, y: Position, w: &[f64]) -> Option<Position> {
        self.velocity_on(&self.grid.stencil(y)?, w)
    }

    /// As [`Self::velocity`] with a precomputed stencil of this grid.
    pub fn velocity_on(&self, s: &Stencil, w: &[f64]) -> Option<Position> {
        let mut v = [0.0, 0.0];
        for (i, wt) in s.iter() {
            if wt == 0.0 {
                continue;
            }
            let vn = match &self.nodal {
                Some(nodal) if w[0] == 1.0 => {
                    let vn = nodal[i];
                    if vn[0].is_nan() {
                        return None;
                    }
                    vn
                }
                _ => self.node_velocity(i, w)?,
            };
            v[0] += wt * vn[0];
            v[1] += wt * vn[1];
        }
        Some(v)
    }

    /// Weighted total density at the nodes.
    pub fn density(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (c, r) in self.rho.iter().enumerate() {
            if w[c] != 0.0 {
                for (o, v) in out.iter_mut().zip(r) {
                    *o += w[c] * v;
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TrajectoryFlag {
    Active,
    /// Entered the absorbing layer.
    Absorbed,
    ExitedGrid,
    VelocityUndefined,
}

impl TrajectoryFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Active => "active",
            Self::Absorbed => "absorbed",
            Self::ExitedGrid => "exited",
            Self::VelocityUndefined => "velocity_undefined",
        }
    }
}

/// One classical RK4 step of `dy/dt = v(y, t)`.
pub fn rk4_step(y: Position, t: f64, dt: f64, v: impl Fn(Position, f64) -> Option<Position>) -> Option<Position> {
    let k1 = v(y, t)?;
    let k2 = v([y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]], t + 0.5 * dt)?;
    let k3 = v([y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]], t + 0.5 * dt)?;
    let k4 = v([y[0] + dt * k3[0], y[1] + dt * k3[1]], t + dt)?;
    Some([
        y[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ])
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub initial_seed_index: usize,
    pub times: Vec<f64>,
    /// Lab positions.
    pub positions: Vec<Position>,
    pub flag: TrajectoryFlag,
    pub exit_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Sampling {
    Equilibrium { seed: u64 },
    Quantile,
    Given,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ensemble {
    pub trajectories: Vec<Trajectory>,
    pub sampling: Sampling,
}

impl Ensemble {
    /// Lab positions of active trajectories at recorded time `t`.
    pub fn positions_at(&self, t: f64) -> Vec<Position> {
        let tol = 1e-9 * (1.0 + t.abs());
        self.trajectories
            .iter()
            .filter_map(|tr| tr.times.iter().position(|&s| (s - t).abs() <= tol).map(|k| tr.positions[k]))
            .collect()
    }

    /// Smallest equal-time distance between two trajectories and the time
    /// it occurs. Trajectories recorded on a common clock are compared by
    /// record index; records whose times disagree are skipped.
    pub fn min_pairwise_separation(&self) -> Option<(f64, f64)> {
        let trs = &self.trajectories;
        let mut best: Option<(f64, f64)> = None;
        for (a, ta) in trs.iter().enumerate() {
            for tb in &trs[a + 1..] {
                for k in 0..ta.times.len().min(tb.times.len()) {
                    let t = ta.times[k];
                    if (tb.times[k] - t).abs() > 1e-9 * (1.0 + t.abs()) {
                        continue;
                    }
                    let (p, q) = (ta.positions[k], tb.positions[k]);
                    let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                    if best.map_or(true, |b| d < b.0) {
                        best = Some((d, t));
                    }
                }
            }
        }
        best
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Particle {
    y: Position,
    flag: TrajectoryFlag,
    exit_time: Option<f64>,
    prev_lab: Position,
}

/// Crossing of a lab-frame plane `x[axis] = level`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Impact {
    pub traj_id: usize,
    pub time: f64,
    pub position: Position,
}

/// A group of particles integrated through a field history, in envelope
/// coordinates, with per-component guidance weights.
#[derive(Clone, Debug)]
pub struct Tracker {
    particles: Vec<Particle>,
    weights: Vec<Vec<f64>>,
    records: Vec<Trajectory>,
    record_every: usize,
    steps_done: usize,
    screen: Option<(usize, f64)>,
    impacts: Vec<Option<Impact>>,
}

impl Tracker {
    /// `start` in lab coordinates; `origin` is the frame center at `t0`.
    pub fn new(start: &[Position], origin: Position, t0: f64, weights: Vec<Vec<f64>>, record_every: usize) -> Self {
        debug_assert_eq!(start.len(), weights.len());
        let particles = start
            .iter()
            .map(|p| Particle { y: [p[0] - origin[0], p[1] - origin[1]], flag: TrajectoryFlag::Active, exit_time: None, prev_lab: *p })
            .collect();
        let records = start
            .iter()
            .enumerate()
            .map(|(i, p)| Trajectory {
                initial_seed_index: i,
                times: vec![t0],
                positions: vec![*p],
                flag: TrajectoryFlag::Active,
                exit_time: None,
            })
            .collect();
        Self {
            particles,
            weights,
            records,
            record_every: record_every.max(1),
            steps_done: 0,
            screen: None,
            impacts: vec![None; start.len()],
        }
    }

    /// Single-component guidance.
    pub fn scalar(start: &[Position], origin: Position, t0: f64, record_every: usize) -> Self {
        Self::new(start, origin, t0, vec![vec![1.0]; start.len()], record_every)
    }

    /// Record where each particle first crosses the lab plane `x[axis] = level`.
    pub fn with_screen(mut self, axis: usize, level: f64) -> Self {
        self.screen = Some((axis, level));
        self
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// RK4 over `[a.time, b.time]`, velocity linear in time between the two
    /// snapshots.
    pub fn advance(&mut self, a: &GuidanceSnapshot, b: &GuidanceSnapshot) {
        let dt = b.time - a.time;
        let weights = &self.weights;
        let screen = self.screen;
        let mut out: Vec<(Particle, Option<Impact>)> =
            self.particles.iter().copied().zip(self.impacts.iter().copied()).collect();
        par::for_each_mut(&mut out, |i, (p, hit)| {
            if p.flag != TrajectoryFlag::Active {
                return;
            }
            let w = &weights[i];
            let v = |y: Position, t: f64| -> Option<Position> {
                let lambda = (t - a.time) / dt;
                let s = a.grid.stencil(y)?;
                let va = a.velocity_on(&s, w)?;
                let vb = b.velocity_on(&s, w)?;
                Some([(1.0 - lambda) * va[0] + lambda * vb[0], (1.0 - lambda) * va[1] + lambda * vb[1]])
            };
            match rk4_step(p.y, a.time, dt, v) {
                None => {
                    p.flag = TrajectoryFlag::VelocityUndefined;
                    p.exit_time = Some(a.time);
                }
                Some(y) => {
                    p.y = y;
                    let lab = [b.origin[0] + y[0], b.origin[1] + y[1]];
                    if let (Some((axis, level)), None) = (screen, *hit) {
                        let (x0, x1) = (p.prev_lab[axis], lab[axis]);
                        if (x0 - level) * (x1 - level) <= 0.0 && x0 != x1 {
                            let f = (level - x0) / (x1 - x0);
                            *hit = Some(Impact {
                                traj_id: i,
                                time: a.time + f * dt,
                                position: [p.prev_lab[0] + f * (lab[0] - p.prev_lab[0]), p.prev_lab[1] + f * (lab[1] - p.prev_lab[1])],
                            });
                        }
                    }
                    p.prev_lab = lab;
                    if !b.grid.contains(y) {
                        p.flag = TrajectoryFlag::ExitedGrid;
                        p.exit_time = Some(b.time);
                    } else if b.grid.in_absorbing_layer(y) {
                        p.flag = TrajectoryFlag::Absorbed;
                        p.exit_time = Some(b.time);
                    }
                }
            }
        });
        for (k, (p, hit)) in out.into_iter().enumerate() {
            self.particles[k] = p;
            self.impacts[k] = hit;
        }
        self.steps_done += 1;
        if self.steps_done % self.record_every == 0 {
            self.record(b.time, b.origin);
        }
    }

    fn record(&mut self, t: f64, origin: Position) {
        for (p, r) in self.particles.iter().zip(self.records.iter_mut()) {
            if p.flag == TrajectoryFlag::Active {
                r.times.push(t);
                r.positions.push([origin[0] + p.y[0], origin[1] + p.y[1]]);
            } else if r.flag == TrajectoryFlag::Active {
                r.flag = p.flag;
                r.exit_time = p.exit_time;
            }
        }
    }

    /// Lab positions of the particles still active.
    pub fn active_positions(&self, origin: Position) -> Vec<Position> {
        self.particles
            .iter()
            .filter(|p| p.flag == TrajectoryFlag::Active)
            .map(|p| [origin[0] + p.y[0], origin[1] + p.y[1]])
            .collect()
    }

    /// Envelope coordinates and flags of all particles.
    pub fn states(&self) -> Vec<(Position, TrajectoryFlag)> {
        self.particles.iter().map(|p| (p.y, p.flag)).collect()
    }

    pub fn impacts(&self) -> Vec<Impact> {
        self.impacts.iter().filter_map(|i| *i).collect()
    }

    pub fn finish(mut self, sampling: Sampling) -> Ensemble {
        for (p, r) in self.particles.iter().zip(self.records.iter_mut()) {
            if r.flag == TrajectoryFlag::Active && p.flag != TrajectoryFlag::Active {
                r.flag = p.flag;
                r.exit_time = p.exit_time;
            }
        }
        Ensemble { trajectories: self.records, sampling }
    }
}

/// Propagates `psi0` for `steps` steps of `dt` while advancing every tracker.
/// `observe` sees the field at step 0 and after every `observe_every` steps.
pub fn evolve_guided(
    psi0: &ComplexField,
    potential: &PotentialSpec,
    dt: f64,
    steps: usize,
    observe_every: usize,
    trackers: &mut [Tracker],
    mut observe: impl FnMut(usize, &ComplexField, &[Tracker]) -> Result<()>,
) -> Result<ComplexField> {
    let prop = Propagator::new(psi0, potential, dt)?;
    let mut psi = psi0.clone();
    let mut prev = GuidanceSnapshot::from_field(&psi, prop.fft());
    observe(0, &psi, trackers)?;
    for step in 1..=steps {
        prop.step(&mut psi)?;
        let next = GuidanceSnapshot::from_field(&psi, prop.fft());
        for tr in trackers.iter_mut() {
            tr.advance(&prev, &next);
        }
        prev = next;
        if observe_every > 0 && step % observe_every == 0 {
            observe(step, &psi, trackers)?;
        }
    }
    Ok(psi)
}

/// Trajectories through a stored history; consecutive snapshots set the
/// step.
pub fn integrate_trajectories(start: &[Position], history: &[ComplexField]) -> Result<Ensemble> {
    integrate_snapshots(start, &history_guidance(history)?, vec![vec![1.0]; start.len()])
}

pub(crate) fn history_guidance(history: &[ComplexField]) -> Result<Vec<GuidanceSnapshot>> {
    let first = history.first().ok_or(invalid("history", "is empty"))?;
    let fft = FftNd::new(first.grid().shape());
    history
        .iter()
        .map(|f| {
            f.grid().ensure_matches(first.grid())?;
            Ok(GuidanceSnapshot::from_field(f, &fft))
        })
        .collect()
}

pub fn integrate_snapshots(start: &[Position], snaps: &[GuidanceSnapshot], weights: Vec<Vec<f64>>) -> Result<Ensemble> {
    let first = snaps.first().ok_or(invalid("history", "is empty"))?;
    if snaps.windows(2).any(|w| !(w[1].time > w[0].time)) {
        return Err(invalid("history", "times must be strictly ascending"));
    }
    let mut tr = Tracker::new(start, first.origin, first.time, weights, 1);
    for w in snaps.windows(2) {
        tr.advance(&w[0], &w[1]);
    }
    Ok(tr.finish(Sampling::Given))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EquivarianceStat {
    pub time: f64,
    pub n: usize,
    pub bins: usize,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub passed: bool,
}

pub const DEFAULT_ALPHA: f64 = 0.01;

/// Chi-square test of lab positions against the density `rho` on `grid`
/// (lab coordinates). Bins are equiprobable under the interpolated density:
/// `bins` intervals on a line, or roughly `sqrt(bins)` slabs along axis 0,
/// each split into as many conditional bins along axis 1.
pub fn equivariance_test(positions: &[Position], grid: &Grid, rho: &[f64], bins: usize, time: f64) -> Result<EquivarianceStat> {
    let n = positions.len();
    if bins < 2 {
        return Err(invalid("bins", "need at least 2"));
    }
    let (counts, total_bins) = if grid.dims() == 1 {
        let line = marginal0(grid, rho);
        let edges: Vec<f64> = (1..bins).map(|k| line.inverse(k as f64 / bins as f64 * line.total())).collect();
        let mut c = vec![0usize; bins];
        for p in positions {
            c[edges.partition_point(|&e| e <= p[0])] += 1;
        }
        (c, bins)
    } else {
        let b0 = (bins as f64).sqrt().round().max(2.0) as usize;
        let b1 = (bins / b0).max(2);
        let m = marginal0(grid, rho);
        let mut xe = vec![grid.axis(0).min];
        xe.extend((1..b0).map(|k| m.inverse(k as f64 / b0 as f64 * m.total())));
        xe.push(grid.axis(0).max);
        let y_edges: Vec<Vec<f64>> = (0..b0)
            .map(|s| {
                let prof = slab_profile(grid, rho, xe[s], xe[s + 1]);
                (1..b1).map(|k| prof.inverse(k as f64 / b1 as f64 * prof.total())).collect()
            })
            .collect();
        let mut c = vec![0usize; b0 * b1];
        for p in positions {
            let s = (xe[1..b0].partition_point(|&e| e <= p[0])).min(b0 - 1);
            let k = y_edges[s].partition_point(|&e| e <= p[1]);
            c[s * b1 + k] += 1;
        }
        (c, b0 * b1)
    };
    let expected = n as f64 / total_bins as f64;
    if expected < 5.0 {
        return Err(Error::TooFewSamples { expected });
    }
    let chi2: f64 = counts.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let dof = total_bins - 1;
    let p_value = stats::chi2_sf(chi2, dof);
    Ok(EquivarianceStat { time, n, bins: total_bins, chi2, dof, p_value, alpha: DEFAULT_ALPHA, passed: p_value >= DEFAULT_ALPHA })
}

/// Equivariance of an ensemble against `|Psi(t)|^2` at the field's time.
/// Absorbing layers are excluded from both sides of the comparison.
pub fn equivariance_check(ensemble: &Ensemble, psi_t: &ComplexField, bins: usize) -> Result<EquivarianceStat> {
    let positions = ensemble.positions_at(psi_t.time());
    field_equivariance(&positions, psi_t, bins)
}

pub fn field_equivariance(lab_positions: &[Position], psi_t: &ComplexField, bins: usize) -> Result<EquivarianceStat> {
    let rho = psi_t.density_values();
    density_equivariance(lab_positions, &psi_t.lab_grid(), rho, bins, psi_t.time())
}

pub fn density_equivariance(lab_positions: &[Position], lab_grid: &Grid, mut rho: Vec<f64>, bins: usize, time: f64) -> Result<EquivarianceStat> {
    for (i, p) in lab_grid.nodes().enumerate() {
        if lab_grid.in_absorbing_layer(p) {
            rho[i] = 0.0;
        }
    }
    let inside: Vec<Position> = lab_positions.iter().copied().filter(|p| lab_grid.contains(*p) && !lab_grid.in_absorbing_layer(*p)).collect();
    equivariance_test(&inside, lab_grid, &rho, bins, time)
}
