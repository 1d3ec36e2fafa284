//! Classical Hamilton-Jacobi actions as min-plus objects.
//!
//! The action after time `t` is the min-plus convolution of the initial
//! action with the least-action kernel `S_cl(x, t; x0)`. The kernel is known
//! in closed form for free, uniform-force and harmonic potentials; arbitrary
//! tabulated potentials are handled by following characteristics.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, require_positive, Error, Result};
use crate::grid::{Grid, Position};
use crate::par;
use crate::tropical::MinPlus;

fn dot(a: Position, b: Position) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm2(a: Position) -> f64 {
    dot(a, a)
}

fn axpy(a: f64, x: Position, y: Position) -> Position {
    [a * x[0] + y[0], a * x[1] + y[1]]
}

/// Potential on a grid, interpolated bilinearly. Gradients are taken by
/// central differences at the nodes and interpolated the same way.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedPotential {
    grid: Grid,
    values: Vec<f64>,
    gradient: Vec<Position>,
}

impl TabulatedPotential {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("potential", "tabulated values must be finite"));
        }
        let gradient = nodal_gradient(&grid, &values);
        Ok(Self { grid, values, gradient })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn clamp(&self, x: Position) -> Position {
        let mut p = x;
        for (k, a) in self.grid.axes().iter().enumerate() {
            p[k] = p[k].clamp(a.min, a.max);
        }
        p
    }

    fn value(&self, x: Position) -> f64 {
        self.grid.interpolate(&self.values, self.clamp(x)).unwrap_or(0.0)
    }

    fn gradient(&self, x: Position) -> Position {
        let s = match self.grid.stencil(self.clamp(x)) {
            Some(s) => s,
            None => return [0.0, 0.0],
        };
        let mut g = [0.0, 0.0];
        for (i, w) in s.iter() {
            g = axpy(w, self.gradient[i], g);
        }
        g
    }
}

fn nodal_gradient(grid: &Grid, values: &[f64]) -> Vec<Position> {
    let [n0, n1] = grid.shape();
    let h = grid.spacing();
    let diff = |get: &dyn Fn(usize) -> f64, i: usize, n: usize, h: f64| -> f64 {
        if i == 0 {
            (get(1) - get(0)) / h
        } else if i == n - 1 {
            (get(n - 1) - get(n - 2)) / h
        } else {
            (get(i + 1) - get(i - 1)) / (2.0 * h)
        }
    };
    (0..grid.len())
        .map(|idx| {
            let (i0, i1) = grid.unravel(idx);
            let g0 = diff(&|k| values[grid.index(k, i1)], i0, n0, h[0]);
            let g1 = if grid.dims() == 2 { diff(&|k| values[grid.index(i0, k)], i1, n1, h[1]) } else { 0.0 };
            [g0, g1]
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    Free,
    /// `V(x) = -K . x`, a constant force `K`.
    Linear { force: Position },
    /// `V(x) = m omega^2 |x|^2 / 2`.
    Harmonic { omega: f64 },
    Tabulated(TabulatedPotential),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec {
    kind: Potential,
    mass: f64,
}

impl PotentialSpec {
    pub fn new(kind: Potential, mass: f64) -> Result<Self> {
        require_positive("mass", mass)?;
        match &kind {
            Potential::Linear { force } if !(force[0].is_finite() && force[1].is_finite()) => {
                return Err(invalid("force", "must be finite"));
            }
            Potential::Harmonic { omega } => require_positive("omega", *omega)?,
            _ => {}
        }
        Ok(Self { kind, mass })
    }

    pub fn free(mass: f64) -> Result<Self> {
        Self::new(Potential::Free, mass)
    }

    pub fn linear(mass: f64, force: Position) -> Result<Self> {
        Self::new(Potential::Linear { force }, mass)
    }

    pub fn harmonic(mass: f64, omega: f64) -> Result<Self> {
        Self::new(Potential::Harmonic { omega }, mass)
    }

    pub fn tabulated(mass: f64, grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::new(Potential::Tabulated(TabulatedPotential::new(grid, values)?), mass)
    }

    pub fn kind(&self) -> &Potential {
        &self.kind
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Uniform force for free and linear potentials.
    fn uniform_force(&self) -> Option<Position> {
        match self.kind {
            Potential::Free => Some([0.0, 0.0]),
            Potential::Linear { force } => Some(force),
            _ => None,
        }
    }

    pub fn value(&self, x: Position) -> f64 {
        match &self.kind {
            Potential::Free => 0.0,
            Potential::Linear { force } => -dot(*force, x),
            Potential::Harmonic { omega } => 0.5 * self.mass * omega * omega * norm2(x),
            Potential::Tabulated(t) => t.value(x),
        }
    }

    /// The force `-grad V`.
    pub fn force(&self, x: Position) -> Position {
        match &self.kind {
            Potential::Free => [0.0, 0.0],
            Potential::Linear { force } => *force,
            Potential::Harmonic { omega } => {
                let k = -self.mass * omega * omega;
                [k * x[0], k * x[1]]
            }
            Potential::Tabulated(t) => {
                let g = t.gradient(x);
                [-g[0], -g[1]]
            }
        }
    }

    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        grid.nodes().map(|p| self.value(p)).collect()
    }

    /// Exact Newtonian flow `(x(t), v(t))`, where available.
    pub fn flow(&self, x0: Position, v0: Position, t: f64) -> Option<(Position, Position)> {
        let m = self.mass;
        if let Some(k) = self.uniform_force() {
            let x = [x0[0] + v0[0] * t + 0.5 * k[0] * t * t / m, x0[1] + v0[1] * t + 0.5 * k[1] * t * t / m];
            let v = [v0[0] + k[0] * t / m, v0[1] + k[1] * t / m];
            return Some((x, v));
        }
        match self.kind {
            Potential::Harmonic { omega: w } => {
                let (s, c) = (w * t).sin_cos();
                let x = [x0[0] * c + v0[0] * s / w, x0[1] * c + v0[1] * s / w];
                let v = [-x0[0] * w * s + v0[0] * c, -x0[1] * w * s + v0[1] * c];
                Some((x, v))
            }
            _ => None,
        }
    }

    /// `int_0^t L dt` along the exact flow from `(x0, v0)`.
    pub fn path_action(&self, x0: Position, v0: Position, t: f64) -> Option<f64> {
        let m = self.mass;
        if let Some(k) = self.uniform_force() {
            let kinetic = 0.5 * m * (norm2(v0) * t + dot(v0, k) * t * t / m + norm2(k) * t * t * t / (3.0 * m * m));
            let potential = dot(k, x0) * t + 0.5 * dot(k, v0) * t * t + norm2(k) * t * t * t / (6.0 * m);
            return Some(kinetic + potential);
        }
        match self.kind {
            Potential::Harmonic { omega: w } => {
                let s2 = (2.0 * w * t).sin();
                let c2 = (2.0 * w * t).cos();
                let a = (norm2(v0) - w * w * norm2(x0)) * s2 / (2.0 * w) - dot(x0, v0) * (1.0 - c2);
                Some(0.5 * m * a)
            }
            _ => None,
        }
    }

    fn harmonic_guard(&self, t: f64) -> Result<()> {
        if let Potential::Harmonic { omega } = self.kind {
            let wt = omega * t;
            if !(wt > 0.0 && wt < core::f64::consts::PI) {
                return Err(Error::FocalPoint { omega_t: wt });
            }
        }
        Ok(())
    }
}

/// Least action `S_cl(x, t; x0)` over paths from `x0` at time 0 to `x` at
/// time `t`.
pub fn euler_lagrange_action(potential: &PotentialSpec, x: Position, t: f64, x0: Position) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::DegenerateTime);
    }
    let m = potential.mass;
    if let Some(k) = potential.uniform_force() {
        let d = [x[0] - x0[0], x[1] - x0[1]];
        let s = [x[0] + x0[0], x[1] + x0[1]];
        return Ok(m * norm2(d) / (2.0 * t) + 0.5 * dot(k, s) * t - norm2(k) * t * t * t / (24.0 * m));
    }
    match potential.kind {
        Potential::Harmonic { omega: w } => {
            potential.harmonic_guard(t)?;
            let (s, c) = (w * t).sin_cos();
            Ok(m * w / (2.0 * s) * ((norm2(x) + norm2(x0)) * c - 2.0 * dot(x, x0)))
        }
        Potential::Tabulated(_) => Err(Error::Unsupported("no closed-form action for tabulated potentials")),
        _ => unreachable!(),
    }
}

/// Closed-form description of an action field, when it has one.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ActionLaw {
    /// Initial action `m v . x`, evolved for `elapsed` under the companion
    /// potential.
    LinearPhase { velocity: Position, elapsed: f64 },
}

/// Sampled action. Entries are finite or `+inf` (the min-plus zero).
#[derive(Clone, Debug, PartialEq)]
pub struct ActionField {
    grid: Grid,
    values: Vec<f64>,
    time: f64,
    law: Option<ActionLaw>,
}

impl ActionField {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|&v| !MinPlus(v).is_element()) {
            return Err(invalid("action", "values must be finite or +inf"));
        }
        if values.iter().all(|v| v.is_infinite()) {
            return Err(Error::AllInfinite);
        }
        Ok(Self { grid, values, time, law: None })
    }

    pub fn from_fn(grid: Grid, time: f64, f: impl Fn(Position) -> f64) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        Self::new(grid, values, time)
    }

    /// `S0(x) = m v . x`.
    pub fn linear(grid: Grid, mass: f64, velocity: Position) -> Result<Self> {
        let mut s = Self::from_fn(grid, 0.0, |x| mass * dot(velocity, x))?;
        s.law = Some(ActionLaw::LinearPhase { velocity, elapsed: 0.0 });
        Ok(s)
    }

    /// Min-plus delta: 0 at the node nearest `x0`, `+inf` elsewhere.
    pub fn delta_min(grid: Grid, x0: Position) -> Result<Self> {
        let mut values = vec![f64::INFINITY; grid.len()];
        values[grid.nearest(x0)] = 0.0;
        Self::new(grid, values, 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn law(&self) -> Option<ActionLaw> {
        self.law
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    grid: Grid,
    values: Vec<f64>,
    time: f64,
}

impl DensityField {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(invalid("density", "values must be finite and non-negative"));
        }
        Ok(Self { grid, values, time })
    }

    pub fn from_fn(grid: Grid, time: f64, f: impl Fn(Position) -> f64) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        Self::new(grid, values, time)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn mass(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn normalized(&self) -> Self {
        let m = self.mass();
        let values = self.values.iter().map(|v| v / m).collect();
        Self { values, ..self.clone() }
    }

    /// Mean coordinate along `axis` of the normalized density.
    pub fn mean(&self, axis: usize) -> f64 {
        let w = self.grid.quadrature_weights();
        let m = self.mass();
        self.grid.nodes().zip(&self.values).zip(&w).map(|((p, v), w)| p[axis] * v * w).sum::<f64>() / m
    }

    pub fn variance(&self, axis: usize) -> f64 {
        let mu = self.mean(axis);
        let w = self.grid.quadrature_weights();
        let m = self.mass();
        self.grid
            .nodes()
            .zip(&self.values)
            .zip(&w)
            .map(|((p, v), w)| (p[axis] - mu) * (p[axis] - mu) * v * w)
            .sum::<f64>()
            / m
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Density and action of a classical ensemble moving in one potential.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalEnsembleState {
    pub rho: DensityField,
    pub action: ActionField,
    pub potential: PotentialSpec,
}

impl ClassicalEnsembleState {
    pub fn new(rho: DensityField, action: ActionField, potential: PotentialSpec) -> Result<Self> {
        rho.grid.ensure_matches(&action.grid)?;
        if (rho.time - action.time).abs() > 1e-12 * (1.0 + rho.time.abs()) {
            return Err(invalid("time", "density and action are at different times"));
        }
        Ok(Self { rho, action, potential })
    }

    pub fn time(&self) -> f64 {
        self.rho.time
    }
}

/// Exhaustive min over every finite grid node:
/// `S(x, t0 + t) = min_x0 [S0(x0) + S_cl(x, t; x0)]`.
pub fn hopf_lax_field(s0: &ActionField, potential: &PotentialSpec, t: f64) -> Result<ActionField> {
    if !(t > 0.0) {
        return Err(Error::DegenerateTime);
    }
    if matches!(potential.kind, Potential::Tabulated(_)) {
        return Err(Error::Unsupported("Hopf-Lax needs a closed-form kernel"));
    }
    potential.harmonic_guard(t)?;
    let grid = &s0.grid;
    let sources: Vec<(Position, f64)> = grid
        .nodes()
        .zip(&s0.values)
        .filter(|(_, v)| v.is_finite())
        .map(|(p, &v)| (p, v))
        .collect();
    let values = par::map_range(grid.len(), |i| {
        let x = grid.node(i);
        sources
            .iter()
            .map(|&(x0, v)| MinPlus(v) * MinPlus(euler_lagrange_action(potential, x, t, x0).unwrap_or(f64::INFINITY)))
            .sum::<MinPlus>()
            .0
    });
    ActionField::new(grid.clone(), values, s0.time + t)
}

/// Same min as [`hopf_lax_field`] in `O(N)` amortized for a convex initial
/// action on a line, walking the argmin monotonically.
pub fn hopf_lax_field_monotone(s0: &ActionField, potential: &PotentialSpec, t: f64) -> Result<ActionField> {
    if !(t > 0.0) {
        return Err(Error::DegenerateTime);
    }
    if s0.grid.dims() != 1 {
        return Err(Error::Unsupported("monotone Hopf-Lax is one-dimensional"));
    }
    match potential.kind {
        Potential::Free | Potential::Linear { .. } => {}
        Potential::Harmonic { omega } if omega * t < 0.5 * core::f64::consts::PI => {}
        _ => return Err(Error::Unsupported("monotone Hopf-Lax needs a kernel convex in x0")),
    }
    let grid = &s0.grid;
    let src: Vec<(f64, f64)> =
        grid.nodes().zip(&s0.values).filter(|(_, v)| v.is_finite()).map(|(p, &v)| (p[0], v)).collect();
    let convex = src.windows(3).all(|w| {
        let curv = (w[2].1 - w[1].1) / (w[2].0 - w[1].0) - (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        curv >= -1e-9 * (1.0 + w[1].1.abs())
    });
    if !convex {
        return Err(Error::Unsupported("monotone Hopf-Lax needs a convex initial action"));
    }
    let cost = |x: f64, j: usize| -> f64 { src[j].1 + euler_lagrange_action(potential, [x, 0.0], t, [src[j].0, 0.0]).unwrap() };
    let mut j = 0;
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.node(i)[0];
        let mut best = cost(x, j);
        while j + 1 < src.len() {
            let next = cost(x, j + 1);
            if next > best {
                break;
            }
            best = next;
            j += 1;
        }
        values.push(best);
    }
    ActionField::new(grid.clone(), values, s0.time + t)
}

/// Action of a linear-phase initial condition `m v . x` after `elapsed`.
pub fn linear_phase_action(potential: &PotentialSpec, velocity: Position, x: Position, elapsed: f64) -> Result<f64> {
    let m = potential.mass;
    if elapsed == 0.0 {
        return Ok(m * dot(velocity, x));
    }
    if let Some(k) = potential.uniform_force() {
        let t = elapsed;
        return Ok(m * dot(velocity, x) - 0.5 * m * norm2(velocity) * t + t * dot(k, x)
            - 0.5 * t * t * dot(k, velocity)
            - norm2(k) * t * t * t / (6.0 * m));
    }
    match potential.kind {
        Potential::Harmonic { omega: w } => {
            if !(w * elapsed < 0.5 * core::f64::consts::PI) {
                return Err(Error::CausticDetected { time: elapsed });
            }
            let (s, c) = (w * elapsed).sin_cos();
            let x0 = [(x[0] - velocity[0] * s / w) / c, (x[1] - velocity[1] * s / w) / c];
            Ok(m * dot(velocity, x0) + euler_lagrange_action(potential, x, elapsed, x0)?)
        }
        _ => Err(Error::Unsupported("no closed-form action for tabulated potentials")),
    }
}

/// Closed-form evolution for a linear-phase field (free, linear or harmonic
/// potentials).
pub fn hopf_lax_linear(s0: &ActionField, potential: &PotentialSpec, t: f64) -> Result<ActionField> {
    if !(t > 0.0) {
        return Err(Error::DegenerateTime);
    }
    let Some(ActionLaw::LinearPhase { velocity, elapsed }) = s0.law else {
        return Err(Error::Unsupported("initial action has no closed form"));
    };
    let total = elapsed + t;
    let values = s0
        .grid
        .nodes()
        .map(|x| linear_phase_action(potential, velocity, x, total))
        .collect::<Result<Vec<f64>>>()?;
    let mut s = ActionField::new(s0.grid.clone(), values, s0.time + t)?;
    s.law = Some(ActionLaw::LinearPhase { velocity, elapsed: total });
    Ok(s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField {
    pub grid: Grid,
    pub time: f64,
    pub values: Vec<Position>,
    /// False where the difference stencil touched a `+inf` action.
    pub valid: Vec<bool>,
}

impl VelocityField {
    pub fn at(&self, p: Position) -> Option<Position> {
        let s = self.grid.stencil(p)?;
        let mut v = [0.0, 0.0];
        for (i, w) in s.iter() {
            if w > 0.0 && !self.valid[i] {
                return None;
            }
            v = axpy(w, self.values[i], v);
        }
        Some(v)
    }
}

/// `v = grad S / m` by central differences, second-order one-sided at the
/// edges.
pub fn velocity_field(s: &ActionField, mass: f64) -> Result<VelocityField> {
    require_positive("mass", mass)?;
    let grid = &s.grid;
    let [n0, n1] = grid.shape();
    let h = grid.spacing();
    let vals = &s.values;
    let deriv = |get: &dyn Fn(usize) -> f64, i: usize, n: usize, h: f64| -> f64 {
        if i == 0 {
            (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * get(n - 1) - 4.0 * get(n - 2) + get(n - 3)) / (2.0 * h)
        } else {
            (get(i + 1) - get(i - 1)) / (2.0 * h)
        }
    };
    let mut values = Vec::with_capacity(grid.len());
    let mut valid = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let (i0, i1) = grid.unravel(idx);
        let g0 = deriv(&|k| vals[grid.index(k, i1)], i0, n0, h[0]);
        let g1 = if grid.dims() == 2 { deriv(&|k| vals[grid.index(i0, k)], i1, n1, h[1]) } else { 0.0 };
        let ok = g0.is_finite() && g1.is_finite();
        valid.push(ok);
        values.push(if ok { [g0 / mass, g1 / mass] } else { [0.0, 0.0] });
    }
    Ok(VelocityField { grid: grid.clone(), time: s.time, values, valid })
}

struct Carrier {
    node: usize,
    mass: f64,
    x: Position,
    v: Position,
    action: f64,
}

/// Pushes the density along Newtonian characteristics and evolves the action
/// alongside.
///
/// Characteristics start at every node carrying mass, with `v = grad S0 / m`,
/// and are deposited back with cloud-in-cell weights at the end. `steps` is
/// the number of substeps used for caustic checks and, where no closed form
/// exists, for the integration itself.
pub fn classical_transport(initial: &ClassicalEnsembleState, t: f64, steps: usize) -> Result<ClassicalEnsembleState> {
    if !(t >= 0.0) {
        return Err(invalid("t", "must be non-negative"));
    }
    if steps == 0 {
        return Err(invalid("steps", "must be at least 1"));
    }
    if t == 0.0 {
        return Ok(initial.clone());
    }
    let potential = &initial.potential;
    let grid = initial.rho.grid.clone();
    let tabulated = matches!(potential.kind, Potential::Tabulated(_));
    if tabulated && grid.dims() != 1 {
        return Err(Error::Unsupported("tabulated transport is one-dimensional"));
    }
    let v0 = velocity_field(&initial.action, potential.mass)?;
    let w = grid.quadrature_weights();
    let mut carriers = Vec::new();
    for i in 0..grid.len() {
        let m = initial.rho.values[i] * w[i];
        if m > 0.0 {
            if !v0.valid[i] {
                return Err(Error::VelocityUndefined);
            }
            carriers.push(Carrier { node: i, mass: m, x: grid.node(i), v: v0.values[i], action: initial.action.values[i] });
        }
    }
    let starts: Vec<(Position, Position)> = carriers.iter().map(|c| (c.x, c.v)).collect();
    let dt = t / steps as f64;
    for step in 1..=steps {
        if tabulated {
            verlet_step(&mut carriers, potential, dt);
        } else {
            let tau = dt * step as f64;
            for (c, &(x0, vi)) in carriers.iter_mut().zip(&starts) {
                let (x, v) = potential.flow(x0, vi, tau).unwrap();
                c.x = x;
                c.v = v;
            }
        }
        check_caustic(&grid, &carriers, dt * step as f64)?;
    }

    let rho = deposit(&grid, &carriers, &w, initial.time() + t)?;
    let action = if tabulated {
        interpolate_carried_action(&grid, &carriers, initial.time() + t)?
    } else if initial.action.law.is_some() {
        hopf_lax_linear(&initial.action, potential, t)?
    } else {
        let mut s = initial.action.clone();
        for _ in 0..steps {
            s = hopf_lax_field(&s, potential, dt)?;
        }
        s
    };
    ClassicalEnsembleState::new(rho, action, potential.clone())
}

fn verlet_step(carriers: &mut [Carrier], potential: &PotentialSpec, dt: f64) {
    let m = potential.mass;
    for c in carriers.iter_mut() {
        let l0 = 0.5 * m * norm2(c.v) - potential.value(c.x);
        let f0 = potential.force(c.x);
        let vh = axpy(0.5 * dt / m, f0, c.v);
        c.x = axpy(dt, vh, c.x);
        let f1 = potential.force(c.x);
        c.v = axpy(0.5 * dt / m, f1, vh);
        let l1 = 0.5 * m * norm2(c.v) - potential.value(c.x);
        c.action += 0.5 * dt * (l0 + l1);
    }
}

fn check_caustic(grid: &Grid, carriers: &[Carrier], time: f64) -> Result<()> {
    if grid.dims() == 1 {
        if carriers.windows(2).any(|w| w[1].x[0] <= w[0].x[0]) {
            return Err(Error::CausticDetected { time });
        }
        return Ok(());
    }
    // A lattice cell whose mapped image flips orientation has been folded.
    let mut at = vec![usize::MAX; grid.len()];
    for (k, c) in carriers.iter().enumerate() {
        at[c.node] = k;
    }
    let [n0, n1] = grid.shape();
    for i0 in 0..n0 - 1 {
        for i1 in 0..n1 - 1 {
            let (a, b, c) = (at[grid.index(i0, i1)], at[grid.index(i0 + 1, i1)], at[grid.index(i0, i1 + 1)]);
            if a == usize::MAX || b == usize::MAX || c == usize::MAX {
                continue;
            }
            let (pa, pb, pc) = (carriers[a].x, carriers[b].x, carriers[c].x);
            let cross = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]);
            if cross <= 0.0 {
                return Err(Error::CausticDetected { time });
            }
        }
    }
    Ok(())
}

fn deposit(grid: &Grid, carriers: &[Carrier], w: &[f64], time: f64) -> Result<DensityField> {
    let mut mass = vec![0.0; grid.len()];
    for c in carriers {
        if let Some(s) = grid.stencil(c.x) {
            for (i, wt) in s.iter() {
                mass[i] += c.mass * wt;
            }
        }
    }
    let values = mass.iter().zip(w).map(|(m, w)| m / w).collect();
    DensityField::new(grid.clone(), values, time)
}

fn interpolate_carried_action(grid: &Grid, carriers: &[Carrier], time: f64) -> Result<ActionField> {
    let values: Vec<f64> = grid
        .nodes()
        .map(|p| {
            let x = p[0];
            let k = carriers.partition_point(|c| c.x[0] <= x);
            if k == 0 || k == carriers.len() {
                // Exactly on the last characteristic still counts.
                return match carriers.last() {
                    Some(c) if k == carriers.len() && c.x[0] == x => c.action,
                    _ => f64::INFINITY,
                };
            }
            let (a, b) = (&carriers[k - 1], &carriers[k]);
            let f = (x - a.x[0]) / (b.x[0] - a.x[0]);
            a.action * (1.0 - f) + b.action * f
        })
        .collect();
    ActionField::new(grid.clone(), values, time).map_err(|e| match e {
        Error::AllInfinite => invalid("transport", format!("no characteristic covers the grid at t = {time}")),
        e => e,
    })
}

/// Classical density of a Gaussian ensemble with uniform initial velocity in
/// a uniform force field: the shape is rigid and the center is ballistic.
pub fn gaussian_linear_density(
    dims: usize,
    sigma0: f64,
    center: Position,
    velocity: Position,
    force: Position,
    mass: f64,
    x: Position,
    t: f64,
) -> f64 {
    let c = [
        center[0] + velocity[0] * t + 0.5 * force[0] * t * t / mass,
        center[1] + velocity[1] * t + 0.5 * force[1] * t * t / mass,
    ];
    let d2 = (0..dims).map(|k| (x[k] - c[k]) * (x[k] - c[k])).sum::<f64>();
    (2.0 * core::f64::consts::PI * sigma0 * sigma0).powf(-0.5 * dims as f64) * (-d2 / (2.0 * sigma0 * sigma0)).exp()
}

/// Min-plus scalar product `inf_x f(x) + g(x)`.
pub fn minplus_inner(f: &ActionField, g: &ActionField) -> Result<f64> {
    f.grid.ensure_matches(&g.grid)?;
    Ok(crate::tropical::inner(&f.values, &g.values))
}
