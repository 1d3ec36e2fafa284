//! Complex wave functions, spectral Schrodinger propagation, closed-form
//! packets and the Madelung split `Psi = sqrt(rho) exp(i S / hbar)`.
//!
//! A field may be stored relative to a moving frame: the lab wave function is
//! `exp(i (A + m u . y) / hbar) phi(y)` with `y = x - c(t)`, where the frame
//! `(c, u, A)` follows the classical center and its action. In free, linear
//! and harmonic potentials the envelope `phi` obeys a Schrodinger equation
//! with the quadratic remainder of the potential only, so grids there need to
//! resolve the envelope and not the carrier wavelength. This is what keeps
//! small-hbar runs affordable.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::classical_hj::{ActionField, DensityField, Potential, PotentialSpec};
use crate::error::{invalid, require_positive, Error, Result};
use crate::fft::FftNd;
use crate::grid::{Grid, Position};
use crate::stats::normal_cdf;

/// Relative density below which phases are not trusted.
pub const NODE_FLOOR: f64 = 1e-12;

/// Largest tolerated mass outside the grid for a freshly prepared packet.
pub const CLIP_TOLERANCE: f64 = 1e-8;

fn dot(a: Position, b: Position) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MovingFrame {
    pub center: Position,
    pub velocity: Position,
    /// Action accumulated along the center, including the initial `m u . c`.
    pub action: f64,
}

impl MovingFrame {
    /// Frame carrying the initial phase `m u . x` of a packet centered at `c`.
    pub fn launched(center: Position, velocity: Position, mass: f64) -> Self {
        Self { center, velocity, action: mass * dot(velocity, center) }
    }

    pub fn advanced(&self, potential: &PotentialSpec, dt: f64) -> Result<Self> {
        let (center, velocity) = potential
            .flow(self.center, self.velocity, dt)
            .ok_or(Error::Unsupported("moving frames need a closed-form classical flow"))?;
        let action = self.action + potential.path_action(self.center, self.velocity, dt).unwrap();
        Ok(Self { center, velocity, action })
    }

    /// Lab action carried by the frame at envelope coordinate `y`.
    pub fn action_at(&self, y: Position, mass: f64) -> f64 {
        self.action + mass * dot(self.velocity, y)
    }
}

/// Potential felt by the envelope in a moving frame.
pub fn envelope_potential(potential: &PotentialSpec, grid: &Grid) -> Result<Vec<f64>> {
    match potential.kind() {
        Potential::Free | Potential::Linear { .. } => Ok(grid.zeros()),
        Potential::Harmonic { .. } => Ok(potential.sample(grid)),
        Potential::Tabulated(_) => Err(Error::Unsupported("moving frames need a closed-form classical flow")),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    amps: Vec<Complex64>,
    time: f64,
    hbar: f64,
    mass: f64,
    frame: Option<MovingFrame>,
}

impl ComplexField {
    pub fn new(grid: Grid, amps: Vec<Complex64>, time: f64, hbar: f64, mass: f64) -> Result<Self> {
        require_positive("hbar", hbar)?;
        require_positive("mass", mass)?;
        if amps.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if amps.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(invalid("amplitudes", "must be finite"));
        }
        Ok(Self { grid, amps, time, hbar, mass, frame: None })
    }

    pub fn with_frame(mut self, frame: MovingFrame) -> Self {
        self.frame = Some(frame);
        self
    }

    /// Grid of the stored amplitudes (envelope coordinates in a frame).
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Grid in lab coordinates at the current time.
    pub fn lab_grid(&self) -> Grid {
        match &self.frame {
            Some(f) => self.grid.translated(f.center),
            None => self.grid.clone(),
        }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
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

    pub fn frame(&self) -> Option<&MovingFrame> {
        self.frame.as_ref()
    }

    /// Lab offset of the stored grid: the frame center, or zero.
    pub fn origin(&self) -> Position {
        self.frame.map_or([0.0, 0.0], |f| f.center)
    }

    pub fn density_values(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid.integrate(&self.density_values())
    }

    pub fn normalize(&mut self) {
        let s = 1.0 / self.norm_sqr().sqrt();
        for z in &mut self.amps {
            *z *= s;
        }
    }

    /// `|Psi|^2` on the lab grid.
    pub fn density(&self) -> DensityField {
        DensityField::new(self.lab_grid(), self.density_values(), self.time).expect("density of a finite field")
    }

    /// Lab-frame amplitudes. The frame phase is reduced modulo `2 pi` before
    /// use, so this is only as accurate as `A / hbar` is representable.
    pub fn lab_amplitudes(&self) -> Vec<Complex64> {
        match &self.frame {
            None => self.amps.clone(),
            Some(f) => self
                .grid
                .nodes()
                .zip(&self.amps)
                .map(|(y, z)| z * Complex64::from_polar(1.0, reduce_phase(f.action_at(y, self.mass) / self.hbar)))
                .collect(),
        }
    }

    /// Same field with the frame folded into the amplitudes.
    pub fn to_lab(&self) -> Self {
        Self { grid: self.lab_grid(), amps: self.lab_amplitudes(), frame: None, ..self.clone() }
    }

    /// Trapezoid L2 distance between two fields stored on the same grid.
    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        self.grid.ensure_matches(&other.grid)?;
        let d: Vec<f64> = self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm_sqr()).collect();
        Ok(self.grid.integrate(&d).sqrt())
    }

    /// Probability current `(hbar/m) Im(conj(Psi) grad Psi)` in envelope
    /// coordinates, together with `|Psi|^2`. A frame adds `rho * u` to the
    /// lab current.
    pub fn current(&self, fft: &FftNd) -> (Vec<f64>, Vec<Position>) {
        let grad = spectral_gradient(&self.grid, &self.amps, fft);
        let k = self.hbar / self.mass;
        let rho = self.density_values();
        let j = (0..self.grid.len())
            .map(|i| {
                let c = self.amps[i].conj();
                let j0 = k * (c * grad[0][i]).im;
                let j1 = if self.grid.dims() == 2 { k * (c * grad[1][i]).im } else { 0.0 };
                [j0, j1]
            })
            .collect();
        (rho, j)
    }
}

fn reduce_phase(p: f64) -> f64 {
    p - 2.0 * PI * (p / (2.0 * PI)).round()
}

/// Spectral derivative along each axis. The Nyquist mode is dropped so the
/// derivative of a real signal stays real.
pub fn spectral_gradient(grid: &Grid, amps: &[Complex64], fft: &FftNd) -> Vec<Vec<Complex64>> {
    let [n0, n1] = grid.shape();
    let mut spec = amps.to_vec();
    fft.forward(&mut spec);
    let mut out = Vec::with_capacity(grid.dims());
    for axis in 0..grid.dims() {
        let ax = grid.axis(axis);
        let mut k = ax.wavenumbers();
        if ax.n % 2 == 0 {
            k[ax.n / 2] = 0.0;
        }
        let mut d = spec.clone();
        for i0 in 0..n0 {
            for i1 in 0..n1 {
                let kk = if axis == 0 { k[i0] } else { k[i1] };
                d[i0 * n1 + i1] *= Complex64::new(0.0, kk);
            }
        }
        fft.inverse(&mut d);
        out.push(d);
    }
    out
}

/// Isotropic Gaussian packet with initial action `m v0 . x`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianPacketSpec {
    pub dims: usize,
    pub sigma0: f64,
    pub center: Position,
    pub velocity: Position,
}

impl GaussianPacketSpec {
    pub fn validate(&self) -> Result<()> {
        require_positive("sigma0", self.sigma0)?;
        if !(self.dims == 1 || self.dims == 2) {
            return Err(invalid("dims", "must be 1 or 2"));
        }
        Ok(())
    }

    /// `rho0(x)`.
    pub fn density(&self, x: Position) -> f64 {
        gaussian_density(self.dims, self.sigma0, self.center, x)
    }
}

pub fn gaussian_density(dims: usize, sigma: f64, center: Position, x: Position) -> f64 {
    let d2: f64 = (0..dims).map(|k| (x[k] - center[k]) * (x[k] - center[k])).sum();
    (2.0 * PI * sigma * sigma).powf(-0.5 * dims as f64) * (-d2 / (2.0 * sigma * sigma)).exp()
}

/// Mass of an axis-aligned Gaussian lying outside `grid`.
pub fn gaussian_tail_outside(grid: &Grid, sigma: Position, center: Position) -> f64 {
    let inside: f64 = grid
        .axes()
        .iter()
        .enumerate()
        .map(|(k, a)| normal_cdf((a.max - center[k]) / sigma[k]) - normal_cdf((a.min - center[k]) / sigma[k]))
        .product();
    // The upper tail alone is the better-conditioned quantity when inside ~ 1.
    let outside: f64 = grid
        .axes()
        .iter()
        .enumerate()
        .map(|(k, a)| normal_cdf((a.min - center[k]) / sigma[k]) + normal_cdf(-(a.max - center[k]) / sigma[k]))
        .sum();
    outside.min(1.0 - inside).max(0.0)
}

fn check_dims(spec: &GaussianPacketSpec, grid: &Grid) -> Result<()> {
    spec.validate()?;
    if spec.dims != grid.dims() {
        return Err(invalid("dims", "packet and grid dimensions differ"));
    }
    Ok(())
}

/// `Psi0 = sqrt(rho0) exp(i m v0 . x / hbar)` on a lab grid, normalized.
pub fn init_packet(spec: &GaussianPacketSpec, grid: &Grid, hbar: f64, mass: f64) -> Result<ComplexField> {
    check_dims(spec, grid)?;
    let tail = gaussian_tail_outside(grid, [spec.sigma0; 2], spec.center);
    if tail > CLIP_TOLERANCE {
        return Err(Error::PacketClipped { tail_mass: tail });
    }
    let amps = grid
        .nodes()
        .map(|x| Complex64::from_polar(spec.density(x).sqrt(), mass * dot(spec.velocity, x) / hbar))
        .collect();
    let mut f = ComplexField::new(grid.clone(), amps, 0.0, hbar, mass)?;
    f.normalize();
    Ok(f)
}

/// The same packet stored as a real envelope on `envelope_grid` (coordinates
/// relative to the packet center) in a frame launched with it.
pub fn init_packet_in_frame(
    spec: &GaussianPacketSpec,
    envelope_grid: &Grid,
    hbar: f64,
    mass: f64,
) -> Result<ComplexField> {
    check_dims(spec, envelope_grid)?;
    let tail = gaussian_tail_outside(envelope_grid, [spec.sigma0; 2], [0.0, 0.0]);
    if tail > CLIP_TOLERANCE {
        return Err(Error::PacketClipped { tail_mass: tail });
    }
    let amps = envelope_grid
        .nodes()
        .map(|y| Complex64::new(gaussian_density(spec.dims, spec.sigma0, [0.0, 0.0], y).sqrt(), 0.0))
        .collect();
    let mut f = ComplexField::new(envelope_grid.clone(), amps, 0.0, hbar, mass)?
        .with_frame(MovingFrame::launched(spec.center, spec.velocity, mass));
    f.normalize();
    Ok(f)
}

/// Strang-split kinetic step shared by scalar, spinor and two-body solvers.
#[derive(Clone, Debug)]
pub struct KineticStep {
    shape: [usize; 2],
    fft: FftNd,
    kinetic: Vec<Complex64>,
    mask: Option<Vec<f64>>,
}

impl KineticStep {
    pub fn new(grid: &Grid, hbar: f64, mass: f64, dt: f64) -> Self {
        let [n0, n1] = grid.shape();
        let k0 = grid.axis(0).wavenumbers();
        let k1 = if grid.dims() == 2 { grid.axis(1).wavenumbers() } else { vec![0.0] };
        let mut kinetic = Vec::with_capacity(grid.len());
        for a in &k0 {
            for b in &k1 {
                let e = hbar * (a * a + b * b) / (2.0 * mass);
                kinetic.push(Complex64::from_polar(1.0, -e * dt));
            }
        }
        Self { shape: [n0, n1], fft: FftNd::new([n0, n1]), kinetic, mask: grid.absorbing_mask() }
    }

    pub fn fft(&self) -> &FftNd {
        &self.fft
    }

    /// Full kinetic step `exp(-i T dt / hbar)`.
    pub fn apply(&self, amps: &mut [Complex64]) {
        self.fft.forward(amps);
        for (z, k) in amps.iter_mut().zip(&self.kinetic) {
            *z *= k;
        }
        self.fft.inverse(amps);
    }

    pub fn absorb(&self, amps: &mut [Complex64]) {
        if let Some(m) = &self.mask {
            for (z, m) in amps.iter_mut().zip(m) {
                *z *= m;
            }
        }
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }
}

/// Half-step potential phases `exp(-i V dt / 2 hbar)`, after checking the
/// phase budget per step.
pub fn half_potential_phases(values: &[f64], hbar: f64, dt: f64) -> Result<Vec<Complex64>> {
    let vmax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let phase = dt * vmax / hbar;
    if phase > 0.5 {
        return Err(Error::StabilityWarning { phase_per_step: phase });
    }
    Ok(values.iter().map(|v| Complex64::from_polar(1.0, -0.5 * v * dt / hbar)).collect())
}

/// Reusable Strang stepper for one scalar field.
#[derive(Clone, Debug)]
pub struct Propagator {
    kinetic: KineticStep,
    half: Vec<Complex64>,
    potential: PotentialSpec,
    dt: f64,
    framed: bool,
}

impl Propagator {
    pub fn new(field: &ComplexField, potential: &PotentialSpec, dt: f64) -> Result<Self> {
        require_positive("dt", dt)?;
        if (potential.mass() - field.mass).abs() > 1e-12 * field.mass {
            return Err(invalid("mass", "potential and field masses differ"));
        }
        let framed = field.frame.is_some();
        let v = if framed { envelope_potential(potential, &field.grid)? } else { potential.sample(&field.grid) };
        let half = half_potential_phases(&v, field.hbar, dt)?;
        Ok(Self {
            kinetic: KineticStep::new(&field.grid, field.hbar, field.mass, dt),
            half,
            potential: potential.clone(),
            dt,
            framed,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn fft(&self) -> &FftNd {
        self.kinetic.fft()
    }

    pub fn step(&self, field: &mut ComplexField) -> Result<()> {
        debug_assert_eq!(field.frame.is_some(), self.framed);
        for (z, p) in field.amps.iter_mut().zip(&self.half) {
            *z *= p;
        }
        self.kinetic.apply(&mut field.amps);
        for (z, p) in field.amps.iter_mut().zip(&self.half) {
            *z *= p;
        }
        self.kinetic.absorb(&mut field.amps);
        if let Some(f) = &field.frame {
            field.frame = Some(f.advanced(&self.potential, self.dt)?);
        }
        field.time += self.dt;
        Ok(())
    }
}

/// `steps` Strang steps of size `dt`. Fields carrying a frame are advanced
/// in it.
pub fn split_step_propagate(psi: &ComplexField, potential: &PotentialSpec, dt: f64, steps: usize) -> Result<ComplexField> {
    if steps == 0 {
        return Ok(psi.clone());
    }
    let prop = Propagator::new(psi, potential, dt)?;
    let mut out = psi.clone();
    for _ in 0..steps {
        prop.step(&mut out)?;
    }
    Ok(out)
}

/// Width of the freely spreading packet, `sigma0 sqrt(1 + (hbar t / 2 m sigma0^2)^2)`.
pub fn spreading_width(sigma0: f64, hbar: f64, mass: f64, t: f64) -> f64 {
    let a = hbar * t / (2.0 * mass * sigma0 * sigma0);
    sigma0 * (1.0 + a * a).sqrt()
}

/// Closed-form `(rho, S)` of a Gaussian packet in the uniform force `force`.
pub fn analytic_gaussian_linear(
    spec: &GaussianPacketSpec,
    force: Position,
    hbar: f64,
    mass: f64,
    x: Position,
    t: f64,
) -> (f64, f64) {
    let (m, s0, v, k) = (mass, spec.sigma0, spec.velocity, force);
    let d = spec.dims as f64;
    let c = [
        spec.center[0] + v[0] * t + 0.5 * k[0] * t * t / m,
        spec.center[1] + v[1] * t + 0.5 * k[1] * t * t / m,
    ];
    let sh = spreading_width(s0, hbar, m, t);
    let r2: f64 = (0..spec.dims).map(|i| (x[i] - c[i]) * (x[i] - c[i])).sum();
    let rho = (2.0 * PI * sh * sh).powf(-0.5 * d) * (-r2 / (2.0 * sh * sh)).exp();
    let s = -0.5 * d * hbar * (hbar * t / (2.0 * m * s0 * s0)).atan() - 0.5 * m * dot(v, v) * t + m * dot(v, x)
        + dot(k, x) * t
        - 0.5 * dot(k, v) * t * t
        - dot(k, k) * t * t * t / (6.0 * m)
        + r2 * hbar * hbar * t / (8.0 * m * s0 * s0 * sh * sh);
    (rho, s)
}

/// Classical orbit `(xi, xi')` of the oscillator.
pub fn harmonic_orbit(omega: f64, x0: Position, v0: Position, t: f64) -> (Position, Position) {
    let (s, c) = (omega * t).sin_cos();
    (
        [x0[0] * c + v0[0] * s / omega, x0[1] * c + v0[1] * s / omega],
        [-x0[0] * omega * s + v0[0] * c, -x0[1] * omega * s + v0[1] * c],
    )
}

/// `g(t) = -int_0^t L ds` along the orbit, the gauge that makes
/// `m xi' . x + g - d hbar omega t / 2` solve the oscillator equation.
fn coherent_g(omega: f64, mass: f64, x0: Position, v0: Position, t: f64) -> f64 {
    let s2 = (2.0 * omega * t).sin();
    let c2 = (2.0 * omega * t).cos();
    let int_l = 0.5 * mass * ((dot(v0, v0) - omega * omega * dot(x0, x0)) * s2 / (2.0 * omega) - dot(x0, v0) * (1.0 - c2));
    -int_l
}

/// Coherent state of the isotropic oscillator on a lab grid:
/// width `sqrt(hbar / 2 m omega)`, center on the classical orbit and phase
/// `m xi' . x + g(t) - d hbar omega t / 2`.
pub fn coherent_state(
    omega: f64,
    x0: Position,
    v0: Position,
    hbar: f64,
    mass: f64,
    t: f64,
    grid: &Grid,
) -> Result<ComplexField> {
    require_positive("omega", omega)?;
    let d = grid.dims() as f64;
    let sigma = (hbar / (2.0 * mass * omega)).sqrt();
    let (xi, vi) = harmonic_orbit(omega, x0, v0, t);
    let g = coherent_g(omega, mass, x0, v0, t);
    let amps = grid
        .nodes()
        .map(|x| {
            let s = mass * dot(vi, x) + g - 0.5 * d * hbar * omega * t;
            Complex64::from_polar(gaussian_density(grid.dims(), sigma, xi, x).sqrt(), s / hbar)
        })
        .collect();
    ComplexField::new(grid.clone(), amps, t, hbar, mass)
}

/// Coherent state stored in the frame riding the classical orbit. The
/// envelope is the oscillator ground state with phase `-d omega t / 2`.
pub fn coherent_state_in_frame(
    omega: f64,
    x0: Position,
    v0: Position,
    hbar: f64,
    mass: f64,
    t: f64,
    envelope_grid: &Grid,
) -> Result<ComplexField> {
    require_positive("omega", omega)?;
    let d = envelope_grid.dims() as f64;
    let sigma = (hbar / (2.0 * mass * omega)).sqrt();
    let tail = gaussian_tail_outside(envelope_grid, [sigma; 2], [0.0, 0.0]);
    if tail > CLIP_TOLERANCE {
        return Err(Error::PacketClipped { tail_mass: tail });
    }
    let (xi, vi) = harmonic_orbit(omega, x0, v0, t);
    let g = coherent_g(omega, mass, x0, v0, t);
    let phase = -0.5 * d * omega * t;
    let amps = envelope_grid
        .nodes()
        .map(|y| Complex64::from_polar(gaussian_density(envelope_grid.dims(), sigma, [0.0, 0.0], y).sqrt(), phase))
        .collect();
    let frame = MovingFrame { center: xi, velocity: vi, action: g + mass * dot(vi, xi) };
    Ok(ComplexField::new(envelope_grid.clone(), amps, t, hbar, mass)?.with_frame(frame))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MadelungPair {
    pub rho: DensityField,
    /// `+inf` on masked nodes.
    pub action: ActionField,
    pub hbar: f64,
    /// Connected unmasked regions; each has its own additive gauge.
    pub regions: usize,
    /// Region label per node, 0 for masked nodes.
    pub region_of: Vec<u32>,
}

impl MadelungPair {
    pub fn require_connected(&self) -> Result<&Self> {
        if self.regions > 1 {
            Err(Error::DisconnectedSupport { regions: self.regions })
        } else {
            Ok(self)
        }
    }

    pub fn masked(&self, i: usize) -> bool {
        self.region_of[i] == 0
    }
}

/// `rho = |Psi|^2` and `S = hbar * phase`, the phase unwrapped by flood fill
/// from the densest node. Nodes with `rho < NODE_FLOOR * max rho` are masked.
pub fn madelung_decompose(psi: &ComplexField) -> MadelungPair {
    let grid = &psi.grid;
    let rho = psi.density_values();
    let rmax = rho.iter().cloned().fold(0.0, f64::max);
    let floor = NODE_FLOOR * rmax;
    let n = grid.len();
    let mut region_of = vec![0u32; n];
    let mut phase = vec![f64::INFINITY; n];
    let mut regions = 0u32;
    let mut order: Vec<usize> = (0..n).filter(|&i| rho[i] >= floor && rho[i] > 0.0).collect();
    order.sort_by(|&a, &b| rho[b].total_cmp(&rho[a]).then(a.cmp(&b)));
    let [n0, n1] = grid.shape();
    let mut queue = VecDeque::new();
    for &seed in &order {
        if region_of[seed] != 0 {
            continue;
        }
        regions += 1;
        region_of[seed] = regions;
        phase[seed] = psi.amps[seed].arg();
        queue.push_back(seed);
        while let Some(i) = queue.pop_front() {
            let (i0, i1) = grid.unravel(i);
            let mut nb = [usize::MAX; 4];
            if i0 > 0 {
                nb[0] = grid.index(i0 - 1, i1);
            }
            if i0 + 1 < n0 {
                nb[1] = grid.index(i0 + 1, i1);
            }
            if grid.dims() == 2 {
                if i1 > 0 {
                    nb[2] = grid.index(i0, i1 - 1);
                }
                if i1 + 1 < n1 {
                    nb[3] = grid.index(i0, i1 + 1);
                }
            }
            for &j in nb.iter().filter(|&&j| j != usize::MAX) {
                if region_of[j] == 0 && rho[j] >= floor && rho[j] > 0.0 {
                    region_of[j] = regions;
                    phase[j] = phase[i] + (psi.amps[j] * psi.amps[i].conj()).arg();
                    queue.push_back(j);
                }
            }
        }
    }
    let values = grid
        .nodes()
        .zip(&phase)
        .map(|(y, &p)| {
            if p.is_finite() {
                let base = psi.frame.map_or(0.0, |f| f.action_at(y, psi.mass));
                base + psi.hbar * p
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let lab = psi.lab_grid();
    MadelungPair {
        rho: DensityField::new(lab.clone(), rho, psi.time).expect("finite density"),
        action: ActionField::new(lab, values, psi.time).expect("densest node is unmasked"),
        hbar: psi.hbar,
        regions: regions as usize,
        region_of,
    }
}
