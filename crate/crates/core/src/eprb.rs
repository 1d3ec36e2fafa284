//! EPR-B pairs: a spin singlet with Gaussian spatial extension, measured
//! sequentially by two Stern-Gerlach devices through conditional
//! single-particle spinors.
//!
//! Analyzer A points along Oz. Analyzer B points along Oz', the image of Oz
//! under a rotation by `delta` about Oy.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, require_positive, Error, Result};
use crate::grid::{Axis, Boundary, Grid};
use crate::pilot::PiecewiseLinear;
use crate::rng;
use crate::spin_dynamics::{
    envelope, half_angle_weights, init_spinor, MagnetConfig, SpinOrientation, SpinParticle, SpinorField,
    SternGerlachDevice, SternGerlachSetup,
};
use crate::wavefields::{half_potential_phases, KineticStep};

#[derive(Clone, Debug, PartialEq)]
pub struct SingletSpec {
    pub sigma0: f64,
    /// Shared single-particle device; must be a z line grid.
    pub setup: SternGerlachSetup,
}

impl SingletSpec {
    pub fn validate(&self) -> Result<()> {
        require_positive("sigma0", self.sigma0)?;
        self.setup.validate()?;
        if self.setup.grid.dims() != 1 {
            return Err(Error::InvalidGrid("EPR-B devices use a z line grid".into()));
        }
        Ok(())
    }

    pub fn device(&self) -> Result<SternGerlachDevice> {
        self.validate()?;
        let mut setup = self.setup.clone();
        setup.sigma0 = self.sigma0;
        SternGerlachDevice::new(setup)
    }
}

/// Spinor `(|+>, |->)` amplitudes of the direction `(theta, phi)`.
pub fn spin_state(theta: f64, phi: f64) -> [Complex64; 2] {
    let (c2, s2) = half_angle_weights(theta);
    [Complex64::from_polar(c2.sqrt(), 0.5 * phi), Complex64::from_polar(s2.sqrt(), -0.5 * phi)]
}

/// Orientation of B given A's: `theta_B = pi - theta_A`, `phi_B = phi_A - pi`.
pub fn opposite(o: SpinOrientation) -> SpinOrientation {
    SpinOrientation { theta: PI - o.theta, phi: o.phi - PI }
}

/// Spin part of `(|n>_A |-n>_B - |-n>_A |n>_B) / sqrt 2` in the order
/// `++, +-, -+, --`.
pub fn antisymmetrized_spins(hidden: SpinOrientation) -> [Complex64; 4] {
    let b = opposite(hidden);
    let a = spin_state(hidden.theta, hidden.phi);
    let b = spin_state(b.theta, b.phi);
    let r = core::f64::consts::FRAC_1_SQRT_2;
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for (sa, _) in a.iter().enumerate() {
        for sb in 0..2 {
            out[2 * sa + sb] = (a[sa] * b[sb] - b[sa] * a[sb]) * r;
        }
    }
    out
}

/// `(|+-> - |-+>) / sqrt 2`.
pub fn singlet_spins() -> [Complex64; 4] {
    let r = core::f64::consts::FRAC_1_SQRT_2;
    [Complex64::new(0.0, 0.0), Complex64::new(r, 0.0), Complex64::new(-r, 0.0), Complex64::new(0.0, 0.0)]
}

#[derive(Clone, Debug)]
pub struct PairState {
    pub spinor_a: SpinorField,
    pub spinor_b: SpinorField,
    pub entangled: bool,
    pub hidden: SpinOrientation,
    /// Set once A has been measured.
    pub outcome_a: Option<i8>,
}

impl PairState {
    /// Antisymmetrized two-body amplitude at node `ia` for A and `ib` for
    /// B with spin indices `0 = +`, `1 = -`.
    pub fn amplitude(&self, ia: usize, sa: usize, ib: usize, sb: usize) -> Complex64 {
        let comp = |f: &SpinorField, i: usize, s: usize| if s == 0 { f.plus()[i] } else { f.minus()[i] };
        (comp(&self.spinor_a, ia, sa) * comp(&self.spinor_b, ib, sb)
            - comp(&self.spinor_b, ia, sa) * comp(&self.spinor_a, ib, sb))
            * core::f64::consts::FRAC_1_SQRT_2
    }
}

/// Builds the pair for one hidden orientation of A, checking that the spin
/// part of the antisymmetrized product is the singlet up to a phase.
pub fn build_singlet(spec: &SingletSpec, hidden: SpinOrientation) -> Result<PairState> {
    spec.validate()?;
    let s = &spec.setup;
    let b = opposite(hidden);
    let spinor_a = init_spinor(hidden.theta, hidden.phi, spec.sigma0, &s.grid, s.hbar, s.mass)?;
    let spinor_b = init_spinor(b.theta.clamp(0.0, PI), b.phi, spec.sigma0, &s.grid, s.hbar, s.mass)?;
    let overlap: Complex64 = antisymmetrized_spins(hidden).iter().zip(singlet_spins()).map(|(a, b)| a * b.conj()).sum();
    debug_assert!((overlap.norm() - 1.0).abs() < 1e-12, "antisymmetrized pair is not the singlet");
    Ok(PairState { spinor_a, spinor_b, entangled: true, hidden, outcome_a: None })
}

/// Conditional polar angle of B relative to Oz' after A gave `outcome_a`:
/// `pi - delta` for up, `delta` for down.
pub fn conditional_angle(outcome_a: i8, delta: f64) -> f64 {
    let c = if outcome_a > 0 { -delta.cos() } else { delta.cos() };
    c.clamp(-1.0, 1.0).acos()
}

fn line_cdf(device: &SternGerlachDevice) -> PiecewiseLinear {
    PiecewiseLinear::new(device.setup().grid.axis(0).coords(), device.initial_density())
}

fn draw_position(cdf: &PiecewiseLinear, r: &mut rng::StreamRng) -> f64 {
    cdf.inverse(rng::uniform(r) * cdf.total())
}

/// Runs A's device on its hidden spinor. B's spinor is then re-oriented
/// opposite to A's measured direction; its envelope is left untouched.
pub fn measure_a(pair: &PairState, device: &SternGerlachDevice, seed: u64) -> Result<(i8, PairState)> {
    if !pair.entangled {
        return Err(invalid("pair", "is no longer entangled"));
    }
    let mut r = rng::stream(seed, 0);
    let z = draw_position(&line_cdf(device), &mut r);
    let run = device.run(&[SpinParticle { theta: pair.hidden.theta, start: [z, 0.0] }], &Default::default())?;
    let outcome = run.outcomes[0];
    let mut next = pair.clone();
    let theta_b = if outcome > 0 { PI } else { 0.0 };
    let (c2, s2) = half_angle_weights(theta_b);
    let b = &pair.spinor_b;
    let f: Vec<Complex64> = b.plus().iter().zip(b.minus()).map(|(p, m)| Complex64::new((p.norm_sqr() + m.norm_sqr()).sqrt(), 0.0)).collect();
    next.spinor_b = SpinorField::new(
        b.grid().clone(),
        f.iter().map(|z| z * c2.sqrt()).collect(),
        f.iter().map(|z| z * s2.sqrt()).collect(),
        b.time(),
        b.hbar(),
        b.mass(),
    )?;
    next.entangled = false;
    next.outcome_a = Some(outcome);
    Ok((outcome, next))
}

pub fn measure_b(pair: &PairState, delta: f64, device: &SternGerlachDevice, seed: u64) -> Result<i8> {
    let outcome_a = pair.outcome_a.ok_or(invalid("pair", "A has not been measured"))?;
    let mut r = rng::stream(seed, 1);
    let z = draw_position(&line_cdf(device), &mut r);
    let run = device.run(&[SpinParticle { theta: conditional_angle(outcome_a, delta), start: [z, 0.0] }], &Default::default())?;
    Ok(run.outcomes[0])
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasurementRecord {
    pub pair_id: usize,
    pub delta: f64,
    pub theta_hidden: f64,
    pub phi_hidden: f64,
    pub outcome_a: i8,
    pub outcome_b: i8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Order {
    #[default]
    AFirst,
    BFirst,
}

/// Hidden orientation and both start points of pair `index`.
fn draw_pair(cdf: &PiecewiseLinear, seed: u64, index: usize) -> (SpinOrientation, f64, f64) {
    let mut r = rng::stream(seed, index as u64);
    let (theta, phi) = rng::sphere_angles(&mut r);
    let za = draw_position(cdf, &mut r);
    let zb = draw_position(cdf, &mut r);
    (SpinOrientation { theta, phi }, za, zb)
}

/// `n_pairs` pairs per analyzer offset. Pair ids run consecutively over
/// the offsets and select their random streams. All first measurements
/// share one device run, as do all second measurements.
pub fn run_pairs(spec: &SingletSpec, deltas: &[f64], n_pairs: usize, seed: u64, order: Order) -> Result<Vec<MeasurementRecord>> {
    if n_pairs == 0 || deltas.is_empty() {
        return Err(invalid("n_pairs", "need at least one pair and one offset"));
    }
    let device = spec.device()?;
    let cdf = line_cdf(&device);
    let total = n_pairs * deltas.len();
    let draws: Vec<_> = (0..total).map(|i| draw_pair(&cdf, seed, i)).collect();
    let delta_of = |i: usize| deltas[i / n_pairs];

    let first: Vec<SpinParticle> = draws
        .iter()
        .enumerate()
        .map(|(i, (h, za, zb))| match order {
            Order::AFirst => SpinParticle { theta: h.theta, start: [*za, 0.0] },
            // B's hidden direction -n measured along Oz'.
            Order::BFirst => {
                let n = [h.theta.sin() * h.phi.cos(), h.theta.cos()];
                let (s, c) = delta_of(i).sin_cos();
                let cos_b = -(n[0] * s + n[1] * c);
                SpinParticle { theta: cos_b.clamp(-1.0, 1.0).acos(), start: [*zb, 0.0] }
            }
        })
        .collect();
    let out1 = device.run(&first, &Default::default())?.outcomes;
    let second: Vec<SpinParticle> = draws
        .iter()
        .enumerate()
        .map(|(i, (_, za, zb))| match order {
            Order::AFirst => SpinParticle { theta: conditional_angle(out1[i], delta_of(i)), start: [*zb, 0.0] },
            // A ends opposite to B's measured direction, which is at angle
            // delta from Oz; the relation is symmetric in A and B.
            Order::BFirst => SpinParticle { theta: conditional_angle(out1[i], delta_of(i)), start: [*za, 0.0] },
        })
        .collect();
    let out2 = device.run(&second, &Default::default())?.outcomes;
    Ok(draws
        .iter()
        .enumerate()
        .map(|(i, (h, _, _))| {
            let (a, b) = match order {
                Order::AFirst => (out1[i], out2[i]),
                Order::BFirst => (out2[i], out1[i]),
            };
            MeasurementRecord { pair_id: i, delta: delta_of(i), theta_hidden: h.theta, phi_hidden: h.phi, outcome_a: a, outcome_b: b }
        })
        .collect())
}

/// `E = mean(outcome_A outcome_B)` and its standard error.
pub fn correlation(records: &[MeasurementRecord]) -> Result<(f64, f64)> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let n = records.len() as f64;
    let e = records.iter().map(|r| (r.outcome_a * r.outcome_b) as f64).sum::<f64>() / n;
    Ok((e, ((1.0 - e * e) / n).sqrt()))
}

pub fn records_at(records: &[MeasurementRecord], delta: f64) -> Vec<MeasurementRecord> {
    records.iter().filter(|r| r.delta == delta).copied().collect()
}

/// Analyzer settings `(a, a', b, b')` giving the four offsets `b - a`,
/// `b' - a`, `b - a'`, `b' - a'`.
pub fn chsh_offsets(a: f64, a2: f64, b: f64, b2: f64) -> [f64; 4] {
    [b - a, b2 - a, b - a2, b2 - a2]
}

/// `|E(a,b) - E(a,b') + E(a',b) + E(a',b')|`.
pub fn chsh(e: [f64; 4]) -> f64 {
    (e[0] - e[1] + e[2] + e[3]).abs()
}

/// Standard error of [`chsh`] from independent per-setting errors.
pub fn chsh_error(se: [f64; 4]) -> f64 {
    se.iter().map(|s| s * s).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChshResult {
    pub settings: [f64; 4],
    pub offsets: [f64; 4],
    pub correlations: [f64; 4],
    pub errors: [f64; 4],
    pub s: f64,
    pub s_error: f64,
}

/// CHSH value for analyzer settings `(a, a', b, b')` with `n_pairs` fresh
/// pairs per offset.
pub fn chsh_experiment(spec: &SingletSpec, settings: [f64; 4], n_pairs: usize, seed: u64, order: Order) -> Result<ChshResult> {
    let [a, a2, b, b2] = settings;
    let offsets = chsh_offsets(a, a2, b, b2);
    let records = run_pairs(spec, &offsets, n_pairs, seed, order)?;
    let mut correlations = [0.0; 4];
    let mut errors = [0.0; 4];
    for k in 0..4 {
        let (e, se) = correlation(&records[k * n_pairs..(k + 1) * n_pairs])?;
        correlations[k] = e;
        errors[k] = se;
    }
    Ok(ChshResult { settings, offsets, correlations, errors, s: chsh(correlations), s_error: chsh_error(errors) })
}

/// One stage of the brute-force two-body solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoBodyStage {
    pub a_magnet: bool,
    pub b_magnet: bool,
    pub duration: f64,
    pub dt: f64,
}

#[derive(Clone, Debug)]
pub struct TwoBodyResult {
    pub grid: Grid,
    /// Components `c_{sA sB}` in the order `++, +-, -+, --`.
    pub components: [Vec<Complex64>; 4],
    /// `E` from the signs of `z_A` and `z_B`.
    pub correlation: f64,
    /// B's marginal density on the z axis.
    pub marginal_b: Vec<f64>,
}

/// Two particles on a common z axis with four spin components, starting
/// from `f(z_A) f(z_B)` times the singlet. B's spin is expressed in the
/// Oz' basis from the start, which commutes with everything before B's
/// magnet. Periodic boundaries; the axis must hold both spots.
pub fn two_body(
    axis: Axis,
    sigma0: f64,
    hbar: f64,
    mass: f64,
    magnet: &MagnetConfig,
    delta: f64,
    stages: &[TwoBodyStage],
) -> Result<TwoBodyResult> {
    magnet.validate()?;
    let line = Grid::line(axis, Boundary::Periodic)?;
    let f = envelope(&line, sigma0)?;
    let grid = Grid::plane(axis, axis, Boundary::Periodic)?;
    let n = axis.n;
    // R_y(-delta) on B's spin.
    let (s, c) = (0.5 * delta).sin_cos();
    let rot = [[c, s], [-s, c]];
    let singlet = singlet_spins();
    let mut spins = [Complex64::new(0.0, 0.0); 4];
    for sa in 0..2 {
        for sb in 0..2 {
            for k in 0..2 {
                spins[2 * sa + sb] += singlet[2 * sa + k] * rot[sb][k];
            }
        }
    }
    let mut comps: [Vec<Complex64>; 4] = core::array::from_fn(|k| {
        let mut v = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                v[i * n + j] = f[i] * f[j] * spins[k];
            }
        }
        v
    });
    let coords = axis.coords();
    let force = magnet.force();
    for st in stages {
        require_positive("duration", st.duration)?;
        let steps = (st.duration / st.dt).round().max(1.0) as usize;
        let dt = st.duration / steps as f64;
        let kin = KineticStep::new(&grid, hbar, mass, dt);
        let phases: Vec<Option<Vec<Complex64>>> = (0..4)
            .map(|k| {
                if !(st.a_magnet || st.b_magnet) {
                    return Ok(None);
                }
                let sa = if k / 2 == 0 { 1.0 } else { -1.0 };
                let sb = if k % 2 == 0 { 1.0 } else { -1.0 };
                let v: Vec<f64> = (0..n * n)
                    .map(|idx| {
                        let (za, zb) = (coords[idx / n], coords[idx % n]);
                        let mut v = 0.0;
                        if st.a_magnet {
                            v -= sa * force * za;
                        }
                        if st.b_magnet {
                            v -= sb * force * zb;
                        }
                        v
                    })
                    .collect();
                half_potential_phases(&v, hbar, dt).map(Some)
            })
            .collect::<Result<_>>()?;
        for _ in 0..steps {
            for (amps, ph) in comps.iter_mut().zip(&phases) {
                if let Some(ph) = ph {
                    amps.iter_mut().zip(ph).for_each(|(z, p)| *z *= p);
                }
                kin.apply(amps);
                if let Some(ph) = ph {
                    amps.iter_mut().zip(ph).for_each(|(z, p)| *z *= p);
                }
            }
        }
    }
    let w = line.quadrature_weights();
    let mut corr = 0.0;
    let mut marginal_b = vec![0.0; n];
    for amps in &comps {
        for i in 0..n {
            for j in 0..n {
                let r = amps[i * n + j].norm_sqr();
                let sign = coords[i].signum() * coords[j].signum();
                corr += sign * r * w[i] * w[j];
                marginal_b[j] += r * w[i];
            }
        }
    }
    Ok(TwoBodyResult { grid, components: comps, correlation: corr, marginal_b })
}

/// A lone particle with envelope `f` evolved freely on `axis`; the
/// reference for B's marginal while only A is measured.
pub fn free_marginal(axis: Axis, sigma0: f64, hbar: f64, mass: f64, duration: f64, dt: f64) -> Result<Vec<f64>> {
    let line = Grid::line(axis, Boundary::Periodic)?;
    let mut f = envelope(&line, sigma0)?;
    let steps = (duration / dt).round().max(1.0) as usize;
    let kin = KineticStep::new(&line, hbar, mass, duration / steps as f64);
    for _ in 0..steps {
        kin.apply(&mut f);
    }
    Ok(f.iter().map(|z| z.norm_sqr()).collect())
}

/// Line-grid device used for the pair experiments.
pub fn default_spec() -> Result<SingletSpec> {
    Ok(SingletSpec {
        sigma0: 1.0,
        setup: SternGerlachSetup {
            grid: Grid::line(Axis::centered(64.0, 512)?, Boundary::Absorbing { width: 1.5 })?,
            sigma0: 1.0,
            hbar: 1.0,
            mass: 1.0,
            magnet: MagnetConfig { flight_time: 4.0, ..MagnetConfig::default() },
            dt: 0.05,
            record_every: 8,
            bins: 100,
        },
    })
}
