use core::f64::consts::PI;

use pilotwave_core::spin_dynamics::*;
use pilotwave_core::{Axis, Boundary, Error, Grid};

fn line_setup(gradient: f64) -> SternGerlachSetup {
    SternGerlachSetup {
        grid: Grid::line(Axis::centered(64.0, 512).unwrap(), Boundary::Absorbing { width: 1.5 }).unwrap(),
        sigma0: 1.0,
        hbar: 1.0,
        mass: 1.0,
        magnet: MagnetConfig { gradient, flight_time: 4.0, ..MagnetConfig::default() },
        dt: 0.05,
        record_every: 8,
        bins: 60,
    }
}

#[test]
fn initial_spinor_weights() {
    let g = Grid::line(Axis::centered(10.0, 128).unwrap(), Boundary::Periodic).unwrap();
    let psi = init_spinor(PI / 3.0, 0.7, 1.0, &g, 1.0, 1.0).unwrap();
    let (p, m) = psi.component_norms();
    assert!((p - 0.75).abs() < 1e-12 && (m - 0.25).abs() < 1e-12, "{p} {m}");
    let o = spin_orientation(&psi, [0.3, 0.0]).unwrap();
    assert!((o.theta - PI / 3.0).abs() < 1e-9);
    assert!((o.phi - 0.7).abs() < 1e-9);
    assert!(init_spinor(-0.1, 0.0, 1.0, &g, 1.0, 1.0).is_err());
}

#[test]
fn magnet_splits_the_components() {
    let s = line_setup(2.0);
    let psi0 = init_spinor(PI / 2.0, 0.0, 1.0, &s.grid, 1.0, 1.0).unwrap();
    let m = &s.magnet;
    let a = pauli_propagate(&psi0, m, Stage::InsideMagnet, 0.002, 1000).unwrap();
    let b = pauli_propagate(&a, m, Stage::FreeFlight, 0.05, 80).unwrap();
    let (p, q) = b.component_norms();
    assert!((p - 0.5).abs() < 1e-9 && (q - 0.5).abs() < 1e-9);
    let (mu, _) = b.component_spread(true);
    let (md, _) = b.component_spread(false);
    // Classical impulse: z = F/m * T * (T/2 + t_flight).
    let want = m.impulse_offset(1.0);
    assert!((mu - want).abs() < 1e-6 && (md + want).abs() < 1e-6, "{mu} {md} vs {want}");
}

#[test]
fn polar_states_give_one_outcome() {
    let device = SternGerlachDevice::new(line_setup(2.0)).unwrap();
    let starts = device.sample_starts(500, 2).unwrap();
    for (theta, sign) in [(0.0, 1), (PI, -1)] {
        let ps: Vec<SpinParticle> = starts.iter().map(|&p| SpinParticle { theta, start: p }).collect();
        let run = device.run(&ps, &RunOptions::default()).unwrap();
        assert!(run.outcomes.iter().all(|&o| o == sign), "theta = {theta}");
    }
}

#[test]
fn outcome_fractions_follow_born_weights() {
    let setup = line_setup(2.0);
    let n = 10_000;
    for theta in [PI / 3.0, PI / 2.0, 2.0 * PI / 3.0] {
        let out = stern_gerlach_run(&setup, theta, 0.0, n, 11).unwrap();
        let se = (out.born_plus * (1.0 - out.born_plus) / n as f64).sqrt();
        assert!((out.fraction_plus - out.born_plus).abs() < 3.0 * se, "{} vs {}", out.fraction_plus, out.born_plus);
        assert!(out.separation_sigma > 4.0);
        assert!(out.equivariance.iter().all(|s| s.passed));
    }
}

#[test]
fn upper_atoms_go_up() {
    // On a line the flow keeps its order: the top cos^2(theta/2) fraction of
    // the initial packet ends in the upper spot.
    let setup = line_setup(2.0);
    let out = stern_gerlach_run(&setup, PI / 2.0, 0.0, 2000, 5).unwrap();
    let mut pairs: Vec<(f64, i8)> = out.initial_z.iter().zip(&out.impacts).map(|(z, i)| (*z, i.sign)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let changes = pairs.windows(2).filter(|w| w[0].1 != w[1].1).count();
    assert_eq!(changes, 1);
    assert_eq!(pairs[0].1, -1);
}

#[test]
fn spin_aligns_with_the_spot() {
    let out = stern_gerlach_run(&line_setup(2.0), PI / 3.0, 0.0, 1000, 1).unwrap();
    let last = out.orientation.iter().map(|o| o.t).fold(0.0, f64::max);
    let finals: Vec<_> = out.orientation.iter().filter(|o| o.t == last).collect();
    assert_eq!(finals.len(), 10);
    for o in finals {
        let want = if o.z > 0.0 { 0.0 } else { PI };
        assert!((o.theta - want).abs() < 1e-6, "{o:?}");
    }
}

#[test]
fn weak_magnet_is_refused() {
    let r = stern_gerlach_run(&line_setup(0.05), PI / 2.0, 0.0, 2000, 1);
    assert!(matches!(r, Err(Error::UnresolvedSpots { .. })), "{r:?}");
}

#[test]
fn stage_times_must_fit_the_step() {
    let mut s = line_setup(2.0);
    s.dt = 0.3;
    assert!(s.validate().is_err());
}
