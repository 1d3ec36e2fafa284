use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use pilotwave_core::eprb::*;
use pilotwave_core::spin_dynamics::{MagnetConfig, SpinOrientation};
use pilotwave_core::{Axis, Complex64, Error};

fn inner(a: &[Complex64; 4], b: &[Complex64; 4]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

#[test]
fn antisymmetrized_product_is_the_singlet() {
    let mut r = pilotwave_core::rng::stream(3, 0);
    for _ in 0..200 {
        let (theta, phi) = pilotwave_core::rng::sphere_angles(&mut r);
        let s = antisymmetrized_spins(SpinOrientation { theta, phi });
        assert!((inner(&s, &singlet_spins()).norm() - 1.0).abs() < 1e-12, "theta {theta} phi {phi}");
    }
}

#[test]
fn pair_amplitude_is_antisymmetric() {
    let spec = default_spec().unwrap();
    let pair = build_singlet(&spec, SpinOrientation { theta: 1.1, phi: 0.4 }).unwrap();
    for (ia, ib) in [(250, 260), (256, 240), (255, 255)] {
        for sa in 0..2 {
            for sb in 0..2 {
                let d = pair.amplitude(ia, sa, ib, sb) + pair.amplitude(ib, sb, ia, sa);
                assert!(d.norm() < 1e-14);
            }
        }
    }
}

#[test]
fn conditional_angles() {
    assert!((conditional_angle(1, 0.0) - PI).abs() < 1e-12);
    assert!(conditional_angle(-1, 0.0).abs() < 1e-12);
    assert!((conditional_angle(1, FRAC_PI_4) - 3.0 * FRAC_PI_4).abs() < 1e-12);
    assert!((conditional_angle(-1, -FRAC_PI_4) - FRAC_PI_4).abs() < 1e-12);
}

#[test]
fn measuring_a_reorients_b() {
    let spec = default_spec().unwrap();
    let device = spec.device().unwrap();
    let pair = build_singlet(&spec, SpinOrientation { theta: 0.0, phi: 0.0 }).unwrap();
    let (a, next) = measure_a(&pair, &device, 1).unwrap();
    assert_eq!(a, 1);
    assert!(!next.entangled);
    let (p, m) = next.spinor_b.component_norms();
    assert!(p < 1e-14 && (m - 1.0).abs() < 1e-9);
    assert!(measure_a(&next, &device, 1).is_err());
    // Aligned analyzers: B must come out opposite.
    assert_eq!(measure_b(&next, 0.0, &device, 1).unwrap(), -1);
    assert_eq!(measure_b(&next, PI, &device, 1).unwrap(), 1);
}

#[test]
fn correlations_follow_minus_cos() {
    let spec = default_spec().unwrap();
    let n = 4000;
    let deltas = [0.0, FRAC_PI_4, FRAC_PI_2, PI];
    for order in [Order::AFirst, Order::BFirst] {
        let recs = run_pairs(&spec, &deltas, n, 42, order).unwrap();
        for &d in &deltas {
            let at = records_at(&recs, d);
            let (e, _) = correlation(&at).unwrap();
            let band = 3.0 / (n as f64).sqrt();
            assert!((e + d.cos()).abs() < band, "{order:?} delta {d}: E = {e}");
            let up_a = at.iter().filter(|r| r.outcome_a > 0).count() as f64 / n as f64;
            let up_b = at.iter().filter(|r| r.outcome_b > 0).count() as f64 / n as f64;
            assert!((up_a - 0.5).abs() < band && (up_b - 0.5).abs() < band, "{up_a} {up_b}");
        }
        assert_eq!(correlation(&records_at(&recs, 0.0)).unwrap().0, -1.0);
        assert_eq!(correlation(&records_at(&recs, PI)).unwrap().0, 1.0);
    }
}

#[test]
fn runs_are_reproducible() {
    let spec = default_spec().unwrap();
    let a = run_pairs(&spec, &[0.3], 300, 9, Order::AFirst).unwrap();
    assert_eq!(a, run_pairs(&spec, &[0.3], 300, 9, Order::AFirst).unwrap());
}

#[test]
fn empty_records_are_an_error() {
    assert!(matches!(correlation(&[]), Err(Error::EmptyRecords)));
}

#[test]
fn chsh_of_the_quantum_correlation() {
    let settings = [0.0, FRAC_PI_2, FRAC_PI_4, 3.0 * FRAC_PI_4];
    let offsets = chsh_offsets(settings[0], settings[1], settings[2], settings[3]);
    let e = offsets.map(|d| -d.cos());
    assert!((chsh(e) - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    assert!((chsh_error([0.01; 4]) - 0.02).abs() < 1e-15);
}

fn two_body_stages() -> (MagnetConfig, [TwoBodyStage; 2]) {
    let magnet = MagnetConfig { gradient: 2.0, moment: 1.0, length: 1.0, speed: 1.0, flight_time: 3.0 };
    let stages = [
        TwoBodyStage { a_magnet: true, b_magnet: true, duration: 1.0, dt: 0.004 },
        TwoBodyStage { a_magnet: false, b_magnet: false, duration: 3.0, dt: 0.05 },
    ];
    (magnet, stages)
}

#[test]
fn two_body_solution_matches_singlet_correlation() {
    let (magnet, stages) = two_body_stages();
    let axis = Axis::centered(24.0, 128).unwrap();
    for delta in [0.0, FRAC_PI_4, FRAC_PI_2] {
        let r = two_body(axis, 1.0, 1.0, 1.0, &magnet, delta, &stages).unwrap();
        // Spot overlap at z = 0 is the only deviation from -cos(delta).
        assert!((r.correlation + delta.cos()).abs() < 0.01, "delta {delta}: {}", r.correlation);
    }
}

#[test]
fn b_marginal_ignores_a_magnet() {
    let (magnet, mut stages) = two_body_stages();
    stages[0].b_magnet = false;
    let axis = Axis::centered(24.0, 128).unwrap();
    let r = two_body(axis, 1.0, 1.0, 1.0, &magnet, 0.7, &stages).unwrap();
    let free = free_marginal(axis, 1.0, 1.0, 1.0, 4.0, 0.05).unwrap();
    let h = axis.spacing();
    let l1: f64 = r.marginal_b.iter().zip(&free).map(|(a, b)| (a - b).abs()).sum::<f64>() * h;
    assert!(l1 < 1e-10, "L1 = {l1}");
}
