use pilotwave_core::classical_hj::PotentialSpec;
use pilotwave_core::pilot::jonsson::{jonsson_experiment, JonssonConfig};
use pilotwave_core::pilot::*;
use pilotwave_core::stats::{ks_pvalue, ks_statistic, normal_cdf};
use pilotwave_core::wavefields::*;
use pilotwave_core::{Axis, Boundary, Error, Grid};

fn line(half: f64, n: usize) -> Grid {
    Grid::line(Axis::centered(half, n).unwrap(), Boundary::Periodic).unwrap()
}

fn packet_1d(center: f64, velocity: f64) -> ComplexField {
    let spec = GaussianPacketSpec { dims: 1, sigma0: 1.0, center: [center, 0.0], velocity: [velocity, 0.0] };
    init_packet_in_frame(&spec, &line(16.0, 256), 1.0, 1.0).unwrap()
}

#[test]
fn samples_follow_the_density() {
    let psi = packet_1d(2.0, 0.0);
    let xs: Vec<f64> = sample_initial_positions(&psi, 5000, 9).unwrap().iter().map(|p| p[0]).collect();
    let d = ks_statistic(&xs, |x| normal_cdf(x - 2.0));
    assert!(ks_pvalue(d, xs.len()) > 0.01, "KS D = {d}");

    let spec = GaussianPacketSpec { dims: 2, sigma0: 1.5, center: [0.0, 0.0], velocity: [0.0, 0.0] };
    let g = Grid::plane(Axis::centered(12.0, 96).unwrap(), Axis::centered(12.0, 96).unwrap(), Boundary::Periodic).unwrap();
    let pts = sample_initial_positions(&init_packet(&spec, &g, 1.0, 1.0).unwrap(), 5000, 4).unwrap();
    for ax in 0..2 {
        let v: Vec<f64> = pts.iter().map(|p| p[ax]).collect();
        let d = ks_statistic(&v, |x| normal_cdf(x / 1.5));
        assert!(ks_pvalue(d, v.len()) > 0.01, "axis {ax}: KS D = {d}");
    }
}

#[test]
fn sampling_is_seeded() {
    let psi = packet_1d(0.0, 0.0);
    let a = sample_initial_positions(&psi, 100, 5).unwrap();
    assert_eq!(a, sample_initial_positions(&psi, 100, 5).unwrap());
    assert_ne!(a, sample_initial_positions(&psi, 100, 6).unwrap());
    // Draw i only depends on (seed, i).
    assert_eq!(&a[..10], &sample_initial_positions(&psi, 10, 5).unwrap()[..]);
}

#[test]
fn spreading_packet_trajectories_scale_with_width() {
    // For a free Gaussian, x(t) = c(t) + (x0 - c0) sigma(t) / sigma0.
    let (c0, v) = (-2.0, 1.5);
    let psi0 = packet_1d(c0, v);
    let levels: Vec<[f64; 2]> = (0..9).map(|i| [(i as f64 + 0.5) / 9.0, 0.5]).collect();
    let start = quantile_positions(&psi0, &levels);
    let mut tr = [Tracker::scalar(&start, psi0.origin(), 0.0, 10)];
    evolve_guided(&psi0, &PotentialSpec::free(1.0).unwrap(), 0.01, 300, 0, &mut tr, |_, _, _| Ok(())).unwrap();
    let [tr] = tr;
    let ens = tr.finish(Sampling::Quantile);
    for (k, traj) in ens.trajectories.iter().enumerate() {
        for (t, p) in traj.times.iter().zip(&traj.positions) {
            let c = c0 + v * t;
            let want = c + (start[k][0] - c0) * spreading_width(1.0, 1.0, 1.0, *t);
            assert!((p[0] - want).abs() < 1e-5, "traj {k} at t={t}: {} vs {want}", p[0]);
        }
    }
    // The median trajectory is the classical center.
    let mid = &ens.trajectories[4];
    assert!((mid.positions.last().unwrap()[0] - (c0 + v * 3.0)).abs() < 1e-9);
}

#[test]
fn gaussian_linear_ensemble_is_equivariant() {
    let spec = GaussianPacketSpec { dims: 1, sigma0: 1.0, center: [0.0, 0.0], velocity: [1.0, 0.0] };
    let psi0 = init_packet_in_frame(&spec, &line(20.0, 256), 1.0, 1.0).unwrap();
    let start = sample_initial_positions(&psi0, 10_000, 17).unwrap();
    let mut tr = [Tracker::scalar(&start, psi0.origin(), 0.0, 50)];
    let pot = PotentialSpec::linear(1.0, [0.5, 0.0]).unwrap();
    let mut stats = Vec::new();
    evolve_guided(&psi0, &pot, 0.01, 400, 50, &mut tr, |_, psi, trs| {
        stats.push(field_equivariance(&trs[0].active_positions(psi.origin()), psi, 50)?);
        Ok(())
    })
    .unwrap();
    assert_eq!(stats.len(), 9);
    assert!(stats.iter().all(|s| s.passed), "{stats:?}");
}

#[test]
fn wrong_density_fails_the_test() {
    let psi = packet_1d(0.0, 0.0);
    let shifted: Vec<[f64; 2]> = sample_initial_positions(&psi, 10_000, 3).unwrap().iter().map(|p| [p[0] + 0.1, 0.0]).collect();
    let s = field_equivariance(&shifted, &psi, 50).unwrap();
    assert!(!s.passed, "{s:?}");
}

#[test]
fn too_few_samples() {
    let psi = packet_1d(0.0, 0.0);
    let pts = sample_initial_positions(&psi, 100, 3).unwrap();
    assert!(matches!(field_equivariance(&pts, &psi, 50), Err(Error::TooFewSamples { .. })));
}

#[test]
fn one_dimensional_trajectories_keep_their_order() {
    // Two packets interfering; the flow on a line is order preserving.
    let g = line(20.0, 512);
    let amps = g
        .nodes()
        .map(|x| {
            let a = (-(x[0] + 4.0).powi(2) / 2.0).exp();
            let b = (-(x[0] - 4.0).powi(2) / 2.0).exp();
            pilotwave_core::Complex64::from_polar(a, 2.0 * x[0]) + pilotwave_core::Complex64::from_polar(b, -2.0 * x[0])
        })
        .collect();
    let mut psi0 = ComplexField::new(g, amps, 0.0, 1.0, 1.0).unwrap();
    psi0.normalize();
    let start = sample_initial_positions(&psi0, 300, 8).unwrap();
    let mut order: Vec<usize> = (0..start.len()).collect();
    order.sort_by(|&a, &b| start[a][0].total_cmp(&start[b][0]));
    let mut tr = [Tracker::scalar(&start, [0.0, 0.0], 0.0, 1)];
    evolve_guided(&psi0, &PotentialSpec::free(1.0).unwrap(), 0.005, 800, 0, &mut tr, |_, _, _| Ok(())).unwrap();
    let [tr] = tr;
    let end: Vec<f64> = tr.states().iter().map(|s| s.0[0]).collect();
    for w in order.windows(2) {
        assert!(end[w[0]] <= end[w[1]]);
    }
}

#[test]
fn double_slit_fringes_and_equilibrium() {
    let cfg = JonssonConfig { n_particles: 3000, bins: 50, ..JonssonConfig::default() };
    let run = jonsson_experiment(&cfg).unwrap();
    let spacing = run.fringe_spacing.expect("fringes resolved at the screen");
    assert!((spacing - run.predicted_spacing).abs() < 0.05 * run.predicted_spacing, "{spacing} vs {}", run.predicted_spacing);
    assert!(run.equivariance.iter().all(|s| s.passed));
    assert_eq!(run.bundle.trajectories.len(), 100);
    // Most of the ensemble reaches the screen.
    assert!(run.impacts.len() > 2500, "{} impacts", run.impacts.len());
}
