use std::f64::consts::PI;

use pilotwave_core::classical_hj::PotentialSpec;
use pilotwave_core::fft::FftNd;
use pilotwave_core::wavefields::*;
use pilotwave_core::{Axis, Boundary, Complex64, Error, Grid};

fn line(half: f64, n: usize) -> Grid {
    Grid::line(Axis::centered(half, n).unwrap(), Boundary::Periodic).unwrap()
}

/// Node-wise comparison with the closed form: relative L_inf of rho and the
/// L_inf of S modulo its median offset on `rho > 1e-3 max`.
fn compare_closed_form(psi: &ComplexField, spec: &GaussianPacketSpec, force: f64) -> (f64, f64, f64) {
    let mad = madelung_decompose(psi);
    let lab = mad.rho.grid().clone();
    let t = psi.time();
    let exact: Vec<(f64, f64)> = lab
        .nodes()
        .map(|x| analytic_gaussian_linear(spec, [force, 0.0], psi.hbar(), psi.mass(), x, t))
        .collect();
    let rmax = exact.iter().map(|e| e.0).fold(0.0, f64::max);
    let rho_err = mad.rho.values().iter().zip(&exact).map(|(r, e)| (r - e.0).abs()).fold(0.0, f64::max) / rmax;
    let mut offsets = Vec::new();
    let mut smax = 0.0f64;
    for (i, e) in exact.iter().enumerate() {
        if e.0 > 1e-3 * rmax {
            offsets.push(mad.action.values()[i] - e.1);
            smax = smax.max(e.1.abs());
        }
    }
    offsets.sort_by(f64::total_cmp);
    let c = offsets[offsets.len() / 2];
    let s_err = offsets.iter().map(|o| (o - c).abs()).fold(0.0, f64::max);
    (rho_err, s_err, smax)
}

#[test]
fn gaussian_linear_lab_grid_matches_closed_form() {
    let spec = GaussianPacketSpec { dims: 1, sigma0: 1.0, center: [-5.0, 0.0], velocity: [1.0, 0.0] };
    let force = 0.5;
    let grid = line(20.0, 1024);
    let psi0 = init_packet(&spec, &grid, 1.0, 1.0).unwrap();
    let pot = PotentialSpec::linear(1.0, [force, 0.0]).unwrap();
    let psi = split_step_propagate(&psi0, &pot, 0.004, 1000).unwrap();
    let (rho_err, s_err, smax) = compare_closed_form(&psi, &spec, force);
    assert!(rho_err < 1e-4, "rho {rho_err}");
    assert!(s_err < 1e-4 * smax, "S {s_err} of {smax}");
}

#[test]
fn gaussian_linear_frame_matches_closed_form() {
    let spec = GaussianPacketSpec { dims: 1, sigma0: 1.0, center: [-5.0, 0.0], velocity: [3.0, 0.0] };
    let force = -1.2;
    let psi0 = init_packet_in_frame(&spec, &line(16.0, 256), 1.0, 1.0).unwrap();
    let pot = PotentialSpec::linear(1.0, [force, 0.0]).unwrap();
    let psi = split_step_propagate(&psi0, &pot, 0.004, 1000).unwrap();
    let (rho_err, s_err, smax) = compare_closed_form(&psi, &spec, force);
    assert!(rho_err < 1e-10, "rho {rho_err}");
    assert!(s_err < 1e-10 * smax, "S {s_err}");
}

#[test]
fn plane_packet_spreads_at_analytic_rate() {
    let spec = GaussianPacketSpec { dims: 2, sigma0: 0.8, center: [0.0, 0.0], velocity: [0.0, 0.0] };
    let g = Grid::plane(Axis::centered(12.0, 128).unwrap(), Axis::centered(12.0, 128).unwrap(), Boundary::Periodic).unwrap();
    let psi0 = init_packet(&spec, &g, 1.0, 1.0).unwrap();
    let psi = split_step_propagate(&psi0, &PotentialSpec::free(1.0).unwrap(), 0.01, 150).unwrap();
    let rho = psi.density();
    let want = spreading_width(0.8, 1.0, 1.0, 1.5);
    for ax in 0..2 {
        assert!((rho.variance(ax).sqrt() - want).abs() < 1e-8 * want);
    }
    assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
}

#[test]
fn absorbing_layer_removes_outgoing_mass() {
    let spec = GaussianPacketSpec { dims: 1, sigma0: 1.0, center: [0.0, 0.0], velocity: [4.0, 0.0] };
    let g = Grid::line(Axis::centered(20.0, 512).unwrap(), Boundary::Absorbing { width: 4.0 }).unwrap();
    let psi0 = init_packet(&spec, &g, 1.0, 1.0).unwrap();
    let psi = split_step_propagate(&psi0, &PotentialSpec::free(1.0).unwrap(), 0.01, 1000).unwrap();
    assert!(psi.norm_sqr() < 1e-3, "norm {}", psi.norm_sqr());
}

#[test]
fn coherent_state_reproduced_by_split_step() {
    let (omega, hbar, m) = (1.0, 1.0, 1.0);
    let g = line(10.0, 256);
    let pot = PotentialSpec::harmonic(m, omega).unwrap();
    let psi0 = coherent_state(omega, [1.5, 0.0], [0.5, 0.0], hbar, m, 0.0, &g).unwrap();
    let psi = split_step_propagate(&psi0, &pot, 1e-4, 10_000).unwrap();
    let want = coherent_state(omega, [1.5, 0.0], [0.5, 0.0], hbar, m, 1.0, &g).unwrap();
    let d = psi.l2_distance(&want).unwrap();
    assert!(d < 1e-6, "L2 {d}");
}

#[test]
fn coherent_state_in_frame_keeps_width_and_orbit() {
    let (omega, hbar, m) = (2.0f64, 0.5, 1.0);
    let sigma = (hbar / (2.0 * m * omega)).sqrt();
    let g = line(10.0 * sigma, 128);
    let pot = PotentialSpec::harmonic(m, omega).unwrap();
    let (x0, v0) = ([1.0, 0.0], [0.0, 0.0]);
    let psi0 = coherent_state_in_frame(omega, x0, v0, hbar, m, 0.0, &g).unwrap();
    let prop = Propagator::new(&psi0, &pot, 2.0 * PI / omega / 4000.0).unwrap();
    let mut psi = psi0.clone();
    for _ in 0..8000 {
        prop.step(&mut psi).unwrap();
        let rho = psi.density();
        let (xi, _) = harmonic_orbit(omega, x0, v0, psi.time());
        assert!((rho.variance(0).sqrt() - sigma).abs() < 1e-4 * sigma);
        assert!((rho.mean(0) - xi[0]).abs() < 1e-4);
    }
    // The lab field agrees with the closed form.
    let want = coherent_state(omega, x0, v0, hbar, m, psi.time(), &psi.lab_grid()).unwrap();
    let d = psi.to_lab().l2_distance(&want).unwrap();
    assert!(d < 1e-6, "L2 {d}");
}

#[test]
fn madelung_recovers_plane_wave_current() {
    let g = line(PI, 64);
    let (hbar, m) = (0.7, 1.3);
    let k = 3.0 * 2.0 * PI / (64.0 * g.spacing()[0]);
    let amps: Vec<Complex64> = g.nodes().map(|x| Complex64::from_polar(1.0, k * x[0])).collect();
    let psi = ComplexField::new(g.clone(), amps, 0.0, hbar, m).unwrap();
    let fft = FftNd::new(g.shape());
    let (rho, j) = psi.current(&fft);
    for (r, j) in rho.iter().zip(&j) {
        assert!((j[0] / r - hbar * k / m).abs() < 1e-10);
    }
    let mad = madelung_decompose(&psi);
    let s = mad.action.values();
    for w in s.windows(2) {
        assert!((w[1] - w[0] - hbar * k * g.spacing()[0]).abs() < 1e-10);
    }
}

#[test]
fn separated_packets_are_disconnected() {
    let g = line(20.0, 512);
    let amps: Vec<Complex64> = g
        .nodes()
        .map(|x| Complex64::new((-(x[0] - 8.0).powi(2)).exp() + (-(x[0] + 8.0).powi(2)).exp(), 0.0))
        .collect();
    let psi = ComplexField::new(g, amps, 0.0, 1.0, 1.0).unwrap();
    let mad = madelung_decompose(&psi);
    assert!(matches!(mad.require_connected(), Err(Error::DisconnectedSupport { regions: 2 })));
}

#[test]
fn refusals() {
    let spec = GaussianPacketSpec { dims: 1, sigma0: 1.0, center: [0.0, 0.0], velocity: [0.0, 0.0] };
    assert!(matches!(init_packet(&spec, &line(3.0, 64), 1.0, 1.0), Err(Error::PacketClipped { .. })));
    let psi = init_packet(&spec, &line(20.0, 256), 1.0, 1.0).unwrap();
    let steep = PotentialSpec::linear(1.0, [10.0, 0.0]).unwrap();
    assert!(matches!(split_step_propagate(&psi, &steep, 0.01, 1), Err(Error::StabilityWarning { .. })));
    let other = init_packet(&spec, &line(20.0, 128), 1.0, 1.0).unwrap();
    assert!(matches!(psi.l2_distance(&other), Err(Error::GridMismatch)));
    let tab = PotentialSpec::tabulated(1.0, line(20.0, 256), vec![0.0; 256]).unwrap();
    let framed = init_packet_in_frame(&spec, &line(20.0, 256), 1.0, 1.0).unwrap();
    assert!(matches!(split_step_propagate(&framed, &tab, 0.01, 1), Err(Error::Unsupported(_))));
}
