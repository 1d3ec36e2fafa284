use pilotwave_core::semiclassical::*;
use pilotwave_core::wavefields::{init_packet, GaussianPacketSpec};
use pilotwave_core::{Axis, Boundary, Error, Grid};

fn gaussian(divisors: &[f64]) -> SweepSpec {
    SweepSpec { experiment: SweepExperiment::GaussianLinear(GaussianLinearSweep::default()), hbar_divisors: divisors.to_vec() }
}

#[test]
fn gaussian_linear_ladder() {
    let spec = gaussian(&DEFAULT_DIVISORS);
    let run = run_sweep(&spec).unwrap();
    let g = GaussianLinearSweep::default();
    for d in &run.report.divisors {
        // Center and gauge against the closed-form packet.
        assert!(d.center_error.unwrap() < 1e-6, "{d:?}");
        let (gauge, excess) = gaussian_gauge_and_width(1, 1.0, d.hbar, 1.0, g.duration);
        assert!((d.action_gauge.unwrap() - gauge).abs() < 1e-8, "{} vs {gauge}", d.action_gauge.unwrap());
        assert!((d.width_error.unwrap() - excess).abs() < 1e-8);
    }
    let r = &run.report.rates;
    assert!((1.6..2.5).contains(&r.width_error.unwrap()), "{r:?}");
    assert!((1.6..2.5).contains(&r.density_l1.unwrap()), "{r:?}");
    assert!(run.report.non_increasing(|d| Some(d.median_deviation), 1e-12));
    assert!(run.report.non_increasing(|d| d.density_l1, 0.0));
    assert!(run.report.non_increasing(|d| d.action_linf, 0.0));
    assert!(run.report.divisors.last().unwrap().action_linf.unwrap() < 1e-7);
}

#[test]
fn gauge_closed_form() {
    // -hbar/2 atan(hbar t / (2 m sigma0^2)) for a free-type Gaussian.
    let (g, _) = gaussian_gauge_and_width(1, 1.0, 0.2, 1.0, 3.0);
    assert!((g + 0.1 * (0.3f64).atan()).abs() < 1e-14);
    let (g2, _) = gaussian_gauge_and_width(2, 1.0, 0.2, 1.0, 3.0);
    assert!((g2 - 2.0 * g).abs() < 1e-14);
}

#[test]
fn coherent_state_spread_scales_as_sqrt_hbar() {
    let spec = SweepSpec::new(SweepExperiment::CoherentOscillator(CoherentSweep::default()));
    let run = run_sweep(&spec).unwrap();
    let slope = run.report.rates.interquartile.unwrap();
    assert!((slope - 0.5).abs() < 0.05, "slope {slope}");
    for d in &run.report.divisors {
        assert!(d.width_error.unwrap() < 1e-8, "{d:?}");
    }
}

#[test]
fn hbar_scaled_width_is_refused() {
    let g = GaussianLinearSweep { sigma0: InitialWidth::HbarScaled(1.0), ..Default::default() };
    let spec = SweepSpec::new(SweepExperiment::GaussianLinear(g));
    assert!(matches!(run_sweep(&spec), Err(Error::HbarDependentPreparation)));
}

#[test]
fn divisors_must_ascend() {
    assert!(gaussian(&[1.0, 10.0, 10.0]).validate().is_err());
    assert!(gaussian(&[10.0, 1.0]).validate().is_err());
    assert!(gaussian(&[0.0, 1.0]).validate().is_err());
    assert!(gaussian(&[]).validate().is_err());
    assert!(gaussian(&[1.0, 3.0]).validate().is_ok());
}

#[test]
fn unresolved_carrier_is_refused() {
    let grid = Grid::line(Axis::centered(16.0, 256).unwrap(), Boundary::Periodic).unwrap();
    let slow = GaussianPacketSpec { dims: 1, sigma0: 1.0, center: [0.0, 0.0], velocity: [1.0, 0.0] };
    let fast = GaussianPacketSpec { velocity: [3.0, 0.0], ..slow };
    let psi = init_packet(&slow, &grid, 0.1, 1.0).unwrap();
    require_resolved(&psi).unwrap();
    // lambda = 2 pi 0.1 / 3 = 0.21 < 4 h = 0.5
    let psi = init_packet(&fast, &grid, 0.1, 1.0).unwrap();
    assert!(matches!(require_resolved(&psi), Err(Error::GridTooCoarse { .. })));
}
