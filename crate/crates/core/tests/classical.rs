use std::f64::consts::PI;

use pilotwave_core::classical_hj::*;
use pilotwave_core::{Axis, Boundary, Error, Grid};

fn line(half: f64, n: usize) -> Grid {
    Grid::line(Axis::centered(half, n).unwrap(), Boundary::Periodic).unwrap()
}

/// Minimum of the discretized action with `steps` intervals and fixed ends,
/// solved as the tridiagonal stationarity system.
fn discrete_action(m: f64, omega: f64, x0: f64, x1: f64, t: f64, steps: usize) -> f64 {
    let tau = t / steps as f64;
    let n = steps - 1;
    // d/dx_k: m (2 x_k - x_{k-1} - x_{k+1}) / tau - tau m w^2 x_k = 0
    let diag = 2.0 * m / tau - tau * m * omega * omega;
    let off = -m / tau;
    let mut rhs = vec![0.0; n];
    rhs[0] -= off * x0;
    rhs[n - 1] -= off * x1;
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / diag;
    d[0] = rhs[0] / diag;
    for i in 1..n {
        let den = diag - off * c[i - 1];
        c[i] = off / den;
        d[i] = (rhs[i] - off * d[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    let mut path = vec![x0];
    path.extend(x);
    path.push(x1);
    // Midpoint rule for the potential keeps the scheme second order.
    path.windows(2)
        .map(|w| {
            let v = (w[1] - w[0]) / tau;
            let xm2 = 0.5 * (w[0] * w[0] + w[1] * w[1]);
            tau * (0.5 * m * v * v - 0.5 * m * omega * omega * xm2)
        })
        .sum()
}

#[test]
fn free_action_is_quadratic() {
    let p = PotentialSpec::free(2.0).unwrap();
    let s = euler_lagrange_action(&p, [3.0, -1.0], 1.5, [1.0, 1.0]).unwrap();
    assert!((s - 2.0 * 8.0 / 3.0).abs() < 1e-14);
}

#[test]
fn harmonic_quarter_period_from_origin_is_zero() {
    let p = PotentialSpec::harmonic(1.0, 1.0).unwrap();
    let s = euler_lagrange_action(&p, [1.0, 0.0], PI / 2.0, [0.0, 0.0]).unwrap();
    assert!(s.abs() < 1e-15);
}

#[test]
fn harmonic_action_matches_discrete_minimum() {
    let (m, w) = (1.3, 0.8);
    let p = PotentialSpec::harmonic(m, w).unwrap();
    for &(x0, x1, t) in &[(0.3, 1.1, 1.0), (-0.7, 0.4, 2.5), (1.0, 1.0, 3.5)] {
        let exact = euler_lagrange_action(&p, [x1, 0.0], t, [x0, 0.0]).unwrap();
        let coarse = discrete_action(m, w, x0, x1, t, 500);
        let fine = discrete_action(m, w, x0, x1, t, 1000);
        // Richardson-extrapolated oracle.
        let oracle = (4.0 * fine - coarse) / 3.0;
        assert!((exact - oracle).abs() < 1e-8 * (1.0 + exact.abs()), "{exact} vs {oracle}");
    }
}

#[test]
fn linear_action_matches_discrete_minimum() {
    // Uniform force: the true path is a parabola, so the discrete action
    // with the exact path nodes gives the oracle.
    let (m, k, t) = (0.7, 1.9, 1.4);
    let p = PotentialSpec::linear(m, [k, 0.0]).unwrap();
    let (x0, x1) = (-0.4, 2.0);
    let v0 = (x1 - x0) / t - 0.5 * k * t / m;
    let n = 20000;
    let tau = t / n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let tm = (i as f64 + 0.5) * tau;
        let x = x0 + v0 * tm + 0.5 * k * tm * tm / m;
        let v = v0 + k * tm / m;
        s += tau * (0.5 * m * v * v + k * x);
    }
    let exact = euler_lagrange_action(&p, [x1, 0.0], t, [x0, 0.0]).unwrap();
    assert!((exact - s).abs() < 1e-8, "{exact} vs {s}");
}

#[test]
fn action_errors() {
    let p = PotentialSpec::harmonic(1.0, 2.0).unwrap();
    assert!(matches!(euler_lagrange_action(&p, [1.0, 0.0], PI / 2.0, [0.0, 0.0]), Err(Error::FocalPoint { .. })));
    assert!(matches!(euler_lagrange_action(&p, [1.0, 0.0], 0.0, [0.0, 0.0]), Err(Error::DegenerateTime)));
    let f = PotentialSpec::free(1.0).unwrap();
    assert!(matches!(euler_lagrange_action(&f, [1.0, 0.0], -1.0, [0.0, 0.0]), Err(Error::DegenerateTime)));
}

#[test]
fn delta_min_gives_elementary_solution_on_nodes() {
    let g = line(4.0, 65);
    for p in [PotentialSpec::free(1.0).unwrap(), PotentialSpec::linear(1.0, [0.3, 0.0]).unwrap(), PotentialSpec::harmonic(1.0, 1.0).unwrap()] {
        let x0 = g.node(20);
        let s0 = ActionField::delta_min(g.clone(), x0).unwrap();
        let s = hopf_lax_field(&s0, &p, 0.9).unwrap();
        for (i, x) in g.nodes().enumerate() {
            assert_eq!(s.values()[i], euler_lagrange_action(&p, x, 0.9, x0).unwrap());
        }
    }
    let free = PotentialSpec::free(1.0).unwrap();
    let s0 = ActionField::delta_min(g.clone(), [0.0, 0.0]).unwrap();
    let s = hopf_lax_field(&s0, &free, 2.0).unwrap();
    for (i, x) in g.nodes().enumerate() {
        assert!((s.values()[i] - x[0] * x[0] / 4.0).abs() < 1e-15);
    }
}

#[test]
fn delta_min_uses_infinity() {
    let g = line(1.0, 9);
    let s0 = ActionField::delta_min(g.clone(), g.node(4)).unwrap();
    assert_eq!(s0.values().iter().filter(|v| v.is_infinite()).count(), 8);
    assert!(matches!(ActionField::new(g.clone(), vec![f64::INFINITY; 9], 0.0), Err(Error::AllInfinite)));
    assert!(ActionField::new(g, vec![f64::NEG_INFINITY; 9], 0.0).is_err());
}

/// Independent closed form of the linear-phase action: minimize
/// `m v x0 + S_el(x, t; x0)` over `x0` by golden-section search.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b))
}

#[test]
fn linear_phase_closed_form_to_1e10() {
    let (m, v, k, t) = (1.0, 0.8, 0.6, 1.7);
    let p = PotentialSpec::linear(m, [k, 0.0]).unwrap();
    let g = line(5.0, 101);
    let s0 = ActionField::linear(g.clone(), m, [v, 0.0]).unwrap();
    let s = hopf_lax_linear(&s0, &p, t).unwrap();
    for (i, x) in g.nodes().enumerate() {
        let oracle = golden_min(|x0| m * v * x0 + euler_lagrange_action(&p, x, t, [x0, 0.0]).unwrap(), -50.0, 50.0);
        assert!((s.values()[i] - oracle).abs() < 1e-10, "node {i}: {} vs {oracle}", s.values()[i]);
    }
}

#[test]
fn exhaustive_path_is_second_order() {
    // The shift puts the minimizer a third of a cell off the 101-node
    // lattice, and halving the spacing keeps it a third off.
    let (m, k, t) = (1.0, 0.4, 1.0);
    let v = 0.08 * (8.0 + 1.0 / 3.0) - 0.5 * k * t * t / m;
    let p = PotentialSpec::linear(m, [k, 0.0]).unwrap();
    let err = |n: usize| {
        let g = line(4.0, n);
        let s0 = ActionField::linear(g.clone(), m, [v, 0.0]).unwrap();
        let s0 = ActionField::new(g.clone(), s0.values().to_vec(), 0.0).unwrap();
        let s = hopf_lax_field(&s0, &p, t).unwrap();
        let shift = v * t + 0.5 * k * t * t / m;
        g.nodes()
            .enumerate()
            .filter(|(_, x)| (x[0] - shift).abs() < 3.0)
            .map(|(i, x)| (s.values()[i] - linear_phase_action(&p, [v, 0.0], x, t).unwrap()).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2, e3) = (err(101), err(201), err(401));
    let o1 = (e1 / e2).log2();
    let o2 = (e2 / e3).log2();
    assert!(e1 > 0.0 && (1.7..2.3).contains(&o1) && (1.7..2.3).contains(&o2), "errors {e1} {e2} {e3}");
}

#[test]
fn monotone_walk_matches_exhaustive() {
    let g = line(3.0, 121);
    let s0 = ActionField::from_fn(g.clone(), 0.0, |x| 0.3 * x[0] * x[0] + 0.2 * x[0]).unwrap();
    for p in [PotentialSpec::free(1.0).unwrap(), PotentialSpec::linear(1.0, [0.5, 0.0]).unwrap(), PotentialSpec::harmonic(1.0, 1.0).unwrap()] {
        let a = hopf_lax_field(&s0, &p, 0.7).unwrap();
        let b = hopf_lax_field_monotone(&s0, &p, 0.7).unwrap();
        assert_eq!(a.values(), b.values());
    }
}

#[test]
fn tabulated_needs_exhaustive_delta_route() {
    let g = line(2.0, 16);
    let p = PotentialSpec::tabulated(1.0, g.clone(), vec![0.0; 16]).unwrap();
    let s0 = ActionField::delta_min(g.clone(), [0.0, 0.0]).unwrap();
    assert!(matches!(euler_lagrange_action(&p, [0.0, 0.0], 1.0, [1.0, 0.0]), Err(Error::Unsupported(_))));
    assert!(matches!(hopf_lax_field(&s0, &p, 1.0), Err(Error::Unsupported(_))));
}

#[test]
fn velocity_of_free_elementary_solution() {
    let g = line(4.0, 81);
    let s0 = ActionField::delta_min(g.clone(), [0.0, 0.0]).unwrap();
    let s = hopf_lax_field(&s0, &PotentialSpec::free(1.0).unwrap(), 2.0).unwrap();
    let v = velocity_field(&s, 1.0).unwrap();
    for (i, x) in g.nodes().enumerate() {
        assert!(v.valid[i]);
        // Central differences are exact on quadratics.
        assert!((v.values[i][0] - x[0] / 2.0).abs() < 1e-12);
    }
    let v0 = velocity_field(&s0, 1.0).unwrap();
    assert!(v0.valid.iter().all(|&ok| !ok));
}

#[test]
fn hopf_lax_satisfies_hamilton_jacobi() {
    // Residual of dS/dt + |S_x|^2 / 2m + V on interior nodes of an
    // exhaustive solve shrinks as the grid is refined.
    let p = PotentialSpec::harmonic(1.0, 1.0).unwrap();
    let residual = |n: usize| {
        let g = line(3.0, n);
        let s0 = ActionField::from_fn(g.clone(), 0.0, |x| 0.5 * x[0] * x[0] + x[0]).unwrap();
        let (t, dt) = (0.5, 1e-3);
        let a = hopf_lax_field(&s0, &p, t - dt).unwrap();
        let b = hopf_lax_field(&s0, &p, t + dt).unwrap();
        let c = hopf_lax_field(&s0, &p, t).unwrap();
        let v = velocity_field(&c, 1.0).unwrap();
        g.nodes()
            .enumerate()
            .filter(|(_, x)| x[0].abs() < 1.0)
            .map(|(i, x)| {
                let st = (b.values()[i] - a.values()[i]) / (2.0 * dt);
                (st + 0.5 * v.values[i][0] * v.values[i][0] + 0.5 * x[0] * x[0]).abs()
            })
            .fold(0.0, f64::max)
    };
    let (r1, r2) = (residual(201), residual(801));
    assert!(r2 < 0.5 * r1 && r2 < 1e-2, "{r1} {r2}");
}

#[test]
fn transport_gaussian_in_linear_potential() {
    let (sigma0, v, k, m, t) = (1.0, 1.0, 0.5, 1.0, 2.0);
    for g in [line(16.0, 512), Grid::plane(Axis::centered(12.0, 256).unwrap(), Axis::centered(12.0, 256).unwrap(), Boundary::Periodic).unwrap()] {
        let d = g.dims();
        let p = PotentialSpec::linear(m, [k, 0.0]).unwrap();
        let rho = DensityField::from_fn(g.clone(), 0.0, |x| gaussian_linear_density(d, sigma0, [-1.0, 0.0], [0.0; 2], [0.0; 2], m, x, 0.0)).unwrap();
        let s = ActionField::linear(g.clone(), m, [v, 0.0]).unwrap();
        let st = ClassicalEnsembleState::new(rho, s, p.clone()).unwrap();
        let out = classical_transport(&st, t, 20).unwrap();
        let c = -1.0 + v * t + 0.5 * k * t * t / m;
        let mean = out.rho.mean(0);
        let width = out.rho.variance(0).sqrt();
        assert!((mean - c).abs() < 1e-3 * c.abs(), "center {mean} vs {c}");
        assert!((width - sigma0).abs() < 1e-3 * sigma0, "width {width}");
        // Action follows the closed form.
        for (i, x) in g.nodes().enumerate().step_by(97) {
            let want = linear_phase_action(&p, [v, 0.0], x, t).unwrap();
            assert!((out.action.values()[i] - want).abs() < 1e-10);
        }
    }
}

#[test]
fn focusing_ensemble_hits_caustic() {
    // S0 = -m x^2 / 2T focuses every characteristic at t = T.
    let g = line(4.0, 128);
    let m = 1.0;
    let rho = DensityField::from_fn(g.clone(), 0.0, |x| (-x[0] * x[0]).exp()).unwrap();
    let s = ActionField::from_fn(g.clone(), 0.0, |x| -m * x[0] * x[0] / 2.0).unwrap();
    let st = ClassicalEnsembleState::new(rho, s, PotentialSpec::free(m).unwrap()).unwrap();
    assert!(classical_transport(&st, 0.5, 10).is_ok());
    assert!(matches!(classical_transport(&st, 1.5, 30), Err(Error::CausticDetected { .. })));
}

#[test]
fn harmonic_linear_phase_refuses_past_quarter_period() {
    let p = PotentialSpec::harmonic(1.0, 1.0).unwrap();
    assert!(linear_phase_action(&p, [1.0, 0.0], [0.5, 0.0], 1.0).is_ok());
    assert!(matches!(linear_phase_action(&p, [1.0, 0.0], [0.5, 0.0], 1.6), Err(Error::CausticDetected { .. })));
}
