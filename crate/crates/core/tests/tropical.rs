use pilotwave_core::classical_hj::{minplus_inner, ActionField};
use pilotwave_core::tropical::{inner, MinPlus};
use pilotwave_core::{Axis, Boundary, Grid};

#[test]
fn identities() {
    let a = MinPlus(3.5);
    assert_eq!(a + MinPlus::ZERO, a);
    assert_eq!(a * MinPlus::ONE, a);
    assert_eq!(a * MinPlus::ZERO, MinPlus::ZERO);
    assert_eq!(MinPlus(1.0) + MinPlus(2.0), MinPlus(1.0));
    assert_eq!(MinPlus(1.0) * MinPlus(2.0), MinPlus(3.0));
}

#[test]
fn delta_min_sifts() {
    let g = Grid::line(Axis::centered(2.0, 41).unwrap(), Boundary::Periodic).unwrap();
    let x0 = g.node(13);
    let f = ActionField::delta_min(g.clone(), x0).unwrap();
    let h = ActionField::from_fn(g.clone(), 0.0, |x| (x[0] * 3.0).sin() + x[0] * x[0]).unwrap();
    assert_eq!(minplus_inner(&f, &h).unwrap(), (x0[0] * 3.0).sin() + x0[0] * x0[0]);
}

#[test]
fn inner_of_two_parabolas() {
    // inf_x (x - 1)^2 + (x + 1)^2 = 2 at x = 0.
    let xs: Vec<f64> = (0..201).map(|i| -2.0 + 0.02 * i as f64).collect();
    let f: Vec<f64> = xs.iter().map(|x| (x - 1.0) * (x - 1.0)).collect();
    let g: Vec<f64> = xs.iter().map(|x| (x + 1.0) * (x + 1.0)).collect();
    assert!((inner(&f, &g) - 2.0).abs() < 1e-12);
}
