//! I-operator estimates, rescaling laws and a small increment sweep.

use nls_core::dynamics::SolverConfig;
use nls_core::functionals::energy;
use nls_core::functionals::mass;
use nls_core::imethod::{
    apply_i, i_property_audit, increment_sweep, modified_energy, rescale, IMultiplier,
    RescaleParams, SweepOptions,
};
use nls_core::spectral::{make_grid, sobolev_norm, ComplexField};
use nls_core::Complex64;

fn packet(n: usize) -> ComplexField {
    let g = make_grid(40.0, n).unwrap();
    ComplexField::from_fn(g, 0.0, |x| {
        Complex64::from_polar((-4.0 * x * x).exp(), 6.0 * x)
    })
    .unwrap()
}

#[test]
fn sandwich_ratios_are_bounded() {
    let u = packet(1024);
    for n in [8.0, 16.0, 32.0, 64.0] {
        for s in [0.3, 0.7] {
            let rep = i_property_audit(&u, &IMultiplier::new(n, s).unwrap(), s).unwrap();
            assert!(rep.i1.unwrap() <= 1.0);
            assert!(rep.i3_lower.unwrap() <= 1.0 + 1e-12);
            assert!(rep.i3_upper.unwrap() <= 1.0 + 1e-12);
            assert!(rep.i4.unwrap() <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn i_is_identity_below_n() {
    let g = make_grid(40.0, 512).unwrap();
    let low = ComplexField::from_fn(g, 0.0, |x| Complex64::new((-x * x / 4.0).exp(), 0.0)).unwrap();
    let im = IMultiplier::new(64.0, 0.5).unwrap();
    let i = apply_i(&low, &im);
    for (a, b) in i.samples().iter().zip(low.samples()) {
        assert!((a - b).norm() < 1e-12);
    }
    let e = energy(&low, 3.0).total;
    assert!((modified_energy(&low, &im, 3.0) - e).abs() < 1e-12 * e);
}

#[test]
fn rescaling_exponents() {
    let u = packet(512);
    for p in [2.0, 3.0, 4.0] {
        let sc = 0.5 - 1.0 / p;
        for lambda in [2.0, 4.0] {
            let v = rescale(&u, &RescaleParams::new(lambda, p).unwrap()).unwrap();
            let m = mass(&v) / mass(&u);
            assert!((m / lambda.powf(1.0 - 2.0 / p) - 1.0).abs() < 1e-10);
            for s in [sc, 0.5, 1.0] {
                let r = sobolev_norm(&v, s, true).unwrap() / sobolev_norm(&u, s, true).unwrap();
                assert!((r / lambda.powf(sc - s) - 1.0).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn sweep_rows_are_consistent() {
    let g = make_grid(40.0, 1024).unwrap();
    let u0 = ComplexField::from_fn(g, 0.0, |x| Complex64::new(0.8 * (-x * x).exp(), 0.0)).unwrap();
    let cfg = SolverConfig::with_degree(3, 1e-3, 0.05, 0.01).unwrap();
    let rep = increment_sweep(&u0, 3.0, &[4.0, 8.0], &cfg, &SweepOptions::default()).unwrap();
    assert_eq!(rep.rows.len(), 2);
    for row in &rep.rows {
        assert!(row.lambda >= 1.0);
        assert!(row.e0 <= 1.0 + 1e-12 || row.lambda > 1.0);
        assert!(row.sup_e >= row.e0);
        assert!((row.increment - (row.sup_e - row.e0)).abs() <= 1e-15 * row.e0.max(1.0));
        assert!(row.noise_floor > 0.0);
    }
}
