//! Property tests over random band-limited fields.

use std::sync::Arc;

use nls_core::dynamics::{free_propagate, nonlinear_phase_step, strang_step, SolverConfig};
use nls_core::functionals::mass;
use nls_core::imethod::m_symbol;
use nls_core::scattering::distance_matrix;
use nls_core::spectral::{make_grid, sobolev_norm, ComplexField, Grid1D};
use nls_core::Complex64;
use proptest::prelude::*;

fn grid() -> Arc<Grid1D> {
    make_grid(20.0, 128).unwrap()
}

/// A sum of up to four Gaussian packets with random centres, widths, boosts.
fn field() -> impl Strategy<Value = ComplexField> {
    prop::collection::vec((-3.0..3.0f64, 0.5..1.5f64, -3.0..3.0f64, 0.1..1.0f64), 1..4).prop_map(
        |packets| {
            ComplexField::from_fn(grid(), 0.0, |x| {
                packets
                    .iter()
                    .map(|&(c, w, v, a)| {
                        Complex64::from_polar(a * (-(x - c) * (x - c) / (w * w)).exp(), v * x)
                    })
                    .sum()
            })
            .unwrap()
        },
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn free_flow_is_unitary_on_every_hs(u in field(), t in -2.0..2.0f64, s in 0.0..2.0f64) {
        let v = free_propagate(&u, t);
        prop_assert!(rel(mass(&v), mass(&u)) < 1e-12);
        let (a, b) = (sobolev_norm(&v, s, false).unwrap(), sobolev_norm(&u, s, false).unwrap());
        prop_assert!(rel(a, b) < 1e-12);
    }

    #[test]
    fn free_flow_inverts(u in field(), t in -2.0..2.0f64) {
        let back = free_propagate(&free_propagate(&u, t), -t);
        for (a, b) in back.samples().iter().zip(u.samples()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn phase_step_keeps_modulus(u in field(), dt in 0.0..0.1f64, p in 1.0..5.0f64) {
        let v = nonlinear_phase_step(&u, dt, p);
        for (a, b) in v.samples().iter().zip(u.samples()) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-14 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn strang_step_conserves_mass(u in field(), k in 1u32..5) {
        let cfg = SolverConfig::with_degree(k, 1e-3, 1e-3, 1e-3).unwrap();
        let v = strang_step(&u, 1e-3, &cfg).unwrap().field;
        prop_assert!(rel(mass(&v), mass(&u)) < 1e-12);
    }

    #[test]
    fn gauge_and_conjugation(u in field(), theta in 0.0..6.3f64, s in 0.0..2.0f64) {
        let g = u.scaled(Complex64::from_polar(1.0, theta));
        let n = sobolev_norm(&u, s, false).unwrap();
        prop_assert!(rel(sobolev_norm(&g, s, false).unwrap(), n) < 1e-12);
        prop_assert!(rel(sobolev_norm(&u.conj(), s, false).unwrap(), n) < 1e-12);
    }

    #[test]
    fn i_symbol_shape(n in 1.5..200.0f64, s in 0.05..0.95f64, a in 0.0..1e3f64, b in 0.0..1e3f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (ml, mh) = (m_symbol(lo, n, s), m_symbol(hi, n, s));
        prop_assert!(mh > 0.0 && ml <= 1.0);
        prop_assert!(mh <= ml * (1.0 + 1e-14));
        prop_assert!(hi * mh >= lo * ml * (1.0 - 1e-12));
        prop_assert_eq!(m_symbol(-a, n, s), m_symbol(a, n, s));
    }

    #[test]
    fn distance_matrix_is_a_metric(fields in prop::collection::vec(field(), 2..5), s in 0.0..1.5f64) {
        let d = distance_matrix(&fields, s).unwrap();
        let m = fields.len();
        for i in 0..m {
            prop_assert_eq!(d[i][i], 0.0);
            for j in 0..m {
                prop_assert_eq!(d[i][j], d[j][i]);
                for k in 0..m {
                    prop_assert!(d[i][k] <= d[i][j] + d[j][k] + 1e-12);
                }
            }
        }
    }
}
