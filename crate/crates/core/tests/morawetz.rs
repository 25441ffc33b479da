//! Interaction Morawetz action: symmetries, refinement and the monotonicity
//! audit on short runs.

use std::sync::Arc;

use nls_core::dynamics::{evolve, DiagnosticsRequest, SolverConfig};
use nls_core::morawetz::{
    action_scale, interaction_action, monotonicity_audit, MorawetzConfig, DEFAULT_QUADRATURE_REL,
};
use nls_core::spectral::{make_grid, ComplexField, Grid1D};
use nls_core::Complex64;

fn chirped(grid: &Arc<Grid1D>) -> ComplexField {
    ComplexField::from_fn(grid.clone(), 0.0, |x| {
        Complex64::from_polar((-x * x).exp(), 0.8 * x * x) + 0.5 * (-(x - 1.0) * (x - 1.0)).exp()
    })
    .unwrap()
}

fn window(n_sub: usize) -> MorawetzConfig {
    MorawetzConfig {
        window: Some(4.0),
        ..MorawetzConfig::with_n_sub(n_sub)
    }
}

#[test]
fn action_is_translation_invariant() {
    let g = make_grid(40.0, 512).unwrap();
    let u = chirped(&g);
    let cfg = window(16);
    let a = interaction_action(&u, &cfg).unwrap();
    let b = interaction_action(&u.shifted(40), &cfg).unwrap();
    assert!((a - b).abs() < 1e-10 * action_scale(&u));
}

#[test]
fn action_converges_under_n_sub_refinement() {
    let g = make_grid(40.0, 512).unwrap();
    let u = chirped(&g);
    let coarse = interaction_action(&u, &window(24)).unwrap();
    let fine = interaction_action(&u, &window(36)).unwrap();
    assert!(fine.abs() > 1e-3 * action_scale(&u));
    assert!(
        (coarse - fine).abs() < 1e-2 * fine.abs(),
        "{coarse} vs {fine}"
    );
}

#[test]
fn conjugation_flips_the_sign() {
    let g = make_grid(40.0, 512).unwrap();
    let u = chirped(&g);
    let cfg = window(16);
    let a = interaction_action(&u, &cfg).unwrap();
    let b = interaction_action(&u.conj(), &cfg).unwrap();
    assert!((a + b).abs() < 1e-10 * action_scale(&u));
}

#[test]
fn short_nonlinear_run_is_monotone() {
    let g = make_grid(40.0, 512).unwrap();
    let u0 = chirped(&g);
    let cfg = SolverConfig::with_degree(3, 1e-3, 0.2, 0.05).unwrap();
    let request = DiagnosticsRequest {
        morawetz: Some(MorawetzConfig {
            window: Some(5.0),
            ..MorawetzConfig::with_n_sub(24)
        }),
        ..Default::default()
    };
    let traj = evolve(&u0, &cfg, &request).unwrap();
    let rep = monotonicity_audit(&traj, DEFAULT_QUADRATURE_REL).unwrap();
    assert!(rep.min_defect >= -rep.tol_mono);
    assert!(rep.integrated.passed);
    assert!(rep.passed);
}

#[test]
fn over_budget_is_rejected_before_stepping() {
    let g = make_grid(40.0, 512).unwrap();
    let cfg = MorawetzConfig {
        budget: 1 << 20,
        ..MorawetzConfig::with_n_sub(48)
    };
    assert!(cfg.validate(&g).is_err());
    let solver = SolverConfig::with_degree(3, 1e-3, 0.1, 0.05).unwrap();
    let request = DiagnosticsRequest {
        morawetz: Some(cfg),
        ..Default::default()
    };
    assert!(evolve(&chirped(&g), &solver, &request).is_err());
}
