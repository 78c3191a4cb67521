use approx::assert_relative_eq;
use gdnls_core::negative_direction::{
    beta_scan, build_psi, fit_rates, negativity_threshold, radius_sweep, solve_mu_nu, CutoffSpec,
};
use gdnls_core::profile::matched_grid;
use gdnls_core::{QuadratureSpec, WaveParams};

fn reference() -> WaveParams {
    WaveParams::new(1.5, 1.0).unwrap()
}

#[test]
fn coefficients_at_radius_fifty() {
    let mn = solve_mu_nu(&reference(), &CutoffSpec::new(50.0).unwrap(), &QuadratureSpec::adaptive()).unwrap();
    assert_relative_eq!(mn.nu, 2.0, max_relative = 1e-9);
    assert_relative_eq!(mn.mu, 4.560, max_relative = 1e-3);
    assert_relative_eq!(mn.diagnostics.mu_limit, 3.0, max_relative = 1e-9);
    assert_relative_eq!(mn.diagnostics.nu_limit, 2.0, epsilon = 1e-15);
    assert_relative_eq!(mn.diagnostics.nu_derivative_form, 2.159, max_relative = 1e-3);
}

#[test]
fn psi_is_orthogonal_and_negative() {
    let p = reference();
    let g = matched_grid(&p, 400.0, 8192).unwrap();
    let nd = build_psi(&p, &CutoffSpec::new(50.0).unwrap(), &g, &QuadratureSpec::adaptive()).unwrap();
    assert!(nd.orth_mass.abs() < 1e-7 && nd.orth_momentum.abs() < 1e-7);
    assert_relative_eq!(nd.quad_form_value, -97.0006, max_relative = 1e-5);
    assert_relative_eq!(nd.quad_form_grid, nd.quad_form_value, max_relative = 1e-5);
}

#[test]
fn small_boxes_are_rejected() {
    let p = reference();
    let g = matched_grid(&p, 150.0, 2048).unwrap();
    assert!(build_psi(&p, &CutoffSpec::new(50.0).unwrap(), &g, &QuadratureSpec::adaptive()).is_err());
    assert!(CutoffSpec::new(-1.0).is_err());
}

#[test]
fn sweep_approaches_the_limits() {
    let rows = radius_sweep(&reference(), &[25.0, 50.0, 100.0], &QuadratureSpec::adaptive()).unwrap();
    assert!(rows.windows(2).all(|w| w[1].mu < w[0].mu && w[1].mu > 3.0));
    assert!(rows.iter().all(|r| r.quad_form < 0.0));
    assert_eq!(negativity_threshold(&rows), Some(25.0));
}

#[test]
fn deviations_decay_at_the_predicted_rate() {
    let fit = fit_rates(&reference(), &[25.0, 50.0, 100.0, 200.0, 400.0], &QuadratureSpec::adaptive()).unwrap();
    assert!(fit.degenerate.is_none());
    assert!((fit.slope_mass + 1.0 / 3.0).abs() < 0.01, "{fit:?}");
    assert!((fit.slope_momentum + 1.0 / 3.0).abs() < 0.01, "{fit:?}");
    assert!(fit_rates(&reference(), &[25.0, 50.0, 100.0], &QuadratureSpec::adaptive()).is_err());
}

#[test]
fn small_steps_lower_the_action() {
    let p = reference();
    let g = matched_grid(&p, 400.0, 8192).unwrap();
    let nd = build_psi(&p, &CutoffSpec::new(50.0).unwrap(), &g, &QuadratureSpec::adaptive()).unwrap();
    let scan = beta_scan(&nd, &[-0.01, 0.0, 0.01], &QuadratureSpec::adaptive()).unwrap();
    assert!(scan[0].1 < 0.0 && scan[2].1 < 0.0);
    assert_eq!(scan[1].1, 0.0);
    let grid = beta_scan(&nd, &[0.01], &QuadratureSpec::grid()).unwrap();
    assert_relative_eq!(grid[0].1, scan[2].1, max_relative = 1e-6);
}
