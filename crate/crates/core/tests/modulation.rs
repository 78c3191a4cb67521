use approx::assert_relative_eq;
use gdnls_core::functionals::mass_closed;
use gdnls_core::functionals::a_sigma;
use gdnls_core::modulation::{
    a_functional, determinant, q_at_soliton, soliton_jacobian, solve_modulation, tube_distance,
};
use gdnls_core::negative_direction::{build_psi, CutoffSpec};
use gdnls_core::profile::{matched_grid, profile_value, sample};
use gdnls_core::{ComplexField, ProfileKind, QuadratureSpec, WaveParams};
use num_complex::Complex64;

fn reference() -> WaveParams {
    WaveParams::new(1.5, 1.0).unwrap()
}

#[test]
fn jacobian_determinant_matches_closed_form() {
    for (s, c) in [(1.5, 1.0), (1.2, 0.5), (1.8, 2.0)] {
        let p = WaveParams::new(s, c).unwrap();
        let m = mass_closed(&p, a_sigma(s).unwrap());
        let det = determinant(&soliton_jacobian(&p, &QuadratureSpec::adaptive()).unwrap());
        assert_relative_eq!(det, -s * (2.0 - s) * c * c * m * m, max_relative = 1e-8);
    }
}

#[test]
fn planted_closed_form_translate_is_recovered() {
    let p = reference();
    let g = matched_grid(&p, 400.0, 8192).unwrap();
    let (t0, y0) = (2.1, -3.4);
    let rot = Complex64::from_polar(1.0, t0);
    let u = ComplexField::from_fn(g, |x| rot * profile_value(&p, ProfileKind::Phi, x - y0)).unwrap();
    let fit = solve_modulation(&u, &p, (0.0, 0.0)).unwrap();
    assert!((fit.theta - t0).abs() < 1e-8, "{fit:?}");
    assert!((fit.y - y0).abs() < 1e-8, "{fit:?}");
}

#[test]
fn far_translates_are_found_by_the_lattice() {
    let p = reference();
    let g = matched_grid(&p, 200.0, 4096).unwrap();
    let u = sample(&p, &g, ProfileKind::Phi)
        .fourier_shift(90.0)
        .scale(Complex64::from_polar(1.0, 2.5));
    let d = tube_distance(&u, &p).unwrap();
    assert!(d.converged);
    assert!(d.distance < 1e-6, "{d:?}");
    assert!((d.fit.y - 90.0).abs() < 1e-6);
}

#[test]
fn direction_at_the_soliton_is_psi() {
    let p = reference();
    let g = matched_grid(&p, 400.0, 8192).unwrap();
    let nd = build_psi(&p, &CutoffSpec::new(50.0).unwrap(), &g, &QuadratureSpec::adaptive()).unwrap();
    let q = q_at_soliton(&nd, &QuadratureSpec::adaptive()).unwrap();
    assert!(q.pairings.iter().all(|v| v.abs() < 1e-7));
    assert!(q.field.sub(&nd.psi).unwrap().max_abs() < 1e-6);
    let phi = sample(&p, &g, ProfileKind::Phi);
    assert!(a_functional(&phi, &nd).unwrap().abs() < 1e-5);
}
